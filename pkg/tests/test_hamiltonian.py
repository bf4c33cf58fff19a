import numpy as np
import pytest
from hypothesis import given, strategies as st

from optorepeater.fock import (
    AtomLevel,
    BasisKet,
    StateVector,
    annihilation_op,
    apply,
    atomic_transition_op,
    build_basis,
    commutator,
)
from optorepeater.hamiltonian import (
    HarmonicTerm,
    ProtocolParameters,
    ResonanceError,
    _bracket_pieces,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_terms,
    harmonic_decomposition,
    interaction_picture_check,
    james_effective,
    reconstruct,
    verify_effective,
)

L1, L2, L3 = AtomLevel.L1, AtomLevel.L2, AtomLevel.L3

PROTO = ProtocolParameters(omegaM=0.5, G=2.0)


@pytest.fixture(scope="module")
def reg2():
    return build_basis(2, 2)


def test_parameters_defaults_and_protocol_identifications():
    p = ProtocolParameters(omegaM=0.5, G=2.0)
    assert p.Gp == 2.0 and p.lambda1p == 1.0 and p.omega == (0.5, 0.5)
    with pytest.raises(ValueError):
        ProtocolParameters(omegaM=0.5, G=2.0, Gp=1.0)
    with pytest.raises(ValueError):
        ProtocolParameters(omegaM=0.0, G=2.0)
    with pytest.raises(ValueError):
        ProtocolParameters(omegaM=0.5, G=float("nan"))


def test_resonance_enforced_in_protocol_mode():
    good = PROTO.with_default_frequencies()
    assert max(good.resonance_residuals()) < 1e-12
    with pytest.raises(ResonanceError):
        ProtocolParameters(omegaM=0.5, G=2.0, omega_tilde=(6.0, 7.0, 0.0), Omega=(5.0, 6.0))
    detuned = ProtocolParameters(
        omegaM=0.5, G=2.0, omega_tilde=(6.0, 7.0, 0.0), Omega=(5.0, 6.0), protocol=False
    )
    assert detuned.resonance_residuals() == pytest.approx((0.5, 0.5))


def test_zero_couplings_give_zero_interaction(reg2):
    p = ProtocolParameters(omegaM=0.5, G=0.0, lambda1=0.0, lambda2=0.0).with_default_frequencies()
    pair = build_full_hamiltonian(p, reg2, (0, 1))
    assert pair.H1.max_abs() == 0


def test_free_hamiltonian_on_ground_state(reg2):
    p = PROTO.with_default_frequencies(lower=-0.75)
    pair = build_full_hamiltonian(p, reg2, (0, 1))
    g = StateVector.basis_state(reg2, BasisKet.from_label("0,0;0,0;3,3"))
    np.testing.assert_allclose(apply(pair.H0, g).amplitudes, 2 * (-0.75) * g.amplitudes)


def test_full_hamiltonian_hermitian(reg2):
    pair = build_full_hamiltonian(PROTO.with_default_frequencies(), reg2, (0, 1))
    assert pair.H1.hermiticity_residual() <= 1e-14
    assert pair.H0.hermiticity_residual() <= 1e-14


def test_full_hamiltonian_requires_frequencies(reg2):
    with pytest.raises(ValueError):
        build_full_hamiltonian(PROTO, reg2, (0, 1))
    with pytest.raises(ValueError):
        build_full_hamiltonian(PROTO.with_default_frequencies(), reg2, (0, 0))


def test_single_harmonic(reg2):
    terms = harmonic_decomposition(PROTO, reg2, (0, 1))
    assert len(terms) == 1
    assert terms[0].frequency == PROTO.omegaM


def test_decomposition_without_g_and_lambda2(reg2):
    p = ProtocolParameters(omegaM=0.5, G=0.0, lambda2=0.0)
    (term,) = harmonic_decomposition(p, reg2, (0, 1))
    a1 = annihilation_op("a1", reg2)
    expected = a1 @ (
        atomic_transition_op(0, L1, L3, reg2) + atomic_transition_op(1, L1, L3, reg2)
    )
    # h multiplies exp(-i w t), so it is the raising half
    assert (term.operator - expected.dag).max_abs() == 0


def test_reconstruction_at_zero_matches_interaction(reg2):
    pair = build_full_hamiltonian(PROTO.with_default_frequencies(), reg2, (0, 1))
    terms = harmonic_decomposition(PROTO, reg2, (0, 1))
    assert (pair.H1 - reconstruct(terms, 0.0)).max_abs() <= 1e-12
    report = interaction_picture_check(pair, terms, [0.0])
    assert report.max_deviation <= 1e-12


def test_interaction_picture_random_times(reg2):
    rng = np.random.default_rng(3)
    p = ProtocolParameters(omegaM=1.0, G=1.0)
    pair = build_full_hamiltonian(p.with_default_frequencies(optical=(3.0, 4.5)), reg2, (0, 1))
    terms = harmonic_decomposition(p, reg2, (0, 1))
    report = interaction_picture_check(pair, terms, rng.uniform(0, 10.0, 6))
    assert report.max_deviation <= 1e-10


def test_detuned_frequencies_reported_not_raised(reg2):
    detuned = ProtocolParameters(
        omegaM=0.5, G=2.0, omega_tilde=(6.0, 7.0, 0.0), Omega=(5.0, 6.0), protocol=False
    )
    pair = build_full_hamiltonian(detuned, reg2, (0, 1))
    terms = harmonic_decomposition(PROTO, reg2, (0, 1))
    report = interaction_picture_check(pair, terms, [0.0, 1.3, 4.0])
    assert report.deviations[0] <= 1e-12
    assert report.max_deviation > 1e-3


def test_james_single_term_is_direct_commutator():
    reg = build_basis(2, 1)
    lam, w = 0.7, 1.9
    h = lam * (annihilation_op("a1", reg) @ atomic_transition_op(0, L1, L3, reg)).dag
    out = james_effective([HarmonicTerm(h, w)])
    hd = h.to_dense()
    expected = (hd.conj().T @ hd - hd @ hd.conj().T) / w
    np.testing.assert_allclose(out.to_dense(), expected, atol=1e-14)


def test_james_equal_frequency_terms_include_cross_commutators():
    reg = build_basis(2, 1)
    w = 0.8
    h1 = (annihilation_op("a1", reg) @ atomic_transition_op(0, L1, L3, reg)).dag
    h2 = 0.4 * (annihilation_op("a2", reg) @ atomic_transition_op(0, L2, L3, reg)).dag
    out = james_effective([HarmonicTerm(h1, w), HarmonicTerm(h2, w)])
    s = h1 + h2
    expected = (1.0 / w) * commutator(s.dag, s)
    assert (out - expected).max_abs() <= 1e-14


def test_james_drops_non_secular_pairs():
    reg = build_basis(1, 1)
    h1 = annihilation_op("a1", reg).dag
    h2 = annihilation_op("b1", reg).dag
    out = james_effective([HarmonicTerm(h1, 1.0), HarmonicTerm(h2, 3.0)])
    expected = commutator(h1.dag, h1) + (1 / 3.0) * commutator(h2.dag, h2)
    assert (out - expected).max_abs() <= 1e-14


def test_harmonic_term_needs_positive_frequency():
    reg = build_basis(0, 1)
    with pytest.raises(ValueError):
        HarmonicTerm(atomic_transition_op(0, L1, L3, reg), 0.0)


def test_effective_hamiltonian_examples():
    reg = build_basis(2, 4)
    p = ProtocolParameters(omegaM=0.5, G=2.0)
    H = build_effective_hamiltonian(p, reg, (1, 2))
    ground = BasisKet.from_label("0,0;0,0;1,3,3,1")
    one = BasisKet.from_label("1,0;1,0;1,3,3,3")
    two = BasisKet.from_label("2,0;2,0;3,3,3,3")
    col = H.matrix[:, reg.index(ground)]
    assert col.nnz == 0 or abs(col).max() == 0
    assert H.element(one, one) == pytest.approx(-(2 + 4) / 0.5)
    assert H.element(two, two) == pytest.approx(-4 * (1 + 4) / 0.5)
    assert H.hermiticity_residual() <= 1e-14


def test_effective_terms_each_hermitian(reg2):
    for name, term in effective_terms(PROTO, reg2, (0, 1)).items():
        assert term.hermiticity_residual() <= 1e-14, name


def test_bracket_pieces_sum_to_decomposition(reg2):
    pieces = _bracket_pieces(PROTO, reg2, (0, 1))
    total = pieces["atom_field_1"] + pieces["atom_field_2"] + pieces["optomechanical"]
    (term,) = harmonic_decomposition(PROTO, reg2, (0, 1))
    assert (term.operator - total.dag).max_abs() == 0


@pytest.fixture(scope="module")
def reg4():
    return build_basis(4, 2)


def test_verify_effective_without_g(reg4):
    rep = verify_effective(ProtocolParameters(omegaM=0.5, G=0.0), reg4, (0, 1))
    assert rep.max_deviation <= 1e-10
    assert rep.interior_states > 0


def test_verify_effective_protocol_parameters(reg4):
    rep = verify_effective(PROTO, reg4, (0, 1))
    assert rep.max_deviation <= 1e-10
    assert rep.mismatched_terms == []
    assert rep.constant_shift is None


def test_verify_effective_flags_tampered_term(reg4, monkeypatch):
    import optorepeater.hamiltonian as ham

    original = ham.effective_terms

    def tampered(*args, **kwargs):
        terms = original(*args, **kwargs)
        terms["kerr"] = 1.1 * terms["kerr"]
        return terms

    monkeypatch.setattr(ham, "effective_terms", tampered)
    rep = ham.verify_effective(PROTO, reg4, (0, 1))
    assert rep.max_deviation > 1e-3
    assert rep.mismatched_terms == ["kerr"]


def test_verify_effective_no_interior(reg4):
    rep = verify_effective(PROTO, reg4, (0, 1), interior_margin=reg4.n_max + 1)
    assert rep.interior_states == 0
    assert rep.note == "no interior states"


@given(
    w=st.floats(0.2, 20.0),
    G=st.floats(-3.0, 3.0),
    lam2=st.floats(0.0, 2.0),
)
def test_derivation_property(w, G, lam2):
    reg = build_basis(3, 2)
    p = ProtocolParameters(omegaM=w, G=G, lambda2=lam2)
    rep = verify_effective(p, reg, (0, 1))
    scale = max(1.0, (1 + lam2**2 + G**2) / w)
    assert rep.max_deviation <= 1e-12 * scale * 10
