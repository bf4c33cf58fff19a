"""Full, interaction-picture and effective Hamiltonians for one cavity.

All frequencies and couplings are in units of the atom-field coupling
lambda1 (so ``lambda1 = 1`` by default). Atom indices are 0-based
positions inside a :class:`~optorepeater.fock.BasisRegistry`; in the
four-atom protocol blocks the interacting pair is ``(1, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .fock import (
    AtomLevel,
    BasisRegistry,
    OperatorMatrix,
    annihilation_op,
    atomic_transition_op,
    commutator,
    creation_op,
    identity_op,
    matrix_exponential,
    number_op,
    zero_op,
)

L1, L2, L3 = AtomLevel.L1, AtomLevel.L2, AtomLevel.L3

RESONANCE_TOL = 1e-12


class ResonanceError(ValueError):
    """Bare frequencies violate the resonance conditions."""


@dataclass(frozen=True)
class ProtocolParameters:
    """Couplings and frequencies of one optomechanical cavity.

    Primed couplings default to their unprimed partners. In protocol mode
    (the default) the identifications lambda_i = lambda_i', G = G' and
    omega_1 = omega_2 = omegaM are enforced, and any supplied bare
    frequencies must satisfy

        omega_tilde[0] - omega_tilde[2] - Omega[0] = omegaM
        omega_tilde[1] - omega_tilde[2] - Omega[1] = omegaM
    """

    omegaM: float
    G: float
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda1p: float | None = None
    lambda2p: float | None = None
    Gp: float | None = None
    omega_tilde: tuple[float, float, float] | None = None
    Omega: tuple[float, float] | None = None
    omega: tuple[float, float] | None = None
    protocol: bool = True

    def __post_init__(self):
        for name in ("lambda1p", "lambda2p"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(self, name[:-1]))
        if self.Gp is None:
            object.__setattr__(self, "Gp", self.G)
        if self.omega is None:
            object.__setattr__(self, "omega", (self.omegaM, self.omegaM))
        for name in ("omega_tilde", "Omega", "omega"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in value))

        scalars = ("omegaM", "G", "Gp", "lambda1", "lambda2", "lambda1p", "lambda2p")
        for name in scalars:
            value = getattr(self, name)
            if isinstance(value, complex) or not math.isfinite(float(value)):
                raise ValueError(f"{name} must be a finite real number")
            object.__setattr__(self, name, float(value))
        if self.omegaM <= 0:
            raise ValueError("omegaM must be positive")
        if (self.omega_tilde is None) != (self.Omega is None):
            raise ValueError("omega_tilde and Omega must be given together")
        if self.omega_tilde is not None and len(self.omega_tilde) != 3:
            raise ValueError("omega_tilde needs three atomic frequencies")
        if self.Omega is not None and len(self.Omega) != 2:
            raise ValueError("Omega needs two optical frequencies")

        if self.protocol:
            if self.lambda1p != self.lambda1 or self.lambda2p != self.lambda2:
                raise ValueError("protocol mode requires lambda_i' == lambda_i")
            if self.Gp != self.G:
                raise ValueError("protocol mode requires G' == G")
            if self.omega != (self.omegaM, self.omegaM):
                raise ValueError("protocol mode requires omega_1 == omega_2 == omegaM")
            if self.has_bare_frequencies:
                worst = max(self.resonance_residuals())
                if worst > RESONANCE_TOL:
                    raise ResonanceError(
                        f"resonance conditions violated by {worst:.3e}"
                    )

    @property
    def has_bare_frequencies(self) -> bool:
        return self.omega_tilde is not None and self.Omega is not None

    def resonance_residuals(self) -> tuple[float, float]:
        wt, Om = self.omega_tilde, self.Omega
        return (
            abs(wt[0] - wt[2] - Om[0] - self.omegaM),
            abs(wt[1] - wt[2] - Om[1] - self.omegaM),
        )

    def with_default_frequencies(
        self, optical: tuple[float, float] | None = None, lower: float = 0.0
    ) -> "ProtocolParameters":
        """Fill resonant bare frequencies.

        Defaults: omega_tilde_3 = 0, Omega_1 = 10 omegaM, Omega_2 = 12 omegaM,
        upper atomic levels placed on resonance.
        """
        if optical is None:
            optical = (10.0 * self.omegaM, 12.0 * self.omegaM)
        wt = (
            lower + optical[0] + self.omegaM,
            lower + optical[1] + self.omegaM,
            lower,
        )
        return replace(self, omega_tilde=wt, Omega=tuple(optical))


@dataclass(frozen=True)
class HarmonicTerm:
    """One term h exp(-i w t) + h.c. of an interaction-picture Hamiltonian."""

    operator: OperatorMatrix
    frequency: float

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("harmonic frequency must be positive")


@dataclass(frozen=True)
class HamiltonianPair:
    H0: OperatorMatrix
    H1: OperatorMatrix

    def __post_init__(self):
        for name in ("H0", "H1"):
            resid = getattr(self, name).hermiticity_residual()
            if resid > 1e-12:
                raise ValueError(f"{name} is not Hermitian (residual {resid:.3e})")


def _check_pair(registry: BasisRegistry, interacting_atoms: Sequence[int]) -> tuple[int, int]:
    if registry.atom_count < 2:
        raise ValueError("registry needs at least two atoms")
    j, k = (int(a) for a in interacting_atoms)
    if j == k:
        raise ValueError("interacting atoms must be distinct")
    for a in (j, k):
        if not 0 <= a < registry.atom_count:
            raise IndexError(f"atom index {a} out of range")
    return j, k


def build_full_hamiltonian(
    params: ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: Sequence[int] = (1, 2),
) -> HamiltonianPair:
    """Free part H0 and interaction part H1 for two atoms in one cavity."""
    j, k = _check_pair(registry, interacting_atoms)
    if not params.has_bare_frequencies:
        raise ValueError("bare frequencies are required; see with_default_frequencies()")
    sig = lambda atom, l, m: atomic_transition_op(atom, l, m, registry)  # noqa: E731
    a1, a2 = annihilation_op("a1", registry), annihilation_op("a2", registry)
    b1, b2 = annihilation_op("b1", registry), annihilation_op("b2", registry)
    n1, n2 = number_op("a1", registry), number_op("a2", registry)

    H0 = zero_op(registry)
    for atom in (j, k):
        for level, w in zip((L1, L2, L3), params.omega_tilde):
            H0 = H0 + w * sig(atom, level, level)
    H0 = H0 + params.Omega[0] * n1 + params.Omega[1] * n2
    H0 = H0 + params.omega[0] * number_op("b1", registry)
    H0 = H0 + params.omega[1] * number_op("b2", registry)

    H1 = zero_op(registry)
    couplings = ((j, params.lambda1, params.lambda2), (k, params.lambda1p, params.lambda2p))
    for atom, lam1, lam2 in couplings:
        H1 = H1 + lam1 * (a1 @ sig(atom, L1, L3) + a1.dag @ sig(atom, L3, L1))
        H1 = H1 + lam2 * (a2 @ sig(atom, L2, L3) + a2.dag @ sig(atom, L3, L2))
    H1 = H1 - params.G * (n1 @ (b1 + b1.dag))
    H1 = H1 - params.Gp * (n2 @ (b2 + b2.dag))
    return HamiltonianPair(H0, H1)


def _bracket_pieces(
    params: ProtocolParameters, registry: BasisRegistry, interacting_atoms
) -> dict[str, OperatorMatrix]:
    """Pieces of the operator multiplying exp(+i omegaM t)."""
    j, k = _check_pair(registry, interacting_atoms)
    a1, a2 = annihilation_op("a1", registry), annihilation_op("a2", registry)
    n1, n2 = number_op("a1", registry), number_op("a2", registry)
    sig = lambda atom, l, m: atomic_transition_op(atom, l, m, registry)  # noqa: E731
    return {
        "atom_field_1": params.lambda1 * (a1 @ (sig(j, L1, L3) + sig(k, L1, L3))),
        "atom_field_2": params.lambda2 * (a2 @ (sig(j, L2, L3) + sig(k, L2, L3))),
        "optomechanical": -params.G
        * (n1 @ creation_op("b1", registry) + n2 @ creation_op("b2", registry)),
    }


def harmonic_decomposition(
    params: ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: Sequence[int] = (1, 2),
) -> list[HarmonicTerm]:
    """Single-harmonic form of the interaction-picture Hamiltonian.

    The returned h satisfies H_int(t) = h exp(-i omegaM t) + h^dag exp(+i omegaM t),
    so h^dag is the operator multiplying exp(+i omegaM t).
    """
    if not params.protocol:
        raise ValueError("harmonic decomposition needs protocol-mode parameters")
    if params.has_bare_frequencies:
        worst = max(params.resonance_residuals())
        if worst > RESONANCE_TOL:
            raise ResonanceError(f"resonance conditions violated by {worst:.3e}")
    bracket = sum(
        _bracket_pieces(params, registry, interacting_atoms).values(), zero_op(registry)
    )
    return [HarmonicTerm(bracket.dag, params.omegaM)]


def reconstruct(terms: Sequence[HarmonicTerm], t: float) -> OperatorMatrix:
    registry = terms[0].operator.registry
    out = zero_op(registry)
    for term in terms:
        phase = np.exp(-1j * term.frequency * t)
        out = out + phase * term.operator + np.conj(phase) * term.operator.dag
    return out


@dataclass
class InteractionPictureReport:
    times: list[float]
    deviations: list[float]

    @property
    def max_deviation(self) -> float:
        return max(self.deviations) if self.deviations else 0.0


def interaction_picture_check(
    pair: HamiltonianPair, terms: Sequence[HarmonicTerm], t_samples: Sequence[float]
) -> InteractionPictureReport:
    """Compare exp(iH0 t) H1 exp(-iH0 t) with the harmonic reconstruction."""
    deviations = []
    for t in t_samples:
        U = matrix_exponential(-1j * pair.H0, t)
        conjugated = U.dag @ pair.H1 @ U
        diff = conjugated - reconstruct(terms, t)
        deviations.append(diff.max_abs())
    return InteractionPictureReport([float(t) for t in t_samples], deviations)


def harmonic_average(w_m: float, w_n: float) -> float:
    return 2.0 / (1.0 / w_m + 1.0 / w_n)


def james_effective(
    terms: Sequence[HarmonicTerm], secular_tol: float = 1e-12
) -> OperatorMatrix:
    """Time-averaged second-order Hamiltonian sum (1/w_mn) [h_m^dag, h_n].

    Only secular pairs (|w_m - w_n| <= secular_tol) are kept.
    """
    if not terms:
        raise ValueError("need at least one harmonic term")
    for term in terms:
        if not term.frequency > 0:
            raise ValueError("harmonic frequency must be positive")
    registry = terms[0].operator.registry
    out = zero_op(registry)
    for hm in terms:
        for hn in terms:
            if abs(hm.frequency - hn.frequency) > secular_tol:
                continue
            w_mn = harmonic_average(hm.frequency, hn.frequency)
            out = out + (1.0 / w_mn) * commutator(hm.operator.dag, hn.operator)
    return OperatorMatrix(registry, out.matrix)


def effective_terms(
    params: ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: Sequence[int] = (1, 2),
) -> dict[str, OperatorMatrix]:
    """Named pieces of the effective Hamiltonian, built term by term."""
    j, k = _check_pair(registry, interacting_atoms)
    w = params.omegaM
    lam1, lam2, G = params.lambda1, params.lambda2, params.G
    sig = lambda atom, l, m: atomic_transition_op(atom, l, m, registry)  # noqa: E731
    a1, a2 = annihilation_op("a1", registry), annihilation_op("a2", registry)
    b1, b2 = annihilation_op("b1", registry), annihilation_op("b2", registry)
    n1, n2 = number_op("a1", registry), number_op("a2", registry)

    def stark(level, n):
        total = zero_op(registry)
        for atom in (j, k):
            total = total + sig(atom, level, level) + n @ (sig(atom, level, level) - sig(atom, L3, L3))
        return total

    def exchange(level):
        return sig(j, level, L3) @ sig(k, L3, level) + sig(j, L3, level) @ sig(k, level, L3)

    def with_hc(op):
        return op + op.dag

    cross = sum((a1 @ a2.dag @ sig(i, L1, L2) for i in (j, k)), zero_op(registry))
    side1 = sum((a1 @ b1 @ sig(i, L1, L3) for i in (j, k)), zero_op(registry))
    side2 = sum((a2 @ b2 @ sig(i, L2, L3) for i in (j, k)), zero_op(registry))
    return {
        "stark_1": (lam1**2 / w) * stark(L1, n1),
        "stark_2": (lam2**2 / w) * stark(L2, n2),
        "exchange_1": (lam1**2 / w) * exchange(L1),
        "exchange_2": (lam2**2 / w) * exchange(L2),
        "kerr": (-(G**2) / w) * (n1 @ n1 + n2 @ n2),
        "cross_mode": (lam1 * lam2 / w) * with_hc(cross),
        "sideband_1": (-G * lam1 / w) * with_hc(side1),
        "sideband_2": (-G * lam2 / w) * with_hc(side2),
    }


def build_effective_hamiltonian(
    params: ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: Sequence[int] = (1, 2),
) -> OperatorMatrix:
    terms = effective_terms(params, registry, interacting_atoms)
    total = sum(terms.values(), zero_op(registry))
    return OperatorMatrix(registry, total.matrix, hermitian=True)


# Which direct terms each commutator block [P, Q^dag] + [Q, P^dag] should reproduce.
_ATTRIBUTION = {
    ("atom_field_1", "atom_field_1"): ("stark_1", "exchange_1"),
    ("atom_field_2", "atom_field_2"): ("stark_2", "exchange_2"),
    ("optomechanical", "optomechanical"): ("kerr",),
    ("atom_field_1", "atom_field_2"): ("cross_mode",),
    ("atom_field_1", "optomechanical"): ("sideband_1",),
    ("atom_field_2", "optomechanical"): ("sideband_2",),
}


@dataclass
class EffectiveVerification:
    interior_states: int
    max_deviation: float
    term_deviations: dict[str, float] = field(default_factory=dict)
    constant_shift: float | None = None
    note: str = ""

    @property
    def mismatched_terms(self) -> list[str]:
        return [name for name, dev in self.term_deviations.items() if dev > 1e-10]


def verify_effective(
    params: ProtocolParameters,
    registry: BasisRegistry,
    interacting_atoms: Sequence[int] = (1, 2),
    interior_margin: int = 1,
) -> EffectiveVerification:
    """Cross-check the commutator derivation against the direct build.

    Columns are compared for interior states only (total bosonic
    excitation <= n_max - interior_margin) so truncation edges do not
    pollute the comparison. Each commutator block is also compared with
    the direct terms it should produce.
    """
    interior = np.flatnonzero(registry.total_excitation() <= registry.n_max - interior_margin)
    if interior.size == 0:
        return EffectiveVerification(0, 0.0, note="no interior states")

    def col_dev(op: OperatorMatrix) -> float:
        block = op.matrix[:, interior]
        return float(abs(block).max()) if block.nnz else 0.0

    direct_terms = effective_terms(params, registry, interacting_atoms)
    direct = sum(direct_terms.values(), zero_op(registry))
    derived = james_effective(harmonic_decomposition(params, registry, interacting_atoms))
    residual = derived - direct

    pieces = _bracket_pieces(params, registry, interacting_atoms)
    term_devs = {}
    for (p, q), names in _ATTRIBUTION.items():
        block = commutator(pieces[p], pieces[q].dag)
        if p != q:
            block = block + commutator(pieces[q], pieces[p].dag)
        block = (1.0 / params.omegaM) * block
        expected = sum((direct_terms[n] for n in names), zero_op(registry))
        term_devs["+".join(names)] = col_dev(block - expected)

    # Detect a pure constant offset on the interior.
    diag = residual.matrix.diagonal()[interior]
    shift = float(np.mean(diag.real))
    shifted = residual - shift * identity_op(registry)
    shift_value = shift if abs(shift) > 1e-12 and col_dev(shifted) <= 1e-10 else None

    return EffectiveVerification(
        interior_states=int(interior.size),
        max_deviation=col_dev(residual),
        term_deviations=term_devs,
        constant_shift=shift_value,
    )
