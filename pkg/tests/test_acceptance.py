"""Acceptance criteria, each checked at its stated tolerance.

Run under pytest (one PASS/FAIL line per criterion appears in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import numpy as np
import pytest

from optorepeater.analysis import first_recurrence_time, has_sudden_death, low_windows
from optorepeater.cli import FIGURES, cmd_figure
from optorepeater.evolution import (
    SUBSPACE_BASIS,
    build_s_matrix,
    evolve,
    integrate_oracle,
    stage1_initial_state,
    subspace_generator,
)
from optorepeater.fock import build_basis
from optorepeater.hamiltonian import (
    ProtocolParameters,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    harmonic_decomposition,
    interaction_picture_check,
    verify_effective,
)
from optorepeater.measurement import outcome_probabilities
from optorepeater.protocol import default_grid, run_protocol, stage1
from optorepeater.traces import dumps

GRID = default_grid()  # lambda1 t in [0, 20], 2001 points
FIG2 = [ProtocolParameters(omegaM=w, G=2.0) for w in (0.5, 1.0, 1.5, 10.0, 30.0, 50.0)]
FIG3 = [ProtocolParameters(omegaM=0.5, G=g) for g in (2.0, 2.5, 3.0)]
BRANCH_SETS = [(1.0, 0.5), (2.0, 0.5), (1.0, 1.0)]  # (G, omegaM)


def tabulated_s(lam, G, w):
    """Generator written entry by entry, with 1-based ket labels."""
    s, g, k = lam**2 / w, G * lam / w, G**2 / w
    entries = {}
    for off in (0, 7):  # block 2-4 and its mirror 9-11
        a, b, c = 2 + off, 3 + off, 4 + off
        entries.update({
            (a, a): -1j * s, (a, b): -1j * s, (a, c): 1j * g,
            (b, a): -1j * s, (b, b): -1j * s, (b, c): 1j * g,
            (c, a): 1j * g, (c, b): 1j * g, (c, c): 1j * (2 * lam**2 + G**2) / w,
        })
    entries.update({
        (5, 5): -2j * s, (5, 6): 1j * g, (5, 7): 1j * g,
        (6, 5): 1j * g, (6, 6): -1j * (lam**2 - G**2) / w, (6, 7): -1j * s, (6, 8): 2j * g,
        (7, 5): 1j * g, (7, 6): -1j * s, (7, 7): -1j * (lam**2 - G**2) / w, (7, 8): 2j * g,
        (8, 6): 2j * g, (8, 7): 2j * g, (8, 8): 4j * (lam**2 + G**2) / w,
    })
    S = np.zeros((11, 11), dtype=complex)
    for (r, c), v in entries.items():
        S[r - 1, c - 1] = v
    return S


def criterion_1():
    rng = np.random.default_rng(2024)
    block = build_basis(2, 4)
    worst_sym = worst_heff = worst_closure = 0.0
    for _ in range(50):
        lam, G, w = rng.uniform(0.3, 2.0), rng.uniform(-3.0, 3.0), rng.uniform(0.3, 50.0)
        p = ProtocolParameters(omegaM=w, G=G, lambda1=lam)
        S = build_s_matrix(p)
        ref = tabulated_s(lam, G, w)
        scale = np.abs(ref).max()
        worst_sym = max(worst_sym, np.abs(S - ref).max() / (scale * np.finfo(float).eps))
        S_heff, closure = subspace_generator(build_effective_hamiltonian(p, block, (1, 2)))
        worst_heff = max(worst_heff, np.abs(S - S_heff).max())
        worst_closure = max(worst_closure, closure)
        assert np.all(S[0] == 0)
    ok = worst_sym <= 4 and worst_heff <= 1e-12 and worst_closure <= 1e-12
    return ok, (
        f"table gap {worst_sym:.1f} ulp, |S - (-i H_eff)| = {worst_heff:.2e}, "
        f"closure {worst_closure:.2e}"
    )


def criterion_2():
    reg = build_basis(4, 2)
    worst = 0.0
    notes = []
    for p in FIG3 + [ProtocolParameters(omegaM=1.0, G=1.0), ProtocolParameters(omegaM=0.5, G=0.0)]:
        rep = verify_effective(p, reg, (0, 1), interior_margin=1)
        worst = max(worst, rep.max_deviation)
        if rep.mismatched_terms or rep.constant_shift is not None:
            notes.append(f"G={p.G}: {rep.mismatched_terms} shift={rep.constant_shift}")
    ok = worst <= 1e-10
    return ok, f"max interior deviation {worst:.2e}" + (f"; {notes}" if notes else "")


def criterion_3():
    reg = build_basis(2, 2)
    rng = np.random.default_rng(7)
    worst = 0.0
    for p, optical in ((ProtocolParameters(omegaM=0.5, G=2.0), None),
                       (ProtocolParameters(omegaM=1.0, G=1.0), (3.1, 4.7))):
        pair = build_full_hamiltonian(p.with_default_frequencies(optical=optical), reg, (0, 1))
        terms = harmonic_decomposition(p, reg, (0, 1))
        times = rng.uniform(0.0, 10.0 / p.omegaM, 20)
        worst = max(worst, interaction_picture_check(pair, terms, times).max_deviation)
    return worst <= 1e-10, f"max deviation {worst:.2e} over 2x20 random times"


def criterion_4():
    x0 = stage1_initial_state()
    worst_gap = worst_drift = 0.0
    for p in FIG2 + FIG3:
        S = build_s_matrix(p)
        X = evolve(S, x0, GRID)
        Y = integrate_oracle(S, x0, GRID, tol=1e-10)
        worst_gap = max(worst_gap, np.abs(X - Y).max())
        for Z in (X, Y):
            worst_drift = max(worst_drift, np.abs(np.linalg.norm(Z, axis=1) - 1).max())
    ok = worst_gap <= 1e-8 and worst_drift <= 1e-9
    return ok, f"expm vs integrator {worst_gap:.2e}, norm drift {worst_drift:.2e}"


def criterion_5():
    x0 = stage1_initial_state()
    a1_exact = True
    worst = 0.0
    for p in FIG2 + FIG3:
        X = evolve(build_s_matrix(p), x0, GRID)
        a1_exact &= bool(np.all(X[:, 0] == 0.5))
        # 1-based pairs A2=A9, A3=A10, A4=A11, A6=A7
        for a, b in ((2, 9), (3, 10), (4, 11), (6, 7)):
            worst = max(worst, np.abs(X[:, a - 1] - X[:, b - 1]).max())
    return a1_exact and worst <= 1e-10, f"A1 exactly 1/2: {a1_exact}; symmetry gap {worst:.2e}"


def criterion_6():
    w = 0.5
    res = stage1(ProtocolParameters(omegaM=w, G=0.0), GRID)
    phi = 2 * GRID / w
    A2 = 0.25 * (1 + np.exp(-1j * phi))
    A10 = 0.25 * (np.exp(-1j * phi) - 1)
    m2, m10 = abs(A2) ** 2, abs(A10) ** 2
    E_exact = 1 - (m2**2 + m10**2) / (m2 + m10) ** 2
    p_gap = np.abs(res.trace.probability - 0.25).max()
    e_gap = np.abs(res.trace.entropy - E_exact).max()
    # first maximum of E should sit at 2 t / w = pi / 2
    dt = GRID[1] - GRID[0]
    t_star = np.pi * w / 4
    first_period = GRID < np.pi * w / 2
    k = int(np.argmax(np.where(first_period, res.trace.entropy, -1)))
    peak_ok = abs(GRID[k] - t_star) <= dt and res.trace.entropy[k] >= 0.5 * np.cos(2 * dt / w) ** 2
    ok = p_gap <= 1e-10 and e_gap <= 1e-9 and peak_ok
    return ok, (
        f"|P - 1/4| {p_gap:.2e}, |E - analytic| {e_gap:.2e}, "
        f"peak E={res.trace.entropy[k]:.6f} at t={GRID[k]:.3f} (expected {t_star:.4f})"
    )


def _branch_gap(result):
    s2 = result.stage2
    E = {i: s2[i].outcome.entropy for i in s2}
    Ep = {i: s2[i].outcome_prime.entropy for i in s2}
    P = {i: s2[i].outcome.probability for i in s2}
    Pp = {i: s2[i].outcome_prime.probability for i in s2}
    pairs = [
        (E[1], Ep[2]), (E[2], Ep[1]), (E[3], E[4]), (E[3], Ep[3]), (E[3], Ep[4]),
        (P[1], Pp[2]), (P[2], Pp[1]), (P[3], P[4]), (P[3], Pp[3]), (P[3], Pp[4]),
    ]
    worst = 0.0
    for a, b in pairs:
        # both sides must be undefined at the same points
        if not np.array_equal(np.isnan(a), np.isnan(b)):
            return np.inf
        mask = ~np.isnan(a)
        worst = max(worst, float(np.abs(a[mask] - b[mask]).max()))
    return worst


def criterion_7():
    worst = 0.0
    for G, w in BRANCH_SETS:
        result = run_protocol(ProtocolParameters(omegaM=w, G=G), 0.8, GRID, GRID)
        worst = max(worst, _branch_gap(result))
    return worst <= 1e-10, f"max branch-equality gap {worst:.2e} over 3 parameter sets"


def _recurrence(p):
    res = stage1(p, GRID)
    return first_recurrence_time(GRID, res.trace.entropy, 1e-3), res.trace.entropy


def criterion_8():
    by_w = [_recurrence(ProtocolParameters(omegaM=w, G=2.0)) for w in (0.5, 1.0, 1.5)]
    by_g = [_recurrence(ProtocolParameters(omegaM=0.5, G=g)) for g in (2.0, 2.5, 3.0)]
    t_w = [r for r, _ in by_w]
    t_g = [r for r, _ in by_g]
    inc_w = None not in t_w and all(a < b for a, b in zip(t_w, t_w[1:]))
    dec_g = None not in t_g and all(a > b for a, b in zip(t_g, t_g[1:]))
    death = []
    for w, (_, E) in zip((0.5, 1.0, 1.5), by_w):
        if has_sudden_death(GRID, E, 1e-3, 0.05, 0.1):
            longest = max(b - a for a, b in low_windows(GRID, E, 1e-3))
            death.append(f"omegaM={w} (window {longest:.4f})")
    fmt = lambda ts: ", ".join("none" if t is None else f"{t:.3f}" for t in ts)  # noqa: E731
    detail = (
        f"recurrence vs omegaM [{fmt(t_w)}] increasing={inc_w}; "
        f"vs G [{fmt(t_g)}] decreasing={dec_g}; "
        f"sudden death: {', '.join(death) if death else 'none'}"
    )
    return inc_w and dec_g and bool(death), detail


def criterion_9():
    worst_sum = worst_alt = 0.0
    for p in FIG2 + FIG3:
        res = stage1(p, GRID)
        for x in res.amplitudes:
            probs = outcome_probabilities(x, SUBSPACE_BASIS, measured_atoms=(1, 2))
            worst_sum = max(worst_sum, abs(sum(probs.values()) - 1))
        a, b = res.trace, res.trace_alt
        worst_alt = max(worst_alt, np.abs(a.probability - b.probability).max())
        mask = ~np.isnan(a.entropy)
        worst_alt = max(worst_alt, np.abs(a.entropy[mask] - b.entropy[mask]).max())
    for G, w in BRANCH_SETS:
        result = run_protocol(ProtocolParameters(omegaM=w, G=G), 0.8, GRID, GRID)
        for s2 in result.stage2.values():
            for x in s2.amplitudes:
                probs = outcome_probabilities(x, SUBSPACE_BASIS, measured_atoms=(1, 2))
                worst_sum = max(worst_sum, abs(sum(probs.values()) - 1))
    ok = worst_sum <= 1e-10 and worst_alt <= 1e-10
    return ok, f"|sum P - 1| {worst_sum:.2e}; stage-1 outcome trace gap {worst_alt:.2e}"


def criterion_10():
    identical = True
    for fig_id in sorted(FIGURES):
        first = cmd_figure(fig_id)
        second = cmd_figure(fig_id)
        for fmt in ("csv", "json"):
            a = {k: dumps(v, fmt).encode() for k, v in first.items()}
            b = {k: dumps(v, fmt).encode() for k, v in second.items()}
            identical &= a == b
    return identical, f"fig2-fig5 emitted twice, byte-identical: {identical}"


CRITERIA = {
    1: ("S-matrix fidelity", criterion_1),
    2: ("effective-Hamiltonian derivation", criterion_2),
    3: ("interaction-picture identity", criterion_3),
    4: ("dynamics oracles", criterion_4),
    5: ("amplitude identities", criterion_5),
    6: ("G=0 closed form", criterion_6),
    7: ("branch equalities", criterion_7),
    8: ("qualitative recurrence and sudden-death statements", criterion_8),
    9: ("measurement completeness", criterion_9),
    10: ("determinism", criterion_10),
}


def _line(number, name, ok, detail):
    return f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_lines):
    name, check = CRITERIA[number]
    ok, detail = check()
    line = _line(number, name, ok, detail)
    acceptance_lines[number] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    for number, (name, check) in CRITERIA.items():
        print(_line(number, name, *check()), flush=True)
