"""Self-checks run by ``optorepeater verify``."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RunSpec
from .evolution import (
    build_s_matrix,
    evolve,
    integrate_oracle,
    stage1_initial_state,
    subspace_generator,
)
from .fock import build_basis
from .hamiltonian import (
    ProtocolParameters,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    harmonic_decomposition,
    interaction_picture_check,
    verify_effective,
)
from .protocol import run_protocol

__all__ = ["CheckResult", "VerificationReport", "run_verification"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, residual, tolerance, detail=""):
        residual = float(residual)
        self.checks.append(
            CheckResult(name, bool(residual <= tolerance), residual, tolerance, detail)
        )

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _max_gap(*pairs) -> float:
    return max(float(np.nanmax(np.abs(a - b))) for a, b in pairs)


def run_verification(spec: RunSpec, s_fault: float = 0.0) -> VerificationReport:
    """Run every cross-check; ``s_fault`` perturbs one S entry (fault injection)."""
    params = spec.to_params()
    report = VerificationReport()

    S = build_s_matrix(params)
    if s_fault:
        S = S.copy()
        S[1, 3] += s_fault
    block = build_basis(2, 4)
    S_heff, closure = subspace_generator(build_effective_hamiltonian(params, block, (1, 2)))
    report.add("s_matrix_vs_effective_hamiltonian", np.abs(S - S_heff).max(), 1e-12)
    report.add("subspace_closure", closure, 1e-12)

    lam2_gap = 0.0
    for lam2 in (0.0, 2.5):
        other = ProtocolParameters(omegaM=params.omegaM, G=params.G, lambda2=lam2)
        S_other, _ = subspace_generator(build_effective_hamiltonian(other, block, (1, 2)))
        lam2_gap = max(lam2_gap, np.abs(S_other - S_heff).max())
    report.add("lambda2_cancels_on_subspace", lam2_gap, 1e-12)

    reg = build_basis(spec.verify_n_max, 2)
    eff = verify_effective(params, reg, (0, 1), interior_margin=1)
    detail = "terms: " + ", ".join(f"{k}={v:.1e}" for k, v in eff.term_deviations.items())
    if eff.constant_shift is not None:
        detail += f"; constant shift {eff.constant_shift:.3e}"
    report.add("effective_hamiltonian_derivation", eff.max_deviation, 1e-10, detail)

    resonant = params.with_default_frequencies()
    small = build_basis(2, 2)
    if spec.has_bare_frequencies:
        full_params = ProtocolParameters(
            omegaM=params.omegaM, G=params.G, lambda2=params.lambda2,
            omega_tilde=(spec.omega_tilde1, spec.omega_tilde2, spec.omega_tilde3),
            Omega=(spec.Omega1, spec.Omega2),
            protocol=False,
        )
    else:
        full_params = resonant
    pair = build_full_hamiltonian(full_params, small, (0, 1))
    terms = harmonic_decomposition(params, small, (0, 1))
    rng = np.random.default_rng(spec.seed)
    times = rng.uniform(0.0, 10.0 / params.omegaM, spec.verify_samples)
    ip = interaction_picture_check(pair, terms, times)
    report.add("interaction_picture", ip.max_deviation, 1e-10)

    x0 = stage1_initial_state()
    grid = spec.t_grid
    X = evolve(S, x0, grid)
    Y = integrate_oracle(S, x0, grid, tol=1e-10)
    report.add("expm_vs_integrator", np.abs(X - Y).max(), 1e-8)
    report.add("norm_drift", np.abs(np.linalg.norm(X, axis=1) - 1.0).max(), 1e-9)
    report.add("A1_constant", np.abs(X[:, 0] - 0.5).max(), 1e-12)
    report.add(
        "amplitude_symmetries",
        max(np.abs(X[:, a] - X[:, b]).max() for a, b in ((1, 8), (2, 9), (3, 10), (5, 6))),
        1e-10,
    )

    result = run_protocol(params, spec.t, spec.tau_grid, spec.t_grid)
    if result.defined:
        s2 = result.stage2
        E = {i: s2[i].outcome.entropy for i in s2}
        Ep = {i: s2[i].outcome_prime.entropy for i in s2}
        P = {i: s2[i].outcome.probability for i in s2}
        Pp = {i: s2[i].outcome_prime.probability for i in s2}
        gap = _max_gap(
            (E[1], Ep[2]), (E[2], Ep[1]), (E[3], E[4]), (E[3], Ep[3]), (E[3], Ep[4]),
            (P[1], Pp[2]), (P[2], Pp[1]), (P[3], P[4]), (P[3], Pp[3]), (P[3], Pp[4]),
        )
        report.add("branch_equalities", gap, 1e-10)
    else:
        report.add("branch_equalities", 0.0, 1e-10, "stage-1 probability zero at handoff")
    return report
