"""Two-level repeater: blocks (1-4) and (5-8), then the (4,5) swap.

Stage 1 evolves each four-atom block from two Bell-like pairs and
post-selects the inner atoms; both blocks share the same handoff time t
and are treated as independent post-selections. Stage 2 rebuilds an
11-amplitude state for atoms (1,4,5,8) for each of the four outcome
combinations and evolves it under the same generator S.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .evolution import SUBSPACE_BASIS, build_s_matrix, evolve, stage1_initial_state
from .fock import AtomLevel
from .hamiltonian import ProtocolParameters
from .measurement import ProjectorSpec, pair_metrics, residual_indices

__all__ = [
    "BRANCHES",
    "OUTCOME_31",
    "OUTCOME_13",
    "MetricTrace",
    "Stage1Result",
    "Stage2Result",
    "BranchCoefficients",
    "ProtocolResult",
    "default_grid",
    "stage1",
    "branch_coefficients",
    "stage2",
    "run_protocol",
    "sweep",
]

L1, L3 = AtomLevel.L1, AtomLevel.L3

BRANCHES = (1, 2, 3, 4)
DEFAULT_HANDOFF = 0.8

# Inner pair found in (3,1) resp. (1,3), fields in vacuum; outer pair kept.
OUTCOME_31 = ProjectorSpec.vacuum_outcome(measured=(1, 2), levels=(L3, L1), residual=(0, 3))
OUTCOME_13 = ProjectorSpec.vacuum_outcome(measured=(1, 2), levels=(L1, L3), residual=(0, 3))


def default_grid(start: float = 0.0, stop: float = 20.0, points: int = 2001) -> np.ndarray:
    return np.linspace(start, stop, points)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("time grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)):
        raise ValueError("time grid must be finite")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly ascending")
    return grid


@dataclass
class MetricTrace:
    time: np.ndarray
    entropy: np.ndarray
    probability: np.ndarray


def _outcome_trace(time, amplitudes, spec: ProjectorSpec) -> MetricTrace:
    idx13, idx31 = residual_indices(SUBSPACE_BASIS, spec)
    c13 = amplitudes[:, idx13].sum(axis=1)
    c31 = amplitudes[:, idx31].sum(axis=1)
    ent, prob = pair_metrics(c13, c31)
    return MetricTrace(time, ent, prob)


@dataclass
class Stage1Result:
    amplitudes: np.ndarray
    trace: MetricTrace
    trace_alt: MetricTrace

    @property
    def time(self) -> np.ndarray:
        return self.trace.time


def stage1(params: ProtocolParameters, t_grid, S: np.ndarray | None = None) -> Stage1Result:
    """Evolve one four-atom block and compute E(t), P(t).

    ``trace`` is the (3,1) outcome, ``trace_alt`` the (1,3) outcome.
    """
    grid = _check_grid(t_grid)
    S = build_s_matrix(params) if S is None else S
    amps = evolve(S, stage1_initial_state(), grid)
    return Stage1Result(
        amps,
        _outcome_trace(grid, amps, OUTCOME_31),
        _outcome_trace(grid, amps, OUTCOME_13),
    )


@dataclass(frozen=True)
class BranchCoefficients:
    """Amplitudes of |13;13>, |13;31>, |31;13>, |31;31> on atoms (1,4;5,8)."""

    alpha: complex
    beta: complex
    gamma: complex
    lam: complex

    def norm_sq(self) -> float:
        return float(sum(abs(c) ** 2 for c in (self.alpha, self.beta, self.gamma, self.lam)))

    def initial_vector(self) -> np.ndarray:
        y0 = np.zeros(11, dtype=complex)
        y0[1] = self.alpha
        y0[0] = self.beta
        y0[4] = self.gamma
        y0[8] = self.lam
        return y0


def branch_coefficients(i: int, A2: complex, A10: complex) -> BranchCoefficients:
    """Product of the two stage-1 residual states for branch ``i``.

    Branches 1..4 combine the (1,4) and (5,8) outcomes as
    (31,31), (13,13), (31,13), (13,31) on the measured inner pairs.
    Complex phases are kept.
    """
    if i not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    A2, A10 = complex(A2), complex(A10)
    P = abs(A2) ** 2 + abs(A10) ** 2
    if P == 0:
        raise ValueError("stage-1 success probability is zero; branch undefined")
    same = A2 * A10 / P
    if i == 1:
        return BranchCoefficients(A2**2 / P, same, same, A10**2 / P)
    if i == 2:
        return BranchCoefficients(A10**2 / P, same, same, A2**2 / P)
    if i == 3:
        return BranchCoefficients(same, A2**2 / P, A10**2 / P, same)
    return BranchCoefficients(same, A10**2 / P, A2**2 / P, same)


@dataclass
class Stage2Result:
    """Final (1,8) metrics; ``outcome`` is (4,5) found in (3,1), ``outcome_prime`` in (1,3)."""

    amplitudes: np.ndarray
    outcome: MetricTrace
    outcome_prime: MetricTrace

    @property
    def tau(self) -> np.ndarray:
        return self.outcome.time


def stage2(
    params: ProtocolParameters,
    branch: BranchCoefficients,
    tau_grid,
    S: np.ndarray | None = None,
) -> Stage2Result:
    grid = _check_grid(tau_grid)
    if abs(branch.norm_sq() - 1.0) > 1e-10:
        raise ValueError("branch coefficients are not normalized")
    S = build_s_matrix(params) if S is None else S
    amps = evolve(S, branch.initial_vector(), grid)
    return Stage2Result(
        amps,
        _outcome_trace(grid, amps, OUTCOME_31),
        _outcome_trace(grid, amps, OUTCOME_13),
    )


@dataclass
class ProtocolResult:
    params: ProtocolParameters
    t: float
    stage1: Stage1Result
    handoff: np.ndarray
    handoff_probability: float
    branches: dict[int, BranchCoefficients | None] = field(default_factory=dict)
    stage2: dict[int, Stage2Result | None] = field(default_factory=dict)

    @property
    def defined(self) -> bool:
        return self.handoff_probability > 0


def run_protocol(
    params: ProtocolParameters,
    t: float = DEFAULT_HANDOFF,
    tau_grid=None,
    t_grid=None,
) -> ProtocolResult:
    """Full pipeline: stage-1 trace, handoff at ``t``, four stage-2 branches.

    If the stage-1 success probability vanishes at ``t`` every branch is
    recorded as ``None``.
    """
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValueError("handoff time must be finite and non-negative")
    tau_grid = default_grid() if tau_grid is None else tau_grid
    t_grid = default_grid() if t_grid is None else t_grid
    S = build_s_matrix(params)
    s1 = stage1(params, t_grid, S=S)
    x_t = evolve(S, stage1_initial_state(), t)
    A2, A10 = x_t[1], x_t[9]
    P = float(abs(A2) ** 2 + abs(A10) ** 2)
    result = ProtocolResult(params, t, s1, x_t, P)
    for i in BRANCHES:
        if P > 0:
            coeffs = branch_coefficients(i, A2, A10)
            result.branches[i] = coeffs
            result.stage2[i] = stage2(params, coeffs, tau_grid, S=S)
        else:
            result.branches[i] = None
            result.stage2[i] = None
    return result


SWEEPABLE = ("omegaM", "G", "t")


def sweep(
    params_base: ProtocolParameters,
    vary: str,
    values: Sequence[float],
    t: float = DEFAULT_HANDOFF,
    tau_grid=None,
    t_grid=None,
) -> list[ProtocolResult]:
    if vary not in SWEEPABLE:
        raise ValueError(f"can only sweep one of {SWEEPABLE}")
    if len(values) == 0:
        raise ValueError("sweep needs at least one value")
    results = []
    for v in values:
        if vary == "t":
            results.append(run_protocol(params_base, float(v), tau_grid, t_grid))
        else:
            changes = {vary: float(v)}
            if vary == "G":
                changes["Gp"] = float(v)
            if vary == "omegaM":
                changes["omega"] = (float(v), float(v))
                if params_base.has_bare_frequencies:
                    changes["omega_tilde"] = None
                    changes["Omega"] = None
            results.append(run_protocol(replace(params_base, **changes), t, tau_grid, t_grid))
    return results
