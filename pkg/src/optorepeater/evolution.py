"""Closed 11-ket subspace dynamics.

The protocol state never leaves the span of eleven basis kets, so the
Schrodinger equation reduces to dx/dt = S x with an 11x11
anti-Hermitian generator S. ``evolve`` propagates with the matrix
exponential; ``integrate_oracle`` is an independent adaptive
Runge-Kutta integration kept for cross-checking.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components

from .expm import expm_stack
from .fock import BasisKet, OperatorMatrix
from .hamiltonian import ProtocolParameters

__all__ = [
    "SUBSPACE_LABELS",
    "SUBSPACE_BASIS",
    "ClosureError",
    "build_s_matrix",
    "subspace_generator",
    "evolve",
    "integrate_oracle",
    "stage1_initial_state",
]

# Ordering: optical (a1,a2); mechanical (b1,b2); atoms in block order.
SUBSPACE_LABELS = (
    "0,0;0,0;1,3;3,1",
    "0,0;0,0;1,3;1,3",
    "0,0;0,0;1,1;3,3",
    "1,0;1,0;1,3;3,3",
    "0,0;0,0;3,1;1,3",
    "1,0;1,0;3,3;1,3",
    "1,0;1,0;3,1;3,3",
    "2,0;2,0;3,3;3,3",
    "0,0;0,0;3,1;3,1",
    "0,0;0,0;3,3;1,1",
    "1,0;1,0;3,3;3,1",
)
SUBSPACE_BASIS: tuple[BasisKet, ...] = tuple(BasisKet.from_label(s) for s in SUBSPACE_LABELS)

NORM_TOL = 1e-10
_LOCAL_TOL_FLOOR = 2.5e-14


class ClosureError(RuntimeError):
    """The Hamiltonian maps the tracked span outside itself."""


def build_s_matrix(params: ProtocolParameters) -> np.ndarray:
    """Explicit generator S (dx/dt = S x) on the 11-ket subspace."""
    lam, G, w = params.lambda1, params.G, params.omegaM
    if not w > 0:
        raise ValueError("omegaM must be positive")
    s = lam**2 / w
    g = G * lam / w
    k = G**2 / w
    S = np.zeros((11, 11), dtype=complex)

    # kets 2-4 (indices 1-3) and their mirror 9-11 (indices 8-10)
    block = np.array(
        [
            [-1j * s, -1j * s, 1j * g],
            [-1j * s, -1j * s, 1j * g],
            [1j * g, 1j * g, 1j * (2 * s + k)],
        ]
    )
    S[1:4, 1:4] = block
    S[8:11, 8:11] = block

    # kets 5-8 (indices 4-7)
    S[4, 4] = -2j * s
    S[4, 5] = S[4, 6] = S[5, 4] = S[6, 4] = 1j * g
    S[5, 5] = S[6, 6] = -1j * (s - k)
    S[5, 6] = S[6, 5] = -1j * s
    S[5, 7] = S[6, 7] = S[7, 5] = S[7, 6] = 2j * g
    S[7, 7] = 4j * (s + k)
    return S


def subspace_generator(
    H_eff: OperatorMatrix,
    basis: tuple[BasisKet, ...] = SUBSPACE_BASIS,
    tol: float = 1e-12,
) -> tuple[np.ndarray, float]:
    """Restrict -i H_eff to ``basis`` and certify the span is closed.

    Returns ``(S, closure_residual)`` where the residual is the largest
    matrix element of (1 - P) H_eff P. Raises ClosureError above ``tol``.
    """
    registry = H_eff.registry
    if registry.n_max < 2:
        raise ValueError("registry truncation must be at least 2 to hold the subspace")
    idx = np.array([registry.index(k) for k in basis])
    cols = H_eff.matrix[:, idx].toarray()
    inside = cols[idx, :]
    outside = cols.copy()
    outside[idx, :] = 0.0
    leak = np.abs(outside)
    residual = float(leak.max()) if leak.size else 0.0
    if residual > tol:
        col = int(np.argmax(leak.max(axis=0)))
        row = int(np.argmax(leak[:, col]))
        raise ClosureError(
            f"ket {basis[col].label()} leaks into {registry.ket(row).label()} "
            f"with amplitude {residual:.3e}"
        )
    return -1j * inside, residual


def stage1_initial_state() -> np.ndarray:
    """Two Bell-like pairs with field and mirror modes in vacuum."""
    x0 = np.zeros(11, dtype=complex)
    x0[[0, 1, 4, 8]] = 0.5
    return x0


def _check_inputs(S, x0) -> tuple[np.ndarray, np.ndarray]:
    S = np.asarray(S, dtype=complex)
    x0 = np.asarray(x0, dtype=complex)
    if S.shape != (x0.shape[0], x0.shape[0]):
        raise ValueError("generator and state dimensions disagree")
    if abs(np.linalg.norm(x0) - 1.0) > NORM_TOL:
        raise ValueError("initial amplitude vector must be normalized")
    return S, x0


def _blocks(S: np.ndarray) -> list[np.ndarray]:
    """Index sets of the irreducible diagonal blocks of ``S``."""
    _, labels = connected_components((S != 0) | (S.T != 0), directed=False)
    return [np.flatnonzero(labels == k) for k in range(labels.max() + 1)]


def _propagate(S, blocks, x0, times: np.ndarray) -> np.ndarray:
    # exponentiating block by block keeps decoupled amplitudes exactly fixed
    x = np.empty((times.size, x0.size), dtype=complex)
    for idx in blocks:
        sub = S[np.ix_(idx, idx)]
        if not sub.any():
            x[:, idx] = x0[idx]
            continue
        U = expm_stack(sub[None, :, :] * times[:, None, None])
        x[:, idx] = U @ x0[idx]
    return x


def evolve(S, x0, t):
    """x(t) = exp(S t) x0.

    ``t`` may be a scalar (returns one vector) or a 1-D array (returns an
    array of shape (len(t), n)).
    """
    S, x0 = _check_inputs(S, x0)
    times = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(times)):
        raise ValueError("t must be finite")
    out = _propagate(S, _blocks(S), x0, np.atleast_1d(times))
    return out[0] if times.ndim == 0 else out


def integrate_oracle(S, x0, t, tol: float = 1e-10):
    """Adaptive 8th-order Runge-Kutta solution of dx/dt = S x.

    Same calling convention as :func:`evolve`. ``tol`` is the target
    global accuracy; local step tolerances are set two orders tighter
    (floored near machine precision) because errors accumulate over
    many oscillation periods.
    """
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    S, x0 = _check_inputs(S, x0)
    times = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(times)):
        raise ValueError("t must be finite")
    scalar = times.ndim == 0
    grid = np.atleast_1d(times)
    if np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValueError("time grid must be non-negative and ascending")
    t_end = float(grid[-1])
    if t_end == 0.0 and np.all(grid == 0.0):
        out = np.tile(x0, (grid.size, 1))
        return out[0] if scalar else out

    sol = solve_ivp(
        lambda _, x: S @ x,
        (0.0, t_end),
        x0,
        method="DOP853",
        t_eval=grid,
        rtol=max(tol * 1e-2, _LOCAL_TOL_FLOOR),
        atol=max(tol * 1e-2, _LOCAL_TOL_FLOOR),
    )
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    out = sol.y.T
    return out[0] if scalar else out
