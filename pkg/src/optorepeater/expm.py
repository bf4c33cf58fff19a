"""Dense matrix exponential by scaling and squaring with Pade approximants.

Follows the degree selection of Higham (2005): the smallest Pade degree
m in {3, 5, 7, 9, 13} whose backward-error bound theta_m exceeds the
1-norm of the (possibly scaled) matrix is used, and for m = 13 the matrix
is scaled by 2**-s first and the result squared s times.
"""

from __future__ import annotations

import numpy as np

__all__ = ["expm", "expm_stack"]

_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
        30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}


def _identity_like(A: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.eye(A.shape[-1], dtype=A.dtype), A.shape)


def _pade_low(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    A2 = A @ A
    powers = [_identity_like(A), A2]
    for _ in range(2, (m + 1) // 2):
        powers.append(powers[-1] @ A2)
    U = sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
    V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
    return A @ U, V


def _pade13(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[13]
    ident = _identity_like(A)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident
    )
    V = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    )
    return U, V


def _degree_and_scaling(norm1: float) -> tuple[int, int]:
    if norm1 == 0.0:
        return 0, 0
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            return m, 0
    return 13, max(0, int(np.ceil(np.log2(norm1 / _THETA[13]))))


def _validated(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A.astype(np.result_type(A.dtype, np.float64), copy=False)


def expm_stack(A) -> np.ndarray:
    """exp of every matrix in a stack of shape (k, n, n).

    Matrices sharing a Pade degree and scaling exponent are processed
    together; each gets the same treatment it would get from :func:`expm`.
    """
    A = _validated(A)
    if A.ndim != 3:
        raise ValueError("expected a stack of shape (k, n, n)")
    out = np.empty_like(A)
    if A.shape[1] == 0:
        return out
    norms = np.abs(A).sum(axis=1).max(axis=1)
    keys = [_degree_and_scaling(float(v)) for v in norms]
    for m, s in sorted(set(keys)):
        idx = np.array([i for i, key in enumerate(keys) if key == (m, s)])
        if m == 0:
            out[idx] = np.eye(A.shape[1])
            continue
        if m == 13:
            U, V = _pade13(A[idx] / 2.0**s)
        else:
            U, V = _pade_low(A[idx], m)
        R = np.linalg.solve(V - U, V + U)
        for _ in range(s):
            R = R @ R
        out[idx] = R
    return out


def expm(A) -> np.ndarray:
    """Return exp(A) for a square dense array.

    Raises ValueError for non-square input or non-finite entries.
    """
    A = _validated(A)
    if A.ndim != 2:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return expm_stack(A[None])[0]
