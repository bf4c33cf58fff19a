"""Trace-level statements: recurrence times and sudden-death windows."""

from __future__ import annotations

import numpy as np

__all__ = ["first_maximum_index", "first_recurrence_time", "low_windows", "has_sudden_death"]


def first_maximum_index(values) -> int | None:
    """Index of the first strict local maximum of a sampled curve."""
    v = np.asarray(values, dtype=float)
    for k in range(1, v.size - 1):
        if v[k] >= v[k - 1] and v[k] > v[k + 1]:
            return k
    return None


def first_recurrence_time(t, entropy, threshold: float = 1e-3) -> float | None:
    """First time after the first maximum where the entropy drops below ``threshold``."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(entropy, dtype=float)
    k = first_maximum_index(e)
    if k is None:
        return None
    below = np.flatnonzero(e[k:] < threshold)
    return float(t[k + below[0]]) if below.size else None


def _crossing(t0, t1, e0, e1, level):
    if e1 == e0:
        return t0
    return t0 + (level - e0) * (t1 - t0) / (e1 - e0)


def low_windows(t, entropy, threshold: float = 1e-3) -> list[tuple[float, float]]:
    """Contiguous intervals where the entropy stays below ``threshold``.

    Interval ends are placed at linearly interpolated threshold crossings;
    a window touching the grid boundary ends at that boundary.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(entropy, dtype=float)
    low = e < threshold
    windows = []
    k = 0
    n = t.size
    while k < n:
        if not low[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and low[j + 1]:
            j += 1
        start = t[k] if k == 0 else _crossing(t[k - 1], t[k], e[k - 1], e[k], threshold)
        end = t[j] if j == n - 1 else _crossing(t[j], t[j + 1], e[j], e[j + 1], threshold)
        windows.append((float(start), float(end)))
        k = j + 1
    return windows


def has_sudden_death(
    t,
    entropy,
    threshold: float = 1e-3,
    min_length: float = 0.05,
    revival: float = 0.1,
) -> bool:
    """True if some low window longer than ``min_length`` is followed by E > ``revival``."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(entropy, dtype=float)
    for start, end in low_windows(t, e, threshold):
        if end - start > min_length and np.any(e[t > end] > revival):
            return True
    return False
