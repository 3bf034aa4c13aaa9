"""Tail windows and log-log trend slopes shared by the verdict engines.

Asymptotic statements are judged on a trailing window of the computed
ladder.  Upper/lower envelopes of a diagnostic are taken as running
extrema over that window, and their least-squares slope against
``log lambda`` decides whether the diagnostic tends to 0, stays bounded or
grows.
"""

from __future__ import annotations

import math

import numpy as np

WINDOW_FRACTION = 0.25
MIN_WINDOW = 3
SLOPE_THRESHOLD = 0.05
BURN_IN_LAMBDA = 1.0


def tail_region_start(lambdas: np.ndarray, fraction: float = WINDOW_FRACTION) -> int:
    """First index of the trailing ``fraction`` of rungs past burn-in."""
    past = np.flatnonzero(lambdas >= BURN_IN_LAMBDA)
    if not past.size:
        return lambdas.size
    n = past.size
    return int(past[n - max(1, math.ceil(fraction * n))])


def trailing(active: np.ndarray, fraction: float = WINDOW_FRACTION, min_points: int = MIN_WINDOW) -> np.ndarray:
    """Last ``max(min_points, ceil(fraction * len))`` entries of ``active``."""
    n = active.size
    take = min(n, max(min_points, math.ceil(fraction * n)))
    return active[n - take:]


def slope(lambdas, values) -> float | None:
    """Least-squares slope of ``log values`` against ``log lambdas``.

    A curve that is zero throughout has slope 0; nonpositive entries are
    otherwise dropped.  Returns ``None`` with fewer than two usable points.
    """
    lam = np.asarray(lambdas, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return None
    if np.all(v == 0):
        return 0.0
    if np.isposinf(v[-1]):
        return math.inf
    keep = (v > 0) & np.isfinite(v)
    if keep.sum() < 2:
        return None
    x = np.log(lam[keep])
    y = np.log(v[keep])
    if np.ptp(x) == 0:
        return None
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def envelope_slope(lambdas, values, kind: str) -> float | None:
    """Slope of a running-extremum envelope of a nonnegative diagnostic.

    Zero entries are treated as absent so that sparse diagnostics (positive
    only on a subsequence) are judged on their support.  For the suffix
    maximum, a trailing run of zeros longer than every gap inside the
    support means the diagnostic has collapsed to 0 and yields ``-inf``.
    """
    lam = np.asarray(lambdas, dtype=float)
    v = np.asarray(values, dtype=float)
    pos = np.flatnonzero(v > 0)
    if not pos.size:
        return 0.0
    if kind == "suffix_max":
        trailing_zeros = v.size - 1 - pos[-1]
        max_gap = int(np.max(np.diff(pos))) - 1 if pos.size > 1 else 0
        if trailing_zeros >= MIN_WINDOW and trailing_zeros > max_gap:
            return -math.inf
    env = ENVELOPES[kind](v[pos])
    return slope(lam[pos], env)


def prefix_max(v):
    return np.maximum.accumulate(np.asarray(v, dtype=float))


def prefix_min(v):
    return np.minimum.accumulate(np.asarray(v, dtype=float))


def suffix_max(v):
    return np.maximum.accumulate(np.asarray(v, dtype=float)[::-1])[::-1]


def suffix_min(v):
    return np.minimum.accumulate(np.asarray(v, dtype=float)[::-1])[::-1]


ENVELOPES = {
    "prefix_max": prefix_max,
    "prefix_min": prefix_min,
    "suffix_max": suffix_max,
    "suffix_min": suffix_min,
}


def classify_slope(s: float | None, threshold: float = SLOPE_THRESHOLD) -> str | None:
    """``"decreasing"``, ``"bounded"`` or ``"growing"`` (``None`` if undetermined)."""
    if s is None:
        return None
    if s < -threshold:
        return "decreasing"
    if s > threshold:
        return "growing"
    return "bounded"


def geometric_grid(a: float, b: float, n: int) -> np.ndarray:
    if n < 1 or a <= 0 or b <= 0:
        raise ValueError("grid needs positive endpoints and n >= 1")
    return np.geomspace(a, b, n)


DEFAULT_GRID = tuple(geometric_grid(1e-3, 1e3, 25).tolist())
