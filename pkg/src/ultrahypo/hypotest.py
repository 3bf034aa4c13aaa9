"""Finite-truncation decisions for the global hypoellipticity conditions.

Both ultradifferentiable conditions are read off the single diagnostic

    E(ell) = M^{-1}(max(0, -log m(sigma(ell)))) / lambda_ell^{1/nu}

since ``m >= exp(-M(eps rho))`` is equivalent to ``E <= eps``.  The Roumieu
condition asks ``E -> 0``; the Beurling condition asks ``E`` bounded (the
constant ``K`` is absorbed by the doubling property of ``M``).  Rungs with
``lambda < 1`` are burn-in and never enter a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _trend
from .errors import NuMismatchError
from .symbols import SymbolSequence, m_values
from .weights import AssociatedFunction, WeightSequence

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"


@dataclass
class HypoVerdict:
    condition_tag: str
    decision: str
    witness: dict
    fitted: dict
    truncation: int
    diagnostic: list = field(default_factory=list)
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "condition_tag": self.condition_tag,
            "decision": self.decision,
            "truncation": self.truncation,
            "fitted": self.fitted,
            "witness": self.witness,
            "notes": self.notes,
            "diagnostic": [list(t) for t in self.diagnostic],
        }


class _Diag:
    def __init__(self, s: SymbolSequence, w: WeightSequence | None, assoc: AssociatedFunction | None = None):
        model = s.model
        if w is not None and w.nu != model.nu:
            raise NuMismatchError(f"weights nu={w.nu} but model nu={model.nu}")
        n = len(s)
        self.l_max = n - 1
        self.lam = model.lambdas[:n]
        self.rho = self.lam ** (1.0 / model.nu)
        self.m = m_values(s)
        with np.errstate(divide="ignore"):
            self.log_m = np.log(self.m)
        past = self.lam >= _trend.BURN_IN_LAMBDA
        self.zeros = np.flatnonzero(past & (self.m <= 0))
        self.finite = np.flatnonzero(past & (self.m > 0))
        self.window = _trend.trailing(self.finite)
        self.min_fail = math.ceil(self.l_max / 10)
        self.f = None
        self.E = np.full(n, np.nan)
        if w is not None or assoc is not None:
            self.f = assoc if assoc is not None else AssociatedFunction(w)
            y = np.maximum(0.0, -self.log_m[self.finite])
            self.E[self.finite] = np.asarray(self.f.inverse(y)) / self.rho[self.finite]
            self.E[self.zeros] = np.inf

    @property
    def recurrent_zeros(self) -> bool:
        return self.zeros.size >= max(2, self.min_fail)

    def curve(self):
        past = np.flatnonzero(self.lam >= _trend.BURN_IN_LAMBDA)
        return [(int(i), float(self.lam[i]), float(self.m[i]), float(self.E[i])) for i in past]

    def threshold(self, level: float) -> int | None:
        """Smallest ``C`` with ``E(ell) <= level`` for every computed ``ell >= C``.

        ``None`` when the last computed rung still violates the level.
        """
        idx = np.concatenate([self.finite, self.zeros])
        bad = idx[self.E[idx] > level]
        if not bad.size:
            return 0
        last = int(bad.max())
        return None if last == self.l_max else last + 1

    def zero_verdict(self, tag):
        return HypoVerdict(
            tag,
            FAILS,
            {"zeros": self.zeros.tolist()},
            {},
            self.l_max,
            self.curve(),
            "recurrent exact zeros of m beyond burn-in",
        )


def _check_grid(grid):
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    if any(g <= 0 for g in grid):
        raise ValueError("grid values must be positive")
    return sorted(grid)


def test_roumieu_gh(
    s: SymbolSequence,
    w: WeightSequence,
    eps_grid=_trend.DEFAULT_GRID,
    assoc: AssociatedFunction | None = None,
) -> HypoVerdict:
    """Condition: for every eps, ``m(sigma(ell)) >= exp(-M(eps rho))`` for large ``ell``."""
    grid = _check_grid(eps_grid)
    dg = _Diag(s, w, assoc)
    tag = "roumieu_3_1"
    if dg.recurrent_zeros:
        return dg.zero_verdict(tag)
    fitted = {"C_eps": {f"{e:.6g}": dg.threshold(e) for e in grid}}
    win = dg.window
    if win.size < _trend.MIN_WINDOW:
        return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve(), "too few rungs past burn-in")
    ew = dg.E[win]
    slope = _trend.envelope_slope(dg.lam[win], ew, "suffix_max")
    fitted["upper_envelope_slope"] = slope
    if np.all(ew == 0) or _trend.classify_slope(slope) == "decreasing":
        return HypoVerdict(tag, HOLDS, {}, fitted, dg.l_max, dg.curve())
    for eps0 in reversed(grid):
        bad = dg.finite[dg.E[dg.finite] > eps0]
        if bad.size >= dg.min_fail and np.any(np.isin(bad, win)):
            margins = -dg.log_m[bad] - np.asarray(dg.f(eps0 * dg.rho[bad]))
            witness = {"eps0": eps0, "indices": bad.tolist(), "margins": margins.tolist()}
            return HypoVerdict(tag, FAILS, witness, fitted, dg.l_max, dg.curve())
    return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve(), "no persistent violation")


def test_beurling_gh(
    s: SymbolSequence,
    w: WeightSequence,
    r_grid=_trend.DEFAULT_GRID,
    assoc: AssociatedFunction | None = None,
) -> HypoVerdict:
    """Condition: some ``K, r`` with ``m(sigma(ell)) >= K exp(-M(r rho))`` for large ``ell``."""
    grid = _check_grid(r_grid)
    dg = _Diag(s, w, assoc)
    tag = "beurling_4_1"
    if dg.recurrent_zeros:
        return dg.zero_verdict(tag)
    win = dg.window
    if win.size < _trend.MIN_WINDOW:
        return HypoVerdict(tag, INCONCLUSIVE, {}, {}, dg.l_max, dg.curve(), "too few rungs past burn-in")
    ew = dg.E[win]
    slope = _trend.envelope_slope(dg.lam[win], ew, "prefix_max")
    fitted = {"upper_envelope_slope": slope}
    trend = "bounded" if np.all(ew == 0) else _trend.classify_slope(slope)
    if trend == "growing":
        e = dg.E[dg.finite]
        records = dg.finite[(e > 0) & (e > np.concatenate([[-np.inf], np.maximum.accumulate(e)[:-1]]))]
        if records.size >= dg.min_fail:
            witness = {"indices": records.tolist(), "E": dg.E[records].tolist()}
            return HypoVerdict(tag, FAILS, witness, fitted, dg.l_max, dg.curve())
        return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve(), "growth seen on too few rungs")
    if trend is None:
        return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve(), "trend undetermined")
    r_fit = float(ew.max())
    above = [r for r in grid if r >= r_fit]
    r_level = min(above) if above else r_fit
    c_index = dg.threshold(r_level)
    tail = dg.finite[dg.finite >= (c_index or 0)]
    log_k = float(np.min(dg.log_m[tail] + np.asarray(dg.f(r_level * dg.rho[tail])))) if tail.size else 0.0
    fitted.update(
        {"r_fit": r_fit, "r": r_level, "C": c_index, "K": math.exp(min(0.0, log_k)), "log_K_max": log_k}
    )
    return HypoVerdict(tag, HOLDS, {}, fitted, dg.l_max, dg.curve())


def test_smooth_gh(s: SymbolSequence, exponent_sign: int = -1) -> HypoVerdict:
    """Polynomial lower bound ``m(sigma(ell)) >= L (1 + lambda)^{sign |M| / nu}`` beyond some ``R``.

    ``exponent_sign=-1`` allows polynomial decay of ``m``; ``+1`` asks for
    polynomial growth (``|M| = 0`` admitted).
    """
    if exponent_sign not in (1, -1):
        raise ValueError("exponent_sign must be +1 or -1")
    dg = _Diag(s, None)
    tag = "smooth_remark"
    if dg.recurrent_zeros:
        return dg.zero_verdict(tag)
    win = dg.window
    if win.size < 2 * _trend.MIN_WINDOW:
        return HypoVerdict(tag, INCONCLUSIVE, {}, {}, dg.l_max, dg.curve(), "too few rungs past burn-in")
    # the bound must hold at every rung, so fit lower-envelope records only:
    # prefix records for a decaying bound, suffix records for a growing one
    yw = dg.log_m[win]
    xw = np.log1p(dg.lam[win])
    thr = _trend.SLOPE_THRESHOLD
    low = _lower_records(yw)
    fitted = {}
    if low.size >= 2 * _trend.MIN_WINDOW:
        x, y = xw[low], yw[low]
        half = low.size // 2
        b1, b2 = _ls_slope(x[:half], y[:half]), _ls_slope(x[half:], y[half:])
        fitted = {"slope": _ls_slope(x, y), "slope_first_half": b1, "slope_second_half": b2}
    if exponent_sign < 0:
        if not fitted:
            return HypoVerdict(tag, INCONCLUSIVE, {}, {}, dg.l_max, dg.curve(), "too few lower-envelope rungs")
        b1, b2 = fitted["slope_first_half"], fitted["slope_second_half"]
        if b2 < b1 - (thr + thr * abs(b1)) and b2 < -thr:
            return HypoVerdict(tag, FAILS, {"reason": "super-polynomial decay"}, fitted, dg.l_max, dg.curve())
        exponent = max(0.0, -fitted["slope"])
        signed = -exponent
    else:
        if fitted and max(fitted["slope_first_half"], fitted["slope_second_half"]) < -thr:
            return HypoVerdict(tag, FAILS, {"reason": "m decays"}, fitted, dg.l_max, dg.curve())
        up = _later_records(yw)
        if up.size < 2 * _trend.MIN_WINDOW:
            return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve(), "too few lower-envelope rungs")
        b = _ls_slope(xw[up], yw[up])
        fitted["slope"] = b
        if b < -thr:
            return HypoVerdict(tag, INCONCLUSIVE, {}, fitted, dg.l_max, dg.curve())
        exponent = max(0.0, b)
        signed = exponent
    nu = s.model.nu
    log_l = float(np.min(dg.log_m[dg.finite] - signed * np.log1p(dg.lam[dg.finite])))
    fitted.update({"M_over_nu": exponent, "M": exponent * nu, "L": math.exp(log_l), "R": int(dg.finite[0])})
    return HypoVerdict(tag, HOLDS, {}, fitted, dg.l_max, dg.curve())


def _lower_records(y: np.ndarray) -> np.ndarray:
    """Positions where ``y`` is at or below every earlier value.

    The leading run at the starting value is dropped when a later value
    undercuts it, so an off-support start does not anchor the envelope.
    """
    before = np.concatenate([[np.inf], np.minimum.accumulate(y)[:-1]])
    rec = np.flatnonzero(y <= before)
    if np.min(y) < y[0]:
        rec = rec[y[rec] < y[0]]
    return rec


def _later_records(y: np.ndarray) -> np.ndarray:
    """Positions where ``y`` is at or below every later value."""
    after = np.concatenate([np.minimum.accumulate(y[::-1])[::-1][1:], [np.inf]])
    return np.flatnonzero(y <= after)


def _ls_slope(x, y) -> float:
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def implication_check(
    s: SymbolSequence,
    w: WeightSequence,
    eps_grid=_trend.DEFAULT_GRID,
    exponent_sign: int = -1,
) -> dict:
    """Run the polynomial and Roumieu tests and flag the forbidden combination.

    A polynomial lower bound on ``m`` implies the Roumieu condition, so
    "smooth holds, Roumieu fails" signals a bug or a truncation artifact.
    The pointwise inequality ``(1+lambda)^{M/nu} >= exp(-M(eps rho))`` is
    tabulated with the fitted exponent taken positive as well as with its
    fitted sign.
    """
    smooth = test_smooth_gh(s, exponent_sign)
    rou = test_roumieu_gh(s, w, eps_grid)
    contradiction = smooth.decision == HOLDS and rou.decision == FAILS
    table = {}
    if smooth.decision == HOLDS:
        dg = _Diag(s, w)
        expo = smooth.fitted["M_over_nu"]
        signed = expo if exponent_sign > 0 else -expo
        log_l = math.log(smooth.fitted["L"])
        past = np.flatnonzero(dg.lam >= _trend.BURN_IN_LAMBDA)
        log1p = np.log1p(dg.lam[past])
        for eps in _check_grid(eps_grid):
            rhs = -np.asarray(dg.f(eps * dg.rho[past]))
            table[f"{eps:.6g}"] = {
                "printed": _first_from(past, expo * log1p >= rhs, dg.l_max),
                "fitted_sign": _first_from(past, log_l + signed * log1p >= rhs, dg.l_max),
            }
    return {
        "smooth": smooth.to_dict(),
        "roumieu": rou.to_dict(),
        "contradiction": contradiction,
        "pointwise_C_eps": table,
    }


def _first_from(idx, ok, l_max):
    """Smallest index from which ``ok`` holds through the end (``None`` if it fails at the end)."""
    bad = idx[~ok]
    if not bad.size:
        return int(idx[0]) if idx.size else 0
    last = int(bad.max())
    return None if last == l_max else last + 1


for _fn in (test_roumieu_gh, test_beurling_gh, test_smooth_gh):
    _fn.__test__ = False
