"""Membership of coefficient sequences in smooth, Roumieu, Beurling and dual classes.

Each test reduces the defining inequality to a scalar diagnostic per rung
and judges its trend on a trailing window (see :mod:`ultrahypo._trend`).
Verdicts are statements about the computed truncation; every verdict
records the ``l_max`` it was made at.

Diagnostics, with ``rho = lambda ** (1/nu)``:

* decay level  ``L(ell) = M^{-1}(-log |u(ell)|) / rho``  (Roumieu/Beurling)
* growth level ``U(ell) = M^{-1}(log+ |u(ell)|) / rho``  (duals)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from . import _trend
from .errors import InsufficientTruncationError, NuMismatchError, SpectralModelError
from .spectra import SpectralModel
from .weights import AssociatedFunction, WeightSequence

MEMBER, NON_MEMBER, INCONCLUSIVE = "member", "non_member", "inconclusive"
DEFAULT_N_GRID = (1, 2, 3, 4, 6, 8, 12, 16)


@dataclass(frozen=True)
class CoefficientSequence:
    model: SpectralModel
    coeffs: tuple = field(repr=False)

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=complex).ravel() for c in self.coeffs)
        if len(coeffs) > len(self.model):
            raise SpectralModelError(f"{len(coeffs)} coefficient blocks for {len(self.model)} rungs")
        for ell, c in enumerate(coeffs):
            if c.size != self.model.mults[ell]:
                raise SpectralModelError(
                    f"coefficient block at ell={ell} has length {c.size}, expected {self.model.mults[ell]}",
                    index=ell,
                )
            c.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def l_max(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, ell):
        return self.coeffs[ell]

    @classmethod
    def zeros(cls, model: SpectralModel) -> "CoefficientSequence":
        return cls(model, tuple(np.zeros(int(d), dtype=complex) for d in model.mults))

    @classmethod
    def from_norms(cls, model: SpectralModel, norms, spread: str = "first") -> "CoefficientSequence":
        """Blocks with prescribed HS norms, placed on the first axis or spread evenly."""
        norms = np.asarray(norms, dtype=float)
        blocks = []
        for nrm, d in zip(norms, model.mults):
            v = np.zeros(int(d), dtype=complex)
            if spread == "uniform":
                v[:] = nrm / math.sqrt(d)
            else:
                v[0] = nrm
            blocks.append(v)
        return cls(model, tuple(blocks))

    def to_dict(self) -> dict:
        return {
            "model": self.model.name,
            "coeffs": [
                {"ell": ell, "re": c.real.tolist(), "im": c.imag.tolist()}
                for ell, c in enumerate(self.coeffs)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, model: SpectralModel) -> "CoefficientSequence":
        if data.get("model") != model.name:
            raise SpectralModelError(
                f"coefficient file refers to model {data.get('model')!r}, got {model.name!r}"
            )
        entries = sorted(data["coeffs"], key=lambda e: e["ell"])
        if [e["ell"] for e in entries] != list(range(len(entries))):
            raise SpectralModelError("coefficient blocks must cover ell = 0, 1, ... without gaps")
        return cls(
            model,
            tuple(np.asarray(e["re"], dtype=float) + 1j * np.asarray(e["im"], dtype=float) for e in entries),
        )


def load_coefficients(path, model: SpectralModel) -> CoefficientSequence:
    return CoefficientSequence.from_dict(json.loads(Path(path).read_text()), model)


def save_coefficients(u: CoefficientSequence, path) -> None:
    Path(path).write_text(json.dumps(u.to_dict()))


@dataclass
class MembershipVerdict:
    class_tag: str
    decision: str
    fitted: dict
    truncation: int
    curve: list = field(default_factory=list)
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "class_tag": self.class_tag,
            "decision": self.decision,
            "truncation": self.truncation,
            "fitted": self.fitted,
            "notes": self.notes,
            "curve": [list(t) for t in self.curve],
        }


def hs_norms(u: CoefficientSequence) -> np.ndarray:
    """Per-block Euclidean norm ``|u(ell)|_HS`` (scaled, so no overflow near the float limit)."""
    out = np.empty(len(u))
    for ell, c in enumerate(u.coeffs):
        a = np.abs(c)
        top = a.max(initial=0.0)
        out[ell] = top * math.sqrt(float(np.sum((a / top) ** 2))) if top > 0 and np.isfinite(top) else top
    return out


def _block_sq(c: np.ndarray) -> float:
    return math.fsum((c.real * c.real + c.imag * c.imag).tolist())


def plancherel_sum(u: CoefficientSequence) -> float:
    """Partial Plancherel sum ``sum_ell |u(ell)|_HS^2`` over the stored blocks.

    Per-block and total sums are correctly rounded, so the result does not
    depend on summation order.
    """
    return math.fsum(_block_sq(c) for c in u.coeffs)


def plancherel_partial_sums(u: CoefficientSequence) -> np.ndarray:
    return np.cumsum([_block_sq(c) for c in u.coeffs])


class _Data:
    """Per-sequence quantities shared by the tests."""

    def __init__(self, u: CoefficientSequence, w: WeightSequence | None, assoc: AssociatedFunction | None):
        model = u.model
        if w is not None and w.nu != model.nu:
            raise NuMismatchError(f"weights nu={w.nu} but model nu={model.nu}")
        n = len(u)
        self.ell = np.arange(n)
        self.lam = model.lambdas[:n]
        self.rho = self.lam ** (1.0 / model.nu)
        self.norms = hs_norms(u)
        with np.errstate(divide="ignore"):
            self.log_norms = np.log(self.norms)
        self.f = assoc if assoc is not None else (AssociatedFunction(w) if w is not None else None)
        past = self.lam >= _trend.BURN_IN_LAMBDA
        self.active = np.flatnonzero(past & (self.norms > 0))
        region = _trend.tail_region_start(self.lam)
        self.vacuous = not np.any(self.active >= region)
        self.window = _trend.trailing(self.active)
        self.l_max = n - 1

    def decay_level(self, idx):
        y = np.maximum(0.0, -self.log_norms[idx])
        return np.asarray(self.f.inverse(y)) / self.rho[idx]

    def growth_level(self, idx):
        y = np.maximum(0.0, self.log_norms[idx])
        return np.asarray(self.f.inverse(y)) / self.rho[idx]

    def curve(self, idx, values):
        return [(int(i), float(self.lam[i]), float(v)) for i, v in zip(idx, values)]

    def log_bound_constant(self, L: float, sign: int) -> float:
        """``log max_ell |u(ell)| exp(-sign * M(L rho))`` over nonzero blocks."""
        nz = np.flatnonzero(self.norms > 0)
        if not nz.size:
            return -math.inf
        return float(np.max(self.log_norms[nz] - sign * np.asarray(self.f(L * self.rho[nz]))))


def test_smooth(u: CoefficientSequence, n_grid=DEFAULT_N_GRID) -> MembershipVerdict:
    """``|u(ell)| <= C_N (1 + lambda)^-N`` for every ``N``?"""
    data = _Data(u, None, None)
    if data.l_max < 8:
        raise InsufficientTruncationError("smooth test needs l_max >= 8")
    log1p_lam = np.log1p(data.lam)
    nz = np.flatnonzero(data.norms > 0)
    # log C_N = max_ell log|u(ell)| + N log(1 + lambda), kept in log form
    fitted = {
        "log_C_N": {
            str(n): float(np.max(data.log_norms[nz] + n * log1p_lam[nz])) if nz.size else -math.inf
            for n in n_grid
        }
    }
    if data.vacuous:
        return MembershipVerdict("smooth", MEMBER, fitted, data.l_max, notes="tail vacuous")
    win = data.window
    ratio = data.log_norms[win] / log1p_lam[win]
    curve = data.curve(win, ratio)
    for n in n_grid:
        g = data.log_norms[win] + n * log1p_lam[win]
        if win.size >= _trend.MIN_WINDOW and np.all(np.diff(g) >= 0) and g[-1] > g[0]:
            fitted["unbounded_N"] = n
            return MembershipVerdict("smooth", NON_MEMBER, fitted, data.l_max, curve)
    if win.size >= _trend.MIN_WINDOW:
        x = np.log(data.lam[win])
        xc = x - x.mean()
        q_slope = float(np.dot(xc, ratio - ratio.mean()) / np.dot(xc, xc))
        fitted["ratio_slope"] = q_slope
        if q_slope < -_trend.SLOPE_THRESHOLD:
            return MembershipVerdict("smooth", MEMBER, fitted, data.l_max, curve)
    return MembershipVerdict("smooth", INCONCLUSIVE, fitted, data.l_max, curve)


def test_roumieu(u: CoefficientSequence, w: WeightSequence, assoc: AssociatedFunction | None = None) -> MembershipVerdict:
    """Is ``|u(ell)| <= C exp(-M(L rho))`` for some ``C, L > 0``?"""
    data = _Data(u, w, assoc)
    return _roumieu(u, data)


def _roumieu(u, data: _Data) -> MembershipVerdict:
    if data.vacuous:
        log_c = data.log_bound_constant(0.0, -1) if data.norms.any() else -math.inf
        return MembershipVerdict(
            "roumieu", MEMBER, {"L_star": None, "C": _exp(log_c)}, data.l_max, notes="tail vacuous"
        )
    win = data.window
    level = data.decay_level(win)
    curve = data.curve(win, level)
    if win.size < _trend.MIN_WINDOW:
        return MembershipVerdict("roumieu", INCONCLUSIVE, {}, data.l_max, curve, "too few active blocks")
    if np.any(level == 0):
        smooth = test_smooth(u)
        decision = NON_MEMBER if smooth.decision == NON_MEMBER else INCONCLUSIVE
        return MembershipVerdict("roumieu", decision, {}, data.l_max, curve, "blocks of norm >= 1 in the tail")
    slope = _trend.envelope_slope(data.lam[win], level, "prefix_min")
    trend = _trend.classify_slope(slope)
    fitted = {"lower_envelope_slope": slope}
    if trend == "decreasing":
        return MembershipVerdict("roumieu", NON_MEMBER, fitted, data.l_max, curve)
    l_star = float(level.min())
    log_c = data.log_bound_constant(l_star, -1)
    fitted.update({"L_star": l_star, "C": _exp(log_c), "log_C": log_c})
    return MembershipVerdict("roumieu", MEMBER, fitted, data.l_max, curve)


def test_beurling(
    u: CoefficientSequence,
    w: WeightSequence,
    l_grid=_trend.DEFAULT_GRID,
    assoc: AssociatedFunction | None = None,
) -> MembershipVerdict:
    """Is ``|u(ell)| <= C_L exp(-M(L rho))`` for every ``L > 0``?"""
    data = _Data(u, w, assoc)
    log_cl = {f"{L:.6g}": data.log_bound_constant(L, -1) for L in l_grid}
    fitted = {"log_C_L": log_cl}
    if data.vacuous:
        return MembershipVerdict("beurling", MEMBER, fitted, data.l_max, notes="tail vacuous")
    rou = _roumieu(u, data)
    win = data.window
    curve = rou.curve
    if rou.decision == NON_MEMBER:
        return MembershipVerdict("beurling", NON_MEMBER, fitted, data.l_max, curve, "not even Roumieu")
    if rou.decision == INCONCLUSIVE:
        return MembershipVerdict("beurling", INCONCLUSIVE, fitted, data.l_max, curve, rou.notes)
    level = np.array([v for _, _, v in curve])
    slope = _trend.envelope_slope(data.lam[win], level, "suffix_min")
    fitted["lower_envelope_slope"] = slope
    if _trend.classify_slope(slope) == "growing":
        return MembershipVerdict("beurling", MEMBER, fitted, data.l_max, curve)
    return MembershipVerdict("beurling", NON_MEMBER, fitted, data.l_max, curve, "decay level bounded")


def test_dual(
    u: CoefficientSequence,
    w: WeightSequence,
    flavor: str,
    l_grid=_trend.DEFAULT_GRID,
    assoc: AssociatedFunction | None = None,
) -> MembershipVerdict:
    """Ultradistribution bounds ``|u(ell)| <= K exp(M(L rho))``.

    ``flavor="roumieu"``: for every ``L`` some ``K_L`` (growth level tends to 0).
    ``flavor="beurling"``: some ``K`` and ``L`` (growth level bounded).
    """
    if flavor not in ("roumieu", "beurling"):
        raise ValueError(f"flavor must be 'roumieu' or 'beurling', got {flavor!r}")
    tag = f"dual_{flavor}"
    data = _Data(u, w, assoc)
    if data.vacuous:
        return MembershipVerdict(tag, MEMBER, {}, data.l_max, notes="tail vacuous")
    win = data.window
    level = data.growth_level(win)
    curve = data.curve(win, level)
    if win.size < _trend.MIN_WINDOW:
        return MembershipVerdict(tag, INCONCLUSIVE, {}, data.l_max, curve, "too few active blocks")
    fitted = {}
    if flavor == "roumieu":
        fitted["log_K_L"] = {f"{L:.6g}": data.log_bound_constant(L, +1) for L in l_grid}
        slope = _trend.envelope_slope(data.lam[win], level, "suffix_max")
        fitted["upper_envelope_slope"] = slope
        ok = np.all(level == 0) or _trend.classify_slope(slope) == "decreasing"
    else:
        slope = _trend.envelope_slope(data.lam[win], level, "prefix_max")
        fitted["upper_envelope_slope"] = slope
        ok = np.all(level == 0) or _trend.classify_slope(slope) in ("bounded", "decreasing")
        if ok:
            top = float(level.max())
            above = [L for L in l_grid if L >= top]
            L = min(above) if above else (top if top > 0 else min(l_grid))
            log_k = data.log_bound_constant(L, +1)
            fitted.update({"L": L, "K": _exp(log_k), "log_K": log_k})
    return MembershipVerdict(tag, MEMBER if ok else NON_MEMBER, fitted, data.l_max, curve)


def epower_check(
    u: CoefficientSequence,
    w: WeightSequence,
    k_max: int,
    h_grid=_trend.DEFAULT_GRID,
    last_share: float = 0.1,
) -> dict:
    """Fit ``|E^k u| <= C h^{nu k} M_{nu k}`` for ``k = 0 .. k_max``.

    ``|E^k u|^2 = sum_ell lambda^{2k} |u(ell)|^2`` over the stored blocks.
    The smallest grid ``h`` whose ratio sequence peaks before ``k_max`` is
    returned with its constant ``C``; ``h = None`` reports growth that no
    grid value tames.

    Raises :class:`InsufficientTruncationError` if the last block carries
    more than ``last_share`` of some sum.
    """
    data = _Data(u, w, None)
    nu = w.nu
    nz = np.flatnonzero(data.norms > 0)
    if not nz.size:
        return {"C": 0.0, "h": float(h_grid[0]), "log_norms": [-math.inf] * (k_max + 1)}
    ks = np.arange(k_max + 1)
    lam = data.lam[nz]
    with np.errstate(divide="ignore"):
        log_lam = np.log(lam)
    with np.errstate(invalid="ignore"):
        terms = 2 * ks[:, None] * log_lam[None, :] + 2 * data.log_norms[nz][None, :]
    terms[0, lam == 0] = 2 * data.log_norms[nz][lam == 0]
    terms[1:, lam == 0] = -math.inf
    log_sq = logsumexp(terms, axis=1)
    if nz[-1] == data.l_max:
        share = np.exp(terms[:, -1] - log_sq)
        bad = np.flatnonzero(share > last_share)
        if bad.size:
            raise InsufficientTruncationError(
                f"last block carries {share[bad[0]]:.0%} of |E^{bad[0]} u|^2", k=int(bad[0])
            )
    log_ek = 0.5 * log_sq
    log_mk = np.asarray(w.log_m(nu * ks), dtype=float)
    out = {"log_norms": log_ek.tolist(), "h": None, "C": None}
    for h in sorted(h_grid):
        ratio = log_ek - nu * ks * math.log(h) - log_mk
        if int(np.argmax(ratio)) < k_max:
            out.update({"h": float(h), "C": _exp(float(ratio.max())), "log_C": float(ratio.max())})
            break
    return out


def _exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    return math.exp(x) if x < 709.0 else math.inf


for _fn in (test_smooth, test_roumieu, test_beurling, test_dual):
    _fn.__test__ = False
