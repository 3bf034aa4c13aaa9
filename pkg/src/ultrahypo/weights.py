"""Weight sequences, Komatsu axioms and the associated function.

Everything lives in the log domain: a weight sequence is the map
``k -> log M_k`` and the associated function is

    M(r) = sup_{k >= 1} [ nu*k*log(r) - log M_{nu*k} ],   M(0) = 0.

Because ``log M_k`` is convex (axiom M.3) the terms are concave in ``k``, so
the ascending scan over ``k`` can stop at the first decrease.  The scan is
done with a binary search over the running maximum of the increments
``log M_{nu(k+1)} - log M_{nu k}``, which returns exactly the index the
sequential scan would stop at.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import (
    BudgetExceededError,
    FitFailureError,
    MalformedSequenceError,
    UnreachableLevelError,
)

DEFAULT_K_BUDGET = 10**6
KBUDGET_ENV = "ULTRAHYPO_KBUDGET"

_AXIOM_RTOL = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    """A weight sequence ``{M_k}`` stored as ``log M_k``.

    Use the constructors :meth:`gevrey`, :meth:`analytic`, :meth:`custom`
    or :meth:`from_values` rather than the raw initializer.
    """

    kind: str
    nu: int = 1
    s: float | None = None
    table: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("gevrey", "analytic", "custom"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"nu must be a positive integer, got {self.nu!r}")
        object.__setattr__(self, "nu", int(self.nu))
        if self.kind == "analytic":
            object.__setattr__(self, "s", 1.0)
        if self.kind == "gevrey":
            if self.s is None or not self.s >= 1.0:
                raise ValueError(f"gevrey order s must be >= 1, got {self.s!r}")
            object.__setattr__(self, "s", float(self.s))
        if self.kind == "custom":
            if self.table is None or len(self.table) < 2:
                raise ValueError("custom weights need a table with at least M_0, M_1")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    @classmethod
    def gevrey(cls, s: float, nu: int = 1) -> "WeightSequence":
        """``M_k = (k!)^s``."""
        return cls("gevrey", nu=nu, s=s)

    @classmethod
    def analytic(cls, nu: int = 1) -> "WeightSequence":
        return cls("analytic", nu=nu)

    @classmethod
    def custom(cls, log_m, nu: int = 1) -> "WeightSequence":
        return cls("custom", nu=nu, table=tuple(np.asarray(log_m, dtype=float)))

    @classmethod
    def from_values(cls, m_values, nu: int = 1) -> "WeightSequence":
        """Build a custom sequence from raw ``M_k`` values (logs are taken here).

        Non-positive values become ``-inf``/``nan`` and are reported as
        malformed by the checks that touch them.
        """
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(np.asarray(m_values, dtype=float))
        return cls.custom(logs, nu=nu)

    @property
    def exponent(self) -> float | None:
        """Gevrey order ``s`` (``None`` for custom tables)."""
        return self.s

    @property
    def table_length(self) -> int | None:
        """Number of stored entries, or ``None`` for closed-form kinds."""
        return None if self.table is None else len(self.table)

    def log_m(self, k):
        """``log M_k`` for integer ``k`` (scalar or array)."""
        k_arr = np.asarray(k)
        if np.any(k_arr < 0):
            raise ValueError("weight index must be nonnegative")
        if self.kind == "custom":
            n = len(self.table)
            if np.any(k_arr >= n):
                raise IndexError(f"index {int(np.max(k_arr))} beyond the table length {n}")
            out = np.asarray(self.table)[k_arr]
        else:
            out = self.s * gammaln(k_arr + 1.0)
        return out if np.ndim(out) else float(out)

    def prefix(self, prefix_len: int) -> np.ndarray:
        """``log M_0 .. log M_{prefix_len-1}`` validated as finite."""
        if self.kind == "custom" and prefix_len > len(self.table):
            raise MalformedSequenceError(
                f"prefix of length {prefix_len} requested from a table of length {len(self.table)}"
            )
        logs = np.asarray(self.log_m(np.arange(prefix_len)), dtype=float)
        bad = np.flatnonzero(~np.isfinite(logs))
        if bad.size:
            raise MalformedSequenceError(
                f"M_{bad[0]} is non-finite or non-positive", index=int(bad[0])
            )
        return logs

    def to_dict(self) -> dict:
        if self.kind == "custom":
            return {"kind": "custom", "nu": self.nu, "log_m": list(self.table)}
        return {"kind": self.kind, "s": self.s, "nu": self.nu}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSequence":
        kind = data.get("kind")
        nu = data.get("nu", 1)
        if kind == "gevrey":
            return cls.gevrey(float(data["s"]), nu=nu)
        if kind == "analytic":
            return cls.analytic(nu=nu)
        if kind == "custom":
            return cls.custom(data["log_m"], nu=nu)
        raise ValueError(f"unknown weight kind {kind!r}")


def load_weights(path) -> WeightSequence:
    return WeightSequence.from_dict(json.loads(Path(path).read_text()))


def save_weights(w: WeightSequence, path) -> None:
    Path(path).write_text(json.dumps(w.to_dict()))


@dataclass(frozen=True)
class AxiomConstants:
    """Constants ``(A, H)`` valid for (M.1) and (M.2) on a prefix.

    ``log_a`` is the primary field; ``A`` itself overflows a float for the
    long prefixes Gevrey weights need at moderate ``H``.
    """

    log_a: float
    h: float
    valid_up_to: int

    @property
    def a(self) -> float:
        return math.exp(self.log_a) if self.log_a < 709.0 else math.inf


@dataclass(frozen=True)
class AxiomReport:
    prefix_len: int
    m0: bool
    m3: bool
    m3_first_violation: int | None
    m1_m2_fit: bool
    h: float
    log_a: float

    @property
    def passed(self) -> bool:
        return self.m0 and self.m3 and self.m1_m2_fit

    @property
    def a(self) -> float:
        return math.exp(self.log_a) if self.log_a < 709.0 else math.inf


def _m1_m2_requirements(logs: np.ndarray, log_h: float):
    """Per-index lower bounds on ``log A`` from (M.1) and (M.2)."""
    n = logs.size
    k1 = np.arange(n - 1)
    need1 = logs[1:] - k1 * log_h - logs[:-1]
    k2 = np.arange((n + 1) // 2)
    need2 = logs[2 * k2] - 2 * k2 * log_h - 2 * logs[k2]
    return k1, need1, k2, need2


def check_axioms(w: WeightSequence, prefix_len: int, h: float = 2.0) -> AxiomReport:
    """Check (M.0)-(M.3) on ``M_0 .. M_{prefix_len-1}``.

    (M.0) and (M.3) are exact checks.  For (M.1)/(M.2) a finite prefix always
    admits some ``(A, H)``, so the report records that together with the
    minimal ``A`` for the given ``h``.
    """
    if prefix_len < 2:
        raise ValueError("prefix_len must be at least 2")
    logs = w.prefix(prefix_len)
    m0 = logs[0] == 0.0 and logs[1] == 0.0

    first = None
    if prefix_len >= 3:
        lhs = 2.0 * logs[1:-1]
        rhs = logs[:-2] + logs[2:]
        slack = _AXIOM_RTOL * np.maximum(1.0, np.abs(lhs))
        bad = np.flatnonzero(lhs > rhs + slack)
        if bad.size:
            first = int(bad[0]) + 1
    _, need1, _, need2 = _m1_m2_requirements(logs, math.log(h))
    log_a = max(0.0, float(need1.max(initial=0.0)), float(need2.max(initial=0.0)))
    return AxiomReport(
        prefix_len=prefix_len,
        m0=bool(m0),
        m3=first is None,
        m3_first_violation=first,
        m1_m2_fit=True,
        h=float(h),
        log_a=log_a,
    )


def fit_constants(
    w: WeightSequence, h: float, prefix_len: int, max_log_a: float = math.inf
) -> AxiomConstants:
    """Minimal ``A >= 1`` making (M.1) and (M.2) hold on the prefix for ``H = h``.

    Only inequalities whose indices stay below ``prefix_len`` are used.
    ``max_log_a`` caps the admissible ``log A``; exceeding it raises
    :class:`FitFailureError` with the first index that needs more.
    """
    if not h > 1.0:
        raise ValueError("h must exceed 1")
    logs = w.prefix(prefix_len)
    k1, need1, k2, need2 = _m1_m2_requirements(logs, math.log(h))
    over1 = k1[need1 > max_log_a]
    over2 = k2[need2 > max_log_a]
    if over1.size or over2.size:
        k = min(int(over1[0]) if over1.size else prefix_len, int(over2[0]) if over2.size else prefix_len)
        raise FitFailureError(f"no A with log A <= {max_log_a} fits (first offending k={k})", k=k)
    log_a = max(0.0, float(need1.max(initial=0.0)), float(need2.max(initial=0.0)))
    return AxiomConstants(log_a=log_a, h=float(h), valid_up_to=prefix_len)


def _default_budget() -> int:
    env = os.environ.get(KBUDGET_ENV)
    return int(env) if env else DEFAULT_K_BUDGET


class AssociatedFunction:
    """Evaluator for ``M(r)`` and its generalized inverse.

    Parameters
    ----------
    weights : WeightSequence
    clamp_nonnegative : bool
        Return ``max(0, sup)``.  On by default; every use composes ``M`` with
        ``exp(-.)`` and ``M(0) = 0`` anchors nonnegativity.
    k_budget : int, optional
        Largest ``k`` the scan may reach.  Defaults to ``$ULTRAHYPO_KBUDGET``
        or ``10**6``.

    The increment table is grown lazily and shared between calls; growth is
    guarded by a lock so instances can be used from several threads.
    """

    def __init__(self, weights: WeightSequence, clamp_nonnegative: bool = True, k_budget: int | None = None):
        self.weights = weights
        self.clamp_nonnegative = clamp_nonnegative
        self.k_budget = int(k_budget) if k_budget is not None else _default_budget()
        nu = weights.nu
        if weights.table is not None:
            self._k_limit = min(self.k_budget, (len(weights.table) - 1) // nu)
        else:
            self._k_limit = self.k_budget
        if self._k_limit < 1:
            raise BudgetExceededError("weight table too short to evaluate any term")
        self._lock = threading.Lock()
        self._cummax = np.empty(0)

    @property
    def nu(self) -> int:
        return self.weights.nu

    def _term_log_m(self, k):
        return self.weights.log_m(self.nu * np.asarray(k))

    def _increments(self, n_terms: int) -> np.ndarray:
        """Running maximum of ``d_k`` for ``k = 1 .. n_terms - 1``."""
        with self._lock:
            have = self._cummax.size
            if have < n_terms - 1:
                size = min(max(2 * have, n_terms - 1, 256), self._k_limit - 1)
                k = np.arange(1, size + 2)
                lm = np.asarray(self._term_log_m(k), dtype=float)
                d = np.diff(lm)
                if np.any(~np.isfinite(d)):
                    raise MalformedSequenceError("non-finite weights inside the scanned range")
                self._cummax = np.maximum.accumulate(d)
            return self._cummax

    def argmax_index(self, r):
        """Index ``k`` at which the ascending scan stops (where the sup is attained)."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0) or not np.all(np.isfinite(r_arr)):
            raise ValueError("r must be finite and nonnegative")
        pos = r_arr > 0
        x = np.full(r_arr.shape, -np.inf)
        x[pos] = self.nu * np.log(r_arr[pos])
        x_max = float(x.max(initial=-np.inf))
        n = 256
        while True:
            cm = self._increments(n)
            if cm.size and cm[-1] > x_max:
                break
            if cm.size >= self._k_limit - 1:
                raise BudgetExceededError(
                    f"associated-function scan exceeded k-budget {self._k_limit} "
                    f"(r too large for the weights)"
                )
            n = 2 * max(n, cm.size + 1)
        k = np.searchsorted(cm, x, side="right") + 1
        return k if np.ndim(k) else int(k)

    def raw(self, r):
        """Unclamped supremum over ``k >= 1`` for ``r > 0`` (``M(0) = 0``)."""
        r_arr = np.asarray(r, dtype=float)
        k = np.asarray(self.argmax_index(r_arr))
        out = np.zeros(r_arr.shape)
        pos = r_arr > 0
        kp = k[pos]
        out[pos] = self.nu * kp * np.log(r_arr[pos]) - self._term_log_m(kp)
        return out if out.ndim else float(out)

    def __call__(self, r):
        val = self.raw(r)
        if self.clamp_nonnegative:
            val = np.maximum(val, 0.0)
            return val if np.ndim(val) else float(val)
        return val

    def inverse(self, y, max_expansions: int = 4096):
        """Generalized inverse ``inf{r >= 0 : M(r) >= y}`` by bisection.

        The bracket is expanded by doubling/halving from ``r = 1`` and then
        bisected down to adjacent floating-point numbers, so the result ``r*``
        satisfies ``M(r*) >= y`` while any smaller float fails the level.
        """
        y_arr = np.asarray(y, dtype=float)
        if np.any(y_arr < 0) or not np.all(np.isfinite(y_arr)):
            raise ValueError("level y must be finite and nonnegative")
        flat = y_arr.ravel()
        out = np.zeros(flat.shape)
        idx = np.flatnonzero(flat > 0)
        if idx.size:
            out[idx] = self._bisect(flat[idx], max_expansions)
        out = out.reshape(y_arr.shape)
        return out if out.ndim else float(out)

    def _bisect(self, y: np.ndarray, max_expansions: int) -> np.ndarray:
        hi = np.ones_like(y)
        lo = np.zeros_like(y)
        above = self.raw(hi) >= y

        # upward: lo keeps the last point below the level
        up = ~above
        lo[up] = 1.0
        hi[up] = 2.0
        steps = 0
        while up.any():
            reached = self.raw(hi[up]) >= y[up]
            sel = np.flatnonzero(up)
            up[sel[reached]] = False
            grow = sel[~reached]
            lo[grow] = hi[grow]
            hi[grow] *= 2.0
            steps += 1
            if steps > max_expansions or not np.all(np.isfinite(hi)):
                raise UnreachableLevelError("bracket expansion did not reach the requested level")

        # downward: shrink hi while the level is still met
        down = above.copy()
        lo[down] = 0.5
        steps = 0
        while down.any():
            sel = np.flatnonzero(down)
            still = self.raw(lo[sel]) >= y[sel]
            move = sel[still]
            hi[move] = lo[move]
            lo[move] *= 0.5
            down[sel[~still]] = False
            steps += 1
            if steps > max_expansions:
                raise UnreachableLevelError("bracket contraction did not terminate")

        active = np.ones(y.shape, dtype=bool)
        while active.any():
            sel = np.flatnonzero(active)
            mid = lo[sel] + 0.5 * (hi[sel] - lo[sel])
            done = (mid <= lo[sel]) | (mid >= hi[sel])
            active[sel[done]] = False
            sel, mid = sel[~done], mid[~done]
            if not sel.size:
                break
            ok = self.raw(mid) >= y[sel]
            hi[sel[ok]] = mid[ok]
            lo[sel[~ok]] = mid[~ok]
        return hi


def assoc_eval(f: AssociatedFunction, r):
    return f(r)


def assoc_inverse(f: AssociatedFunction, y):
    return f.inverse(y)


@dataclass(frozen=True)
class DoublingReport:
    """Outcome of the doubling inequality ``2 M(rho) <= log A + M(H rho)``.

    ``halving_residual`` is the diagnostic ``max M(rho/(sqrt(A) H)) - M(rho)/2``
    of the inequality without the additive constant; it is reported, never
    asserted.
    """

    grid: tuple[float, ...]
    margins: tuple[float, ...]
    max_violation: float
    halving_residual: float
    required_prefix: int
    covered: bool

    @property
    def certified(self) -> bool:
        return self.max_violation <= 0.0


def doubling_check(f: AssociatedFunction, c: AxiomConstants, r_grid) -> DoublingReport:
    rho = np.asarray(r_grid, dtype=float)
    lhs = 2.0 * np.asarray(f(rho))
    rhs = c.log_a + np.asarray(f(c.h * rho))
    margins = lhs - rhs
    k_star = int(np.max(f.argmax_index(c.h * rho)))
    required = 2 * f.nu * k_star + 1
    with np.errstate(under="ignore"):
        shrunk = np.exp(np.log(np.maximum(rho, 1e-300)) - 0.5 * c.log_a - math.log(c.h))
    residual = np.asarray(f(np.where(rho > 0, shrunk, 0.0))) - 0.5 * np.asarray(f(rho))
    return DoublingReport(
        grid=tuple(rho.tolist()),
        margins=tuple(margins.tolist()),
        max_violation=float(margins.max()),
        halving_residual=float(residual.max()),
        required_prefix=required,
        covered=c.valid_up_to >= required,
    )
