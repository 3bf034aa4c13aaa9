"""Singular solutions for symbols that violate a hypoellipticity condition.

The construction puts a unit minimizer vector of ``sigma(ell_k)`` on a sparse
subsequence ``ell_k`` of violating rungs and zero elsewhere.  Then ``u`` has
unit blocks (so it is an ultradistribution but not smooth) while
``Pu = sigma u`` inherits the small norms ``m(sigma(ell_k))`` and lands in the
class.

Only finitely many rungs are ever available, so a bundle documents a finite
violation set.  It never certifies that the set is infinite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _io, _trend
from .classify import (
    CoefficientSequence,
    hs_norms,
    load_coefficients,
    save_coefficients,
    test_beurling,
    test_dual,
    test_roumieu,
    test_smooth,
)
from .errors import InsufficientTruncationError, NoCounterexampleError, NuMismatchError, ScheduleExhaustedError
from .symbols import SymbolSequence, m_sigma, m_values
from .weights import AssociatedFunction, WeightSequence

K_CAP = 32
FINITE_NOTE = "violation set enumerated within truncation only; infinitude is not certified"


@dataclass
class Counterexample:
    u: CoefficientSequence
    pu: CoefficientSequence
    subsequence: list
    flavor: str
    eps0_or_schedule: object
    log_norm_pu: list = field(default_factory=list)
    log_bound: list = field(default_factory=list)
    contract: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.contract) and all(c["passed"] for c in self.contract.values())

    def manifest(self) -> dict:
        eps_key = "eps0" if self.flavor == "roumieu" else "schedule"
        return {
            "flavor": self.flavor,
            "model": self.u.model.name,
            "l_max": self.u.l_max,
            "subsequence": list(self.subsequence),
            eps_key: self.eps0_or_schedule,
            "log_norm_u": [0.0] * len(self.subsequence),
            "log_norm_pu": list(self.log_norm_pu),
            "log_bound": list(self.log_bound),
            "contract": self.contract,
            "contract_passed": self.passed,
            "notes": FINITE_NOTE,
        }


def _check_nu(s, w):
    if w.nu != s.model.nu:
        raise NuMismatchError(f"weights nu={w.nu} but model nu={s.model.nu}")


def _assemble(s: SymbolSequence, picks) -> tuple:
    model = s.model
    u_blocks = [np.zeros(int(d), dtype=complex) for d in model.mults[: len(s)]]
    pu_blocks = [np.zeros(int(d), dtype=complex) for d in model.mults[: len(s)]]
    log_pu = []
    for ell in picks:
        v = m_sigma(s, int(ell)).minimizer
        u_blocks[ell] = v
        pu_blocks[ell] = s[ell] @ v
        nrm = float(np.linalg.norm(pu_blocks[ell]))
        log_pu.append(math.log(nrm) if nrm > 0 else -math.inf)
    model = model.truncate(len(s) - 1)
    return CoefficientSequence(model, tuple(u_blocks)), CoefficientSequence(model, tuple(pu_blocks)), log_pu


def _horizon(c: CoefficientSequence, last: int) -> CoefficientSequence:
    """Truncate at the last pick: nothing beyond it carries information."""
    return CoefficientSequence(c.model.truncate(last), c.coeffs[: last + 1])


def _entry(verdict, expected: str, extra=None) -> dict:
    out = {"decision": verdict.decision, "expected": expected, "passed": verdict.decision == expected}
    out["fitted"] = {k: v for k, v in verdict.fitted.items() if not isinstance(v, dict)}
    if extra:
        out.update(extra)
        out["passed"] = out["passed"] and all(v for k, v in extra.items() if k.endswith("_ok"))
    return out


def _guarded(fn, *args, expected):
    try:
        return _entry(fn(*args), expected)
    except InsufficientTruncationError as exc:
        return {"decision": "inconclusive", "expected": expected, "passed": False, "notes": str(exc)}


def synth_roumieu(s: SymbolSequence, w: WeightSequence, eps0: float) -> Counterexample:
    """Counterexample from every rung where ``m(sigma) < exp(-M(eps0 rho))``."""
    _check_nu(s, w)
    if not eps0 > 0:
        raise ValueError("eps0 must be positive")
    f = AssociatedFunction(w)
    lam = s.model.lambdas[: len(s)]
    rho = lam ** (1.0 / s.model.nu)
    m = m_values(s)
    bound = -np.asarray(f(eps0 * rho))
    with np.errstate(divide="ignore"):
        viol = np.flatnonzero((lam >= _trend.BURN_IN_LAMBDA) & (np.log(m) < bound))
    if not viol.size:
        raise NoCounterexampleError(
            f"no rung up to l_max={s.l_max} has m(sigma) < exp(-M({eps0:g} rho)); "
            "this does not show the condition holds"
        )
    picks = viol.tolist()
    u, pu, log_pu = _assemble(s, picks)
    ce = Counterexample(u, pu, picks, "roumieu", float(eps0), log_pu, bound[viol].tolist())
    ce.contract = verify_contract(ce, w)
    return ce


def synth_beurling(s: SymbolSequence, w: WeightSequence, k_cap: int = K_CAP) -> Counterexample:
    """Greedy schedule: for ``k = 1, 2, ...`` the first unused ``ell`` with ``m < exp(-M(k rho))``."""
    _check_nu(s, w)
    if k_cap < 1:
        raise ValueError("k_cap must be at least 1")
    f = AssociatedFunction(w)
    lam = s.model.lambdas[: len(s)]
    rho = lam ** (1.0 / s.model.nu)
    with np.errstate(divide="ignore"):
        log_m = np.log(m_values(s))
    candidates = np.flatnonzero(lam >= _trend.BURN_IN_LAMBDA)
    picks, bounds, start = [], [], 0
    for k in range(1, k_cap + 1):
        rest = candidates[start:]
        b = -np.asarray(f(k * rho[rest]))
        hit = np.flatnonzero(log_m[rest] < b)
        if not hit.size:
            raise ScheduleExhaustedError(
                f"no rung beyond ell={picks[-1] if picks else 0} satisfies the k={k} bound "
                f"within l_max={s.l_max}",
                k_reached=k,
            )
        picks.append(int(rest[hit[0]]))
        bounds.append(float(b[hit[0]]))
        start += int(hit[0]) + 1
    u, pu, log_pu = _assemble(s, picks)
    schedule = list(range(1, k_cap + 1))
    ce = Counterexample(u, pu, picks, "beurling", schedule, log_pu, bounds)
    ce.contract = verify_contract(ce, w)
    return ce


def verify_contract(ce: Counterexample, w: WeightSequence, l_grid=_trend.DEFAULT_GRID) -> dict:
    """Dual membership of ``u``, non-smoothness of ``u`` and class membership of ``Pu``.

    All checks run on the truncation ending at the last pick.
    """
    last = max(ce.subsequence)
    u, pu = _horizon(ce.u, last), _horizon(ce.pu, last)
    f = AssociatedFunction(w)
    out = {
        "dual": _guarded(test_dual, u, w, ce.flavor, l_grid, f, expected="member"),
        "smooth": _guarded(test_smooth, u, expected="non_member"),
    }
    if ce.flavor == "roumieu":
        eps0 = float(ce.eps0_or_schedule)
        rho = pu.model.root()
        norms = hs_norms(pu)
        with np.errstate(divide="ignore"):
            slack = np.log(norms) + np.asarray(f(eps0 * rho))
        direct = bool(np.all(slack[norms > 0] < 0))
        out["class"] = _entry(
            test_roumieu(pu, w, f),
            "member",
            {"C": 1.0, "L": eps0, "direct_bound_ok": direct, "max_log_slack": float(np.max(slack, initial=-math.inf))},
        )
    else:
        v = test_beurling(pu, w, l_grid, f)
        out["class"] = _entry(v, "member")
        out["class"]["log_C_L"] = v.fitted.get("log_C_L", {})
    return out


def invariant_report(ce: Counterexample, s: SymbolSequence | None = None) -> dict:
    """Bit-level checks: support, unit norms and (given the symbol) ``pu = sigma u``."""
    sub = set(ce.subsequence)
    support = all(
        (ell in sub) or not np.any(c) for ell, c in enumerate(ce.u.coeffs)
    ) and all((ell in sub) or not np.any(c) for ell, c in enumerate(ce.pu.coeffs))
    dev = max(abs(float(np.sqrt(np.vdot(ce.u[ell], ce.u[ell]).real)) - 1.0) for ell in ce.subsequence)
    out = {"support_ok": bool(support), "unit_norm_max_dev": dev, "unit_norm_ok": bool(dev <= 4 * np.finfo(float).eps)}
    if s is not None:
        out["relation_ok"] = all(np.array_equal(s[ell] @ ce.u[ell], ce.pu[ell]) for ell in ce.subsequence)
        m = m_values(s)
        out["max_norm_gap"] = float(
            max(abs(np.linalg.norm(ce.pu[ell]) - m[ell]) for ell in ce.subsequence)
        )
    return out


def write_bundle(ce: Counterexample, out_dir, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_coefficients(ce.u, out / "u.json")
    save_coefficients(ce.pu, out / "pu.json")
    manifest = ce.manifest()
    if extra:
        manifest.update(extra)
    _io.write_text(out / "manifest.json", _io.dumps(manifest))
    return out


def read_bundle(bundle_dir, model) -> Counterexample:
    d = Path(bundle_dir)
    manifest = json.loads((d / "manifest.json").read_text())
    u = load_coefficients(d / "u.json", model)
    pu = load_coefficients(d / "pu.json", model)
    flavor = manifest["flavor"]
    param = manifest["eps0"] if flavor == "roumieu" else manifest["schedule"]
    return Counterexample(
        u,
        pu,
        [int(i) for i in manifest["subsequence"]],
        flavor,
        param,
        manifest.get("log_norm_pu", []),
        manifest.get("log_bound", []),
        manifest.get("contract", {}),
    )
