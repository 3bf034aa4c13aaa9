"""Command-line front end.

Every subcommand writes one deterministic JSON report (and optionally a
CSV curve) and maps its decision to the exit status:

    0  holds / member / success
    2  fails / non_member
    3  inconclusive
    1  error
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import _io, _trend, __version__
from .classify import (
    CoefficientSequence,
    load_coefficients,
    test_beurling,
    test_dual,
    test_roumieu,
    test_smooth,
)
from .errors import UltrahypoError
from .hypotest import implication_check, test_beurling_gh, test_roumieu_gh, test_smooth_gh
from .spectra import builtin_model, load_model, save_model
from .symbols import family_values, generate, load_symbol, m_values, save_symbol
from .synth import K_CAP, invariant_report, read_bundle, synth_beurling, synth_roumieu, verify_contract, write_bundle
from .weights import AssociatedFunction, WeightSequence, check_axioms, doubling_check, fit_constants, load_weights

EXIT = {"holds": 0, "member": 0, "success": 0, "fails": 2, "non_member": 2, "inconclusive": 3}
MIN_LMAX = 16


class InputError(Exception):
    """Bad input, reported with the name of the offending argument."""


def _grid(text: str) -> list[float]:
    try:
        a, b, n = text.split(":")
        return _trend.geometric_grid(float(a), float(b), int(n)).tolist()
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid {text!r} must be a:b:n with 0 < a, b and n >= 1 ({exc})")


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"--param expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass
    if isinstance(value, list) and value and value[0] == "stride":
        value = tuple(value)
    return key, value


def _guard(label, fn, *args):
    try:
        return fn(*args)
    except (UltrahypoError, ValueError, KeyError, TypeError, OSError, jsonschema.ValidationError) as exc:
        raise InputError(f"{label}: {exc}") from None


def _model(args):
    text = args.model
    if text.startswith("builtin:"):
        model = _guard(f"--model {text}", builtin_model, text.split(":", 1)[1], args.lmax)
    else:
        model = _guard(f"--model {text}", load_model, text)
        if args.lmax_given:
            if args.lmax > model.l_max:
                raise InputError(f"--model {text}: holds {model.l_max} rungs, --lmax {args.lmax} requested")
            model = model.truncate(args.lmax)
    if model.l_max < MIN_LMAX:
        raise InputError(f"--model {text}: l_max={model.l_max} is below the minimum {MIN_LMAX}")
    return model


def _weights(args, nu):
    text = args.weights
    if text is None:
        raise InputError("--weights is required for this subcommand")
    head, _, tail = text.partition(":")
    if head == "gevrey" and tail:
        return _guard(f"--weights {text}", WeightSequence.gevrey, float(tail), nu)
    if head == "analytic" and not tail:
        return WeightSequence.analytic(nu)
    w = _guard(f"--weights {text}", load_weights, text)
    if w.nu != nu:
        raise InputError(f"--weights {text}: nu={w.nu} does not match nu={nu}")
    return w


def _assoc(args, w):
    return AssociatedFunction(w, clamp_nonnegative=args.clamp_assoc == "on")


def _family_params(args):
    params = dict(args.param or [])
    if "weights" in params:
        raise InputError("--param weights: family weights come from --weights")
    return params


def _symbol(args, model, w):
    if getattr(args, "symbol", None):
        s = _guard(f"--symbol {args.symbol}", load_symbol, args.symbol, model)
        if len(s) < len(model):
            raise InputError(f"--symbol {args.symbol}: {len(s)} blocks, model has {len(model)} rungs")
        return s
    if not args.family:
        raise InputError("give --symbol PATH or --family NAME")
    params = _family_params(args)
    return _guard(f"--family {args.family}", lambda: generate(model, args.family, weights=w, **params))


def _symbol_label(args):
    return f"--symbol {args.symbol}" if getattr(args, "symbol", None) else f"--family {args.family}"


def _coefficients(args, model, w):
    if args.coeffs:
        return _guard(f"--coeffs {args.coeffs}", load_coefficients, args.coeffs, model)
    if not args.family:
        raise InputError("give --coeffs PATH or --family NAME")
    params = _family_params(args)
    vals = _guard(f"--family {args.family}", lambda: family_values(model, args.family, w, **params))
    return CoefficientSequence.from_norms(model, np.abs(vals))


# ------------------------------------------------------------------ commands


def cmd_weights_check(args):
    nu = args.nu
    w = _weights(args, nu)
    grid = args.r_grid or _trend.geometric_grid(1.0, 1e6, 7).tolist()
    f = _assoc(args, w)
    k_star = int(np.max(f.argmax_index(args.h * np.asarray(grid))))
    prefix = max(args.prefix or 0, 2 * nu * k_star + 1, 3)
    rep = _guard(f"--weights {args.weights}", check_axioms, w, prefix, args.h)
    c = _guard(f"--weights {args.weights}", fit_constants, w, args.h, prefix)
    dbl = doubling_check(f, c, grid)
    ok = rep.m0 and rep.m3 and dbl.certified and dbl.covered
    result = {
        "weights": w.to_dict(),
        "prefix_len": prefix,
        "m0": rep.m0,
        "m3": rep.m3,
        "m3_first_violation": rep.m3_first_violation,
        "h": c.h,
        "log_a": c.log_a,
        "doubling": {
            "grid": list(dbl.grid),
            "margins": list(dbl.margins),
            "max_violation": dbl.max_violation,
            "required_prefix": dbl.required_prefix,
            "covered": dbl.covered,
            "halving_residual": dbl.halving_residual,
        },
    }
    rows = [(float(r), float(mg)) for r, mg in zip(dbl.grid, dbl.margins)]
    return ("holds" if ok else "fails"), None, result, (["rho", "margin"], rows)


def cmd_assoc_eval(args):
    w = _weights(args, args.nu)
    f = _assoc(args, w)
    grid = np.asarray(args.r_grid or _trend.geometric_grid(1e-3, 1e6, 60).tolist())
    values = np.asarray(_guard("--r-grid", f, grid), dtype=float)
    ks = np.asarray(f.argmax_index(grid))
    inv = np.asarray(f.inverse(values), dtype=float)
    result = {
        "weights": w.to_dict(),
        "clamp": args.clamp_assoc == "on",
        "r": grid.tolist(),
        "M": values.tolist(),
        "argmax_k": [int(k) for k in ks],
        "inverse_of_M": inv.tolist(),
    }
    rows = [(float(r), float(v), int(k), float(i)) for r, v, k, i in zip(grid, values, ks, inv)]
    return "success", None, result, (["r", "M", "k", "inverse"], rows)


def cmd_model_gen(args):
    model = _model(args)
    result = {"name": model.name, "nu": model.nu, "rungs": len(model)}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        save_model(model, Path(args.out) / "model.json")
    rows = [(i, float(lam), int(d)) for i, (lam, d) in enumerate(model.ladder)]
    return "success", model.l_max, result, (["ell", "lambda", "mult"], rows)


def cmd_symbol_gen(args):
    model = _model(args)
    w = _weights(args, model.nu) if args.weights else None
    s = _symbol(args, model, w)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        save_symbol(s, Path(args.out) / "symbol.json")
    m = m_values(s)
    result = {"model": model.name, "family": s.generator_tag, "params": _family_params(args), "m": m.tolist()}
    rows = [(i, float(lam), float(v)) for i, (lam, v) in enumerate(zip(model.lambdas, m))]
    return "success", s.l_max, result, (["ell", "lambda", "m"], rows)


def cmd_classify(args):
    model = _model(args)
    needs_w = args.cls != "smooth"
    w = _weights(args, model.nu) if needs_w or args.weights else None
    u = _coefficients(args, model, w)
    f = _assoc(args, w) if w is not None else None
    if args.cls == "smooth":
        v = test_smooth(u)
    elif args.cls == "roumieu":
        v = test_roumieu(u, w, f)
    elif args.cls == "beurling":
        v = test_beurling(u, w, args.l_grid or _trend.DEFAULT_GRID, f)
    else:
        v = test_dual(u, w, args.cls.split("_", 1)[1], args.l_grid or _trend.DEFAULT_GRID, f)
    rows = [(i, float(lam), float(val)) for i, lam, val in v.curve]
    return v.decision, v.truncation, v.to_dict(), (["ell", "lambda", "value"], rows)


def cmd_hypotest(args):
    model = _model(args)
    needs_w = args.condition != "smooth"
    w = _weights(args, model.nu) if needs_w or args.weights else None
    s = _symbol(args, model, w)
    sign = int(args.smooth_exponent_sign)
    if args.condition == "implication":
        result = implication_check(s, w, args.eps_grid or _trend.DEFAULT_GRID, sign)
        decision = "fails" if result["contradiction"] else "holds"
        diag = result["roumieu"]["diagnostic"]
    else:
        if args.condition == "roumieu":
            v = test_roumieu_gh(s, w, args.eps_grid or _trend.DEFAULT_GRID, _assoc(args, w))
        elif args.condition == "beurling":
            v = test_beurling_gh(s, w, args.r_grid or _trend.DEFAULT_GRID, _assoc(args, w))
        else:
            v = test_smooth_gh(s, sign)
        decision, result, diag = v.decision, v.to_dict(), v.to_dict()["diagnostic"]
    rows = [tuple(r) for r in diag]
    return decision, s.l_max, result, (["ell", "lambda", "m", "E"], rows)


def cmd_synth(args):
    model = _model(args)
    w = _weights(args, model.nu)
    s = _symbol(args, model, w)
    if args.flavor == "roumieu":
        if args.eps0 is None:
            raise InputError("--eps0 is required for --flavor roumieu")
        ce = _guard(_symbol_label(args), synth_roumieu, s, w, args.eps0)
    else:
        ce = _guard(_symbol_label(args), synth_beurling, s, w, args.k_cap)
    inv = invariant_report(ce, s)
    if args.out:
        write_bundle(ce, args.out, {"weights": w.to_dict(), "invariants": inv})
    result = ce.manifest()
    result["invariants"] = inv
    ok = ce.passed and inv["support_ok"] and inv["unit_norm_ok"] and inv["relation_ok"]
    rows = [
        (ell, float(model.lambdas[ell]), float(lp), float(lb))
        for ell, lp, lb in zip(ce.subsequence, ce.log_norm_pu, ce.log_bound)
    ]
    return ("success" if ok else "fails"), ce.u.l_max, result, (["ell", "lambda", "log_norm_pu", "log_bound"], rows)


def cmd_verify_bundle(args):
    model = _model(args)
    w = _weights(args, model.nu)
    ce = _guard(f"--bundle {args.bundle}", read_bundle, args.bundle, model)
    s = _symbol(args, model, w) if (args.symbol or args.family) else None
    inv = invariant_report(ce, s)
    contract = verify_contract(ce, w)
    ok = all(c["passed"] for c in contract.values()) and inv["support_ok"] and inv["unit_norm_ok"]
    if s is not None:
        ok = ok and inv["relation_ok"]
    result = {"flavor": ce.flavor, "subsequence": ce.subsequence, "invariants": inv, "contract": contract}
    rows = [(ell, float(model.lambdas[ell])) for ell in ce.subsequence]
    return ("success" if ok else "fails"), ce.u.l_max, result, (["ell", "lambda"], rows)


COMMANDS = {
    "weights-check": cmd_weights_check,
    "assoc-eval": cmd_assoc_eval,
    "model-gen": cmd_model_gen,
    "symbol-gen": cmd_symbol_gen,
    "classify": cmd_classify,
    "hypotest": cmd_hypotest,
    "synth": cmd_synth,
    "verify-bundle": cmd_verify_bundle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (report to stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="json")
    common.add_argument("--weights", help="gevrey:S, analytic, or a weights JSON file")
    common.add_argument("--clamp-assoc", choices=("on", "off"), default="on")
    common.add_argument("--eps-grid", type=_grid)
    common.add_argument("--l-grid", type=_grid)
    common.add_argument("--r-grid", type=_grid)

    modelled = argparse.ArgumentParser(add_help=False)
    modelled.add_argument("--model", required=True, help="builtin:torus1|torus2|torus3|sphere or a model JSON file")
    modelled.add_argument("--lmax", type=int)

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--family", help="generate the input from a named family")
    inputs.add_argument("--param", type=_param, action="append", metavar="KEY=VALUE")

    p = argparse.ArgumentParser(prog="ultrahypo", description="Ultradifferentiable classes and global hypoellipticity tests.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("weights-check", parents=[common], help="axioms, (A, H) fit and doubling check")
    q.add_argument("--nu", type=int, default=1)
    q.add_argument("--h", type=float, default=2.0)
    q.add_argument("--prefix", type=int)

    q = sub.add_parser("assoc-eval", parents=[common], help="tabulate the associated function")
    q.add_argument("--nu", type=int, default=1)

    sub.add_parser("model-gen", parents=[common, modelled], help="write a spectral model file")
    sub.add_parser("symbol-gen", parents=[common, modelled, inputs], help="write a symbol file from a family")

    q = sub.add_parser("classify", parents=[common, modelled, inputs], help="class membership of coefficients")
    q.add_argument("--class", dest="cls", required=True,
                   choices=("smooth", "roumieu", "beurling", "dual_roumieu", "dual_beurling"))
    q.add_argument("--coeffs", help="coefficient JSON file")

    q = sub.add_parser("hypotest", parents=[common, modelled, inputs], help="hypoellipticity condition tests")
    q.add_argument("--condition", required=True, choices=("roumieu", "beurling", "smooth", "implication"))
    q.add_argument("--symbol", help="symbol JSON file")
    q.add_argument("--smooth-exponent-sign", choices=("+1", "-1", "1"), default="-1")

    q = sub.add_parser("synth", parents=[common, modelled, inputs], help="counterexample bundle")
    q.add_argument("--flavor", required=True, choices=("roumieu", "beurling"))
    q.add_argument("--symbol", help="symbol JSON file")
    q.add_argument("--eps0", type=float)
    q.add_argument("--k-cap", type=int, default=K_CAP)

    q = sub.add_parser("verify-bundle", parents=[common, modelled, inputs], help="re-check a bundle")
    q.add_argument("--bundle", required=True)
    q.add_argument("--symbol", help="symbol JSON file for the exact pu = sigma u check")
    return p


def _config(args) -> dict:
    skip = {"out", "format", "lmax_given"}
    cfg = {}
    for k in sorted(vars(args)):
        if k in skip:
            continue
        v = getattr(args, k)
        cfg[k] = [list(p) for p in v] if k == "param" and v else v
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "lmax"):
        args.lmax_given = args.lmax is not None
        if args.lmax is None:
            args.lmax = 512
    try:
        decision, l_max, result, table = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"ultrahypo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except UltrahypoError as exc:
        print(f"ultrahypo {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    cfg = _config(args)
    report = {
        "tool": "ultrahypo",
        "version": __version__,
        "command": args.command,
        "config_hash": _io.config_hash(cfg),
        "l_max": l_max,
        "decision": decision,
        "config": cfg,
        "result": _clean(result),
    }
    text = _io.dumps(report)
    if args.out:
        out = Path(args.out)
        if args.format in ("json", "both"):
            _io.write_text(out / "report.json", text)
        if args.format in ("csv", "both"):
            _io.write_text(out / "curve.csv", _io.csv_text(*table))
    elif args.format == "csv":
        sys.stdout.write(_io.csv_text(*table))
    else:
        sys.stdout.write(text)
    return EXIT[decision]


def _clean(obj):
    """Stringify non-string keys so reports stay valid JSON objects."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def main(argv=None) -> None:
    sys.exit(run(argv))
