"""Matrix symbols of invariant operators and their lower bound ``m(sigma)``.

``m(sigma)`` is the infimum of ``|sigma v|`` over unit vectors, i.e. the
smallest singular value of the block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DimensionBudgetError,
    MalformedBlockError,
    NuMismatchError,
    SingularBlockError,
    SpectralModelError,
    UnknownFamilyError,
)
from .spectra import SpectralModel
from .weights import AssociatedFunction, WeightSequence

DIMENSION_BUDGET = 512
SINGULAR_THRESHOLD = 1e-30


@dataclass(frozen=True)
class SymbolSequence:
    model: SpectralModel
    blocks: tuple = field(repr=False)
    generator_tag: str | None = None

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        if len(blocks) > len(self.model):
            raise MalformedBlockError(
                f"{len(blocks)} blocks given for a model with {len(self.model)} rungs"
            )
        for ell, b in enumerate(blocks):
            d = int(self.model.mults[ell])
            if b.shape != (d, d):
                raise MalformedBlockError(
                    f"block at ell={ell} has shape {b.shape}, expected {(d, d)}", ell=ell
                )
            b.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def l_max(self) -> int:
        return len(self.blocks) - 1

    def __getitem__(self, ell: int) -> np.ndarray:
        return self.blocks[ell]

    def __len__(self):
        return len(self.blocks)

    def scaled(self, c: complex) -> "SymbolSequence":
        return SymbolSequence(self.model, tuple(c * b for b in self.blocks), self.generator_tag)

    def to_dict(self) -> dict:
        return {
            "model": self.model.name,
            "blocks": [
                {"ell": ell, "re": b.real.tolist(), "im": b.imag.tolist()}
                for ell, b in enumerate(self.blocks)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, model: SpectralModel) -> "SymbolSequence":
        if data.get("model") != model.name:
            raise SpectralModelError(
                f"symbol file refers to model {data.get('model')!r}, got {model.name!r}"
            )
        entries = sorted(data["blocks"], key=lambda e: e["ell"])
        if [e["ell"] for e in entries] != list(range(len(entries))):
            raise MalformedBlockError("symbol blocks must cover ell = 0, 1, ... without gaps")
        blocks = []
        for e in entries:
            re = np.asarray(e["re"], dtype=float)
            im = np.asarray(e["im"], dtype=float)
            if re.shape != im.shape:
                raise MalformedBlockError(f"re/im shape mismatch at ell={e['ell']}", ell=e["ell"])
            blocks.append(re + 1j * im)
        return cls(model, tuple(blocks), data.get("generator_tag"))


def load_symbol(path, model: SpectralModel) -> SymbolSequence:
    return SymbolSequence.from_dict(json.loads(Path(path).read_text()), model)


def save_symbol(s: SymbolSequence, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict()))


@dataclass(frozen=True)
class SymbolBound:
    ell: int
    m_value: float
    minimizer: np.ndarray = field(repr=False)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the largest-modulus entry is real positive (deterministic output)."""
    j = int(np.argmax(np.abs(v)))
    return v * (abs(v[j]) / v[j])


def smallest_singular(block: np.ndarray, budget: int = DIMENSION_BUDGET):
    """Smallest singular value of ``block`` and a right singular vector for it.

    Ties among minimal singular values are broken by the first index in the
    decomposition's ordering, so repeated calls return the same vector.
    Scaled identities return the first coordinate axis.
    """
    b = np.asarray(block, dtype=complex)
    if not np.all(np.isfinite(b)):
        raise MalformedBlockError("block has non-finite entries")
    d = b.shape[0]
    if _is_scaled_identity(b):
        # every unit vector is a minimizer; take the first axis
        v = np.zeros(d, dtype=complex)
        v[0] = 1.0
        return float(abs(b[0, 0])), v
    if d > budget:
        raise DimensionBudgetError(f"block dimension {d} exceeds the SVD budget {budget}")
    _, sv, vh = np.linalg.svd(b)
    s_min = sv[-1]
    ties = np.flatnonzero(sv <= s_min * (1 + 1e-12) + 1e-300)
    v = vh[ties[0]].conj()
    return float(s_min), _fix_phase(v)


def m_sigma(s: SymbolSequence, ell: int, budget: int = DIMENSION_BUDGET) -> SymbolBound:
    try:
        m, v = smallest_singular(s[ell], budget)
    except MalformedBlockError as exc:
        raise MalformedBlockError(f"ell={ell}: {exc}", ell=ell) from None
    return SymbolBound(ell=ell, m_value=m, minimizer=v)


def m_values(s: SymbolSequence, budget: int = DIMENSION_BUDGET) -> np.ndarray:
    """``m(sigma(ell))`` for every stored block."""
    out = np.empty(len(s))
    for ell, b in enumerate(s.blocks):
        if _is_scaled_identity(b):
            out[ell] = abs(b[0, 0])
        else:
            out[ell] = m_sigma(s, ell, budget).m_value
    return out


def _is_scaled_identity(b: np.ndarray) -> bool:
    d = b.shape[0]
    if d == 1:
        return True
    diag = np.diagonal(b)
    return bool(np.all(diag == diag[0]) and np.count_nonzero(b - np.diag(diag)) == 0)


def inverse_norm_identity_check(s: SymbolSequence, ell: int) -> float:
    """``|m(sigma) * ||sigma^{-1}||_op - 1|`` for an invertible block."""
    bound = m_sigma(s, ell)
    if bound.m_value <= SINGULAR_THRESHOLD:
        raise SingularBlockError(f"block at ell={ell} is singular (m={bound.m_value:.3g})", ell=ell)
    inv = np.linalg.inv(s[ell])
    return abs(bound.m_value * np.linalg.norm(inv, 2) - 1.0)


# ---------------------------------------------------------------- families


def _scalar_blocks(model: SpectralModel, values) -> tuple:
    return tuple(complex(v) * np.eye(int(d), dtype=complex) for v, d in zip(values, model.mults))


def sparse_indices(rule, l_max: int) -> np.ndarray:
    """Index set for ``sparse_drop``: ``"pow2"``, ``("stride", k)`` or an explicit list."""
    if isinstance(rule, str) and rule == "pow2":
        out, p = [], 1
        while p <= l_max:
            out.append(p)
            p *= 2
        return np.array(out, dtype=int)
    if isinstance(rule, tuple) and rule and rule[0] == "stride":
        return np.arange(rule[1], l_max + 1, rule[1])
    idx = np.array(sorted(set(int(i) for i in rule)), dtype=int)
    return idx[idx <= l_max]


def envelope_values(model: SpectralModel, weights: WeightSequence, L, power: float = 1.0):
    """``exp(-power * M(L * lambda^{1/nu}))`` per rung; ``L`` may vary per rung."""
    f = AssociatedFunction(weights)
    return np.exp(-power * np.asarray(f(np.asarray(L) * model.root())))


def generate(
    model: SpectralModel,
    family: str,
    weights: WeightSequence | None = None,
    l_max: int | None = None,
    **params,
) -> SymbolSequence:
    """Build a named fixture family.

    Families (``params`` in parentheses):
      poly_decay(N)       (1 + lambda)^-N * I
      poly_growth(N)      (1 + lambda)^N * I
      exp_decay(c, theta) exp(-c lambda^theta) * I
      envelope(L)         exp(-M(L lambda^{1/nu})) * I         needs weights
      sparse_drop(drop, floor)
                          I off the drop set, floor(ell, lambda) * I on it;
                          floor is a float, a callable, or a descriptor
                          {"kind": "envelope", "L", "power"} / {"kind": "exp", "c", "theta"}
      beurling_planted(stride, factor)
                          factor * exp(-M(k lambda^{1/nu})) * I at ell = k*stride, I elsewhere
      diag_custom(function)
                          diagonal given by function(ell, lambda, d) -> scalar or length-d array
      dense_custom(path)  blocks read from a symbol file
    """
    if l_max is not None:
        model = model.truncate(l_max)
    _check_params(family, params)
    lam = model.lambdas
    tag = family
    if family == "diag_custom":
        fn: Callable = params["function"]
        blocks = []
        for ell, (lv, d) in enumerate(zip(lam, model.mults)):
            diag = np.broadcast_to(np.asarray(fn(ell, lv, int(d)), dtype=complex), (int(d),))
            blocks.append(np.diag(diag))
        return SymbolSequence(model, tuple(blocks), tag)
    if family == "dense_custom":
        s = load_symbol(params["path"], model)
        if len(s) != len(model):
            raise MalformedBlockError(
                f"symbol file holds {len(s)} blocks, model truncation has {len(model)}"
            )
        return SymbolSequence(model, s.blocks, tag)
    vals = family_values(model, family, weights, **params)
    return SymbolSequence(model, _scalar_blocks(model, vals), tag)


SCALAR_FAMILIES = ("poly_decay", "poly_growth", "exp_decay", "envelope", "sparse_drop", "beurling_planted")

FAMILY_PARAMS = {
    "poly_decay": {"N"},
    "poly_growth": {"N"},
    "exp_decay": {"c", "theta"},
    "envelope": {"L"},
    "sparse_drop": {"drop", "floor"},
    "beurling_planted": {"stride", "factor"},
    "diag_custom": {"function"},
    "dense_custom": {"path"},
}


def _check_params(family, params):
    allowed = FAMILY_PARAMS.get(family)
    if allowed is None:
        raise UnknownFamilyError(f"unknown symbol family {family!r}")
    extra = sorted(set(params) - allowed)
    if extra:
        raise ValueError(f"family {family!r} takes {sorted(allowed)}, got unexpected {extra}")


def family_values(model: SpectralModel, family: str, weights: WeightSequence | None = None, **params) -> np.ndarray:
    """Per-rung scalar of a scalar family, without building the blocks."""
    if family not in SCALAR_FAMILIES:
        raise UnknownFamilyError(f"unknown scalar family {family!r}")
    _check_params(family, params)
    lam = model.lambdas
    if family == "poly_decay":
        vals = (1.0 + lam) ** (-float(params["N"]))
    elif family == "poly_growth":
        vals = (1.0 + lam) ** float(params["N"])
    elif family == "exp_decay":
        vals = np.exp(-float(params["c"]) * lam ** float(params["theta"]))
    elif family == "envelope":
        _need_weights(family, weights, model)
        vals = envelope_values(model, weights, float(params["L"]))
    elif family == "sparse_drop":
        drop = sparse_indices(params.get("drop", "pow2"), model.l_max)
        vals = np.ones(len(model))
        floor = params["floor"]
        vals[drop] = _floor_values(floor, model, weights, drop)
    elif family == "beurling_planted":
        _need_weights(family, weights, model)
        stride = int(params.get("stride", 3))
        factor = float(params.get("factor", 0.5))
        planted = np.arange(stride, model.l_max + 1, stride)
        vals = np.ones(len(model))
        f = AssociatedFunction(weights)
        k = planted // stride
        vals[planted] = factor * np.exp(-np.asarray(f(k * model.root()[planted])))
    else:
        raise UnknownFamilyError(f"unknown symbol family {family!r}")
    return vals


def _need_weights(family, weights, model):
    if weights is None:
        raise ValueError(f"family {family!r} needs a weight sequence")
    if weights.nu != model.nu:
        raise NuMismatchError(f"weights nu={weights.nu} but model nu={model.nu}")


def _floor_values(floor, model, weights, idx):
    lam = model.lambdas[idx]
    if callable(floor):
        return np.array([floor(int(i), float(lv)) for i, lv in zip(idx, lam)], dtype=float)
    if isinstance(floor, dict):
        kind = floor.get("kind")
        if kind == "envelope":
            _need_weights("sparse_drop", weights, model)
            f = AssociatedFunction(weights)
            return np.exp(-float(floor.get("power", 1.0)) * np.asarray(f(float(floor["L"]) * model.root()[idx])))
        if kind == "exp":
            return np.exp(-float(floor["c"]) * lam ** float(floor["theta"]))
        raise UnknownFamilyError(f"unknown floor kind {kind!r}")
    return np.full(idx.shape, float(floor))
