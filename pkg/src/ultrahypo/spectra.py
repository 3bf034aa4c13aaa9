"""Eigenvalue/multiplicity ladders of a positive elliptic operator.

A ladder indexes the *distinct* eigenvalues ``0 = lambda_0 < lambda_1 < ...``
and carries the eigenspace dimension ``d_ell`` separately.  Eigenfunctions
are never materialized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import SpectralModelError

MODEL_SCHEMA = {
    "type": "object",
    "required": ["name", "nu", "ladder"],
    "properties": {
        "name": {"type": "string"},
        "nu": {"type": "integer", "minimum": 1},
        "ladder": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["lambda", "mult"],
                "properties": {
                    "lambda": {"type": "number"},
                    "mult": {"type": "integer"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class SpectralModel:
    name: str
    nu: int
    lambdas: np.ndarray = field(repr=False)
    mults: np.ndarray = field(repr=False)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        d = np.asarray(self.mults)
        if lam.ndim != 1 or lam.shape != d.shape or lam.size == 0:
            raise SpectralModelError("ladder must be a nonempty 1-d list of (lambda, mult)")
        if not np.all(np.isfinite(lam)):
            bad = int(np.flatnonzero(~np.isfinite(lam))[0])
            raise SpectralModelError(f"lambda at ell={bad} is not finite", index=bad)
        if lam[0] != 0.0:
            raise SpectralModelError("lambda_0 must be 0", index=0)
        steps = np.flatnonzero(np.diff(lam) <= 0)
        if steps.size:
            bad = int(steps[0]) + 1
            raise SpectralModelError(f"ladder not strictly increasing at ell={bad}", index=bad)
        if np.any(d != np.round(d)) or np.any(d < 1):
            bad = int(np.flatnonzero((d != np.round(d)) | (d < 1))[0])
            raise SpectralModelError(f"multiplicity at ell={bad} must be a positive integer", index=bad)
        if int(self.nu) != self.nu or self.nu < 1:
            raise SpectralModelError("nu must be a positive integer")
        lam.setflags(write=False)
        d = d.astype(np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mults", d)
        object.__setattr__(self, "nu", int(self.nu))

    @property
    def l_max(self) -> int:
        return self.lambdas.size - 1

    def __len__(self):
        return self.lambdas.size

    @property
    def ladder(self) -> list[tuple[float, int]]:
        return list(zip(self.lambdas.tolist(), self.mults.tolist()))

    def root(self) -> np.ndarray:
        """``lambda_ell ** (1/nu)`` for every rung."""
        return self.lambdas ** (1.0 / self.nu)

    def truncate(self, l_max: int) -> "SpectralModel":
        return SpectralModel(self.name, self.nu, self.lambdas[: l_max + 1], self.mults[: l_max + 1])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nu": self.nu,
            "ladder": [{"lambda": lam, "mult": d} for lam, d in self.ladder],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralModel":
        try:
            jsonschema.validate(data, MODEL_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SpectralModelError(f"model file violates the schema: {exc.message}") from None
        ladder = data["ladder"]
        return cls(
            data["name"],
            data["nu"],
            np.array([rung["lambda"] for rung in ladder], dtype=float),
            np.array([rung["mult"] for rung in ladder]),
        )


def sum_of_squares_counts(n: int, bound: int) -> np.ndarray:
    """``r_n(m)`` = number of ``xi in Z^n`` with ``|xi|^2 = m``, for ``m <= bound``."""
    counts = np.zeros(bound + 1, dtype=np.int64)
    counts[0] = 1
    squares = np.arange(math.isqrt(bound) + 1) ** 2
    for _ in range(n):
        nxt = counts.copy()
        for sq in squares[1:]:
            # +x and -x both contribute
            nxt[sq:] += 2 * counts[: bound + 1 - sq]
        counts = nxt
    return counts


def torus_laplacian(n: int, l_max: int) -> SpectralModel:
    """Flat Laplacian on ``T^n``: rungs ``ell = 0 .. l_max``.

    Distinct eigenvalues are the integers that are sums of ``n`` squares;
    the multiplicity is the number of lattice points on that sphere.
    """
    if n not in (1, 2, 3):
        raise ValueError("torus dimension must be 1, 2 or 3")
    if l_max < 1:
        raise ValueError("l_max must be positive")
    if n == 1:
        m = np.arange(l_max + 1)
        mults = np.where(m == 0, 1, 2)
        return SpectralModel("torus1", 2, (m**2).astype(float), mults)
    bound = 4 * (l_max + 1)
    while True:
        counts = sum_of_squares_counts(n, bound)
        values = np.flatnonzero(counts)
        if values.size >= l_max + 1:
            values = values[: l_max + 1]
            return SpectralModel(f"torus{n}", 2, values.astype(float), counts[values])
        bound *= 2


def sphere_laplacian(l_max: int) -> SpectralModel:
    """Laplace-Beltrami on ``S^2``: ``lambda = ell(ell+1)``, ``d = 2 ell + 1``."""
    if l_max < 1:
        raise ValueError("l_max must be positive")
    ell = np.arange(l_max + 1)
    return SpectralModel("sphere", 2, (ell * (ell + 1)).astype(float), 2 * ell + 1)


BUILTIN_MODELS = {
    "torus1": lambda l_max: torus_laplacian(1, l_max),
    "torus2": lambda l_max: torus_laplacian(2, l_max),
    "torus3": lambda l_max: torus_laplacian(3, l_max),
    "sphere": sphere_laplacian,
}


def builtin_model(name: str, l_max: int) -> SpectralModel:
    try:
        return BUILTIN_MODELS[name](l_max)
    except KeyError:
        raise SpectralModelError(f"unknown builtin model {name!r}") from None


def load_model(path) -> SpectralModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpectralModelError(f"{path}: not valid JSON ({exc})") from None
    return SpectralModel.from_dict(data)


def save_model(model: SpectralModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))
