"""Low-discrepancy sampling and Saltelli sample bundles.

All points are produced in physical SI units. The unit hypercube draws come
from the unscrambled Sobol' sequence (Joe-Kuo direction numbers), so every
bundle is fully determined by ``(d, n, skip)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, UnsupportedDimensionError

# scipy ships the Joe-Kuo new-joe-kuo-6.21201 table
MAX_SOBOL_DIM = 21201


@dataclass(frozen=True)
class Parameter:
    name: str
    lower: float
    upper: float
    unit: str = ""

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise DomainError(
                f"parameter {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered set of independent uniform inputs.

    The order of ``params`` fixes the column index of each input in every
    sample matrix and every Sobol' index vector downstream.
    """

    params: tuple[Parameter, ...]

    def __post_init__(self):
        if len(self.params) == 0:
            raise DomainError("parameter space must contain at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate parameter names in {names}")
        object.__setattr__(self, "params", tuple(self.params))

    @property
    def d(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.params])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.params])

    @property
    def mean(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def scale(self, unit: np.ndarray) -> np.ndarray:
        """Map points from ``[0, 1)^d`` to physical bounds (affine)."""
        unit = np.asarray(unit, dtype=float)
        if unit.shape[-1] != self.d:
            raise DomainError(f"expected {self.d} columns, got {unit.shape[-1]}")
        return self.lower + unit * (self.upper - self.lower)

    def normalize(self, z: np.ndarray) -> np.ndarray:
        """Map physical points to ``[-1, 1]^d`` (centre of the box maps to 0)."""
        z = np.asarray(z, dtype=float)
        half = 0.5 * (self.upper - self.lower)
        return (z - self.mean) / half

    def contains(self, z: np.ndarray) -> bool:
        z = np.atleast_2d(z)
        return bool(np.all((z >= self.lower) & (z <= self.upper)))

    def index(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "ParameterSpace":
        return cls(
            tuple(
                Parameter(
                    name=str(r["name"]),
                    lower=float(r["lower"]),
                    upper=float(r["upper"]),
                    unit=str(r.get("unit", "")),
                )
                for r in records
            )
        )


def carotid_space() -> ParameterSpace:
    """Radius, elastic modulus and wall thickness of the carotid model (SI units).

    Each input varies uniformly by +/-10 % around its population mean.
    """
    return ParameterSpace(
        (
            Parameter("r", 2.96e-3, 3.62e-3, "m"),
            Parameter("E", 396.0e3, 484.0e3, "Pa"),
            Parameter("h", 0.7065e-3, 0.8635e-3, "m"),
        )
    )


def sobol_points(d: int, n: int, skip: int = 1) -> np.ndarray:
    """First ``n`` points of the unscrambled ``d``-dimensional Sobol' sequence
    after discarding ``skip`` leading points.

    Returns an ``(n, d)`` array in ``[0, 1)^d``.
    """
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if n < 1:
        raise DomainError(f"number of points must be >= 1, got {n}")
    if skip < 0:
        raise DomainError(f"skip must be >= 0, got {skip}")
    if d > MAX_SOBOL_DIM:
        raise UnsupportedDimensionError(
            f"Sobol' direction numbers are tabulated up to dimension {MAX_SOBOL_DIM}, got {d}"
        )
    engine = qmc.Sobol(d, scramble=False)
    if skip:
        engine.fast_forward(skip)
    with warnings.catch_warnings():
        # balance warning for non powers of two is irrelevant for block use
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


@dataclass(frozen=True)
class SampleBundle:
    """Saltelli matrices ``A``, ``B`` and ``C_j`` (B with column j from A)."""

    A: np.ndarray
    B: np.ndarray
    C: tuple[np.ndarray, ...]
    skip: int = 1
    names: tuple[str, ...] = field(default=())

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def tags(self) -> list[str]:
        return ["A", "B"] + [f"C{j + 1}" for j in range(self.d)]

    def matrix(self, tag: str) -> np.ndarray:
        if tag == "A":
            return self.A
        if tag == "B":
            return self.B
        if tag.startswith("C"):
            return self.C[int(tag[1:]) - 1]
        raise KeyError(tag)

    def matrices(self) -> dict[str, np.ndarray]:
        return {t: self.matrix(t) for t in self.tags()}

    def head(self, m: int) -> "SampleBundle":
        """Bundle restricted to its leading ``m`` rows (nested sampling)."""
        if m > self.N:
            raise DomainError(f"requested {m} rows from a bundle of {self.N}")
        return SampleBundle(
            self.A[:m], self.B[:m], tuple(c[:m] for c in self.C), self.skip, self.names
        )

    @property
    def total_points(self) -> int:
        return (self.d + 2) * self.N


def saltelli_c(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, ...]:
    C = []
    for j in range(A.shape[1]):
        Cj = B.copy()
        Cj[:, j] = A[:, j]
        C.append(Cj)
    return tuple(C)


def build_bundle(space: ParameterSpace, n: int, skip: int = 1) -> SampleBundle:
    """Draw a ``2d``-dimensional Sobol' block and split it column-wise into A and B."""
    if n < 2:
        raise DomainError(f"bundle size must be >= 2, got {n}")
    d = space.d
    unit = sobol_points(2 * d, n, skip)
    A = space.scale(unit[:, :d])
    B = space.scale(unit[:, d:])
    return SampleBundle(A, B, saltelli_c(A, B), skip, tuple(space.names))


def random_bundle(space: ParameterSpace, n: int, rng: np.random.Generator) -> SampleBundle:
    """Saltelli bundle from i.i.d. uniform draws (used for replicate studies)."""
    if n < 2:
        raise DomainError(f"bundle size must be >= 2, got {n}")
    d = space.d
    unit = rng.random((n, 2 * d))
    A = space.scale(unit[:, :d])
    B = space.scale(unit[:, d:])
    return SampleBundle(A, B, saltelli_c(A, B), -1, tuple(space.names))
