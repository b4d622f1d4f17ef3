"""Polynomial chaos expansion by least-squares regression.

Uses a total-degree basis of orthonormal Legendre polynomials on the
bound-normalised inputs, so the surrogate variance is the sum of squared
non-constant coefficients and Sobol' indices follow from coefficient subsets.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre
from scipy import linalg

from .errors import DomainError
from .estimators import SobolEstimate
from .sampling import ParameterSpace, sobol_points

COND_WARN = 1e8


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PcBasis:
    d: int
    order: int
    terms: tuple

    @classmethod
    def total_degree(cls, d: int, order: int) -> "PcBasis":
        """All multi-indices with total degree ``<= order``, graded then reverse-lex."""
        if d < 1 or order < 0:
            raise DomainError(f"need d >= 1 and order >= 0, got d={d}, order={order}")
        terms = []
        for deg in range(order + 1):
            block = [t for t in itertools.product(range(deg + 1), repeat=d) if sum(t) == deg]
            terms.extend(sorted(block, reverse=True))
        return cls(d, order, tuple(terms))

    @property
    def count(self) -> int:
        return len(self.terms)

    def design(self, U: np.ndarray) -> np.ndarray:
        """Basis functions evaluated at points ``U`` in ``[-1, 1]^d``; shape ``(n, count)``."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if U.shape[1] != self.d:
            raise DomainError(f"expected {self.d} columns, got {U.shape[1]}")
        # univariate tables P[i][:, k] = normalised P_k(u_i)
        P = [_legendre_table(U[:, i], self.order) for i in range(self.d)]
        X = np.ones((U.shape[0], self.count))
        for p, t in enumerate(self.terms):
            for i, k in enumerate(t):
                if k:
                    X[:, p] *= P[i][:, k]
        return X


def expected_count(d: int, order: int) -> int:
    return comb(d + order, d)


def _legendre_table(u: np.ndarray, order: int) -> np.ndarray:
    out = np.empty((u.shape[0], order + 1))
    for k in range(order + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        out[:, k] = legendre.legval(u, c) * np.sqrt(2 * k + 1)
    return out


def legendre_eval(multi_index, z_unit) -> np.ndarray:
    """Product of orthonormal Legendre polynomials (uniform density 1/2 per axis)."""
    mi = tuple(int(k) for k in multi_index)
    z = np.atleast_2d(np.asarray(z_unit, dtype=float))
    if z.shape[1] != len(mi):
        raise DomainError(f"multi-index has {len(mi)} entries, points have {z.shape[1]} columns")
    out = np.ones(z.shape[0])
    for i, k in enumerate(mi):
        if k:
            out *= _legendre_table(z[:, i], k)[:, k]
    return out


@dataclass(frozen=True)
class PcSurrogate:
    basis: PcBasis
    c: np.ndarray
    space: ParameterSpace
    residual: float
    n_train: int
    cond: float
    warnings: tuple = field(default=())

    @property
    def mean(self) -> float:
        return float(self.c[0])

    @property
    def variance(self) -> float:
        return float(np.sum(self.c[1:] ** 2))

    def __call__(self, Z) -> np.ndarray:
        return self.basis.design(self.space.normalize(Z)) @ self.c

    def coefficient_table(self) -> str:
        names = self.space.names
        lines = ["# " + " ".join(names) + " coefficient"]
        for t, c in zip(self.basis.terms, self.c):
            lines.append(" ".join(str(k) for k in t) + f" {c:.17e}")
        return "\n".join(lines) + "\n"

    def export(self, path) -> None:
        Path(path).write_text(self.coefficient_table())


def fit_pce(space: ParameterSpace, order: int, Z, y) -> PcSurrogate:
    """Least-squares fit of a total-degree PC expansion.

    Parameters
    ----------
    space : ParameterSpace
        Bounds used to map ``Z`` onto ``[-1, 1]^d``.
    order : int
        Total polynomial degree.
    Z : ndarray, shape (n, d)
        Training points in physical units (normally Sobol' points, see
        ``pce_training_points``).
    y : ndarray, shape (n,)
        Model outputs at ``Z``.

    Notes
    -----
    At least twice as many samples as basis functions are required. The system
    is solved with a rank-revealing QR (LAPACK ``gelsy``); design matrices with
    condition number above 1e8 produce an ``IllConditionedWarning`` that is
    also recorded on the surrogate.
    """
    basis = PcBasis.total_degree(space.d, order)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if Z.shape[0] != y.shape[0]:
        raise DomainError(f"{Z.shape[0]} points but {y.shape[0]} outputs")
    if Z.shape[0] < 2 * basis.count:
        raise DomainError(
            f"order {order} in d={space.d} has {basis.count} terms; need at least "
            f"{2 * basis.count} samples, got {Z.shape[0]}"
        )
    X = basis.design(space.normalize(Z))
    c, _, _, sv = linalg.lstsq(X, y, lapack_driver="gelsy")
    sv = np.linalg.svd(X, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    notes = ()
    if cond > COND_WARN:
        msg = f"PC design matrix condition number {cond:.3g} exceeds {COND_WARN:.0e}"
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
        notes = (msg,)
    fit = X @ c
    den = np.linalg.norm(y)
    residual = float(np.linalg.norm(y - fit) / den) if den > 0 else float(np.linalg.norm(y - fit))
    return PcSurrogate(basis, c, space, residual, Z.shape[0], cond, notes)


def pce_training_points(space: ParameterSpace, n: int, skip: int = 1) -> np.ndarray:
    return space.scale(sobol_points(space.d, n, skip))


def pc_sobol(surrogate: PcSurrogate, qoi: str = "") -> SobolEstimate:
    """Main and total indices from the coefficients of an orthonormal expansion."""
    terms = np.array(surrogate.basis.terms)
    c2 = surrogate.c**2
    active = terms > 0
    nonconst = active.any(axis=1)
    V = float(np.sum(c2[nonconst]))
    d = surrogate.basis.d
    Vj = np.array([np.sum(c2[active[:, i] & (active.sum(axis=1) == 1)]) for i in range(d)])
    Tj = np.array([np.sum(c2[active[:, i]]) for i in range(d)])
    # variance at roundoff level relative to the coefficient energy is treated as zero
    floor = (64.0 * np.finfo(float).eps) ** 2 * float(np.sum(c2))
    if V > floor:
        S, ST, degenerate = Vj / V, Tj / V, False
    else:
        S, ST, degenerate = np.zeros(d), np.zeros(d), True
    return SobolEstimate(V, Vj, Tj, S, ST, "pc", qoi, surrogate.mean, degenerate)
