"""Closed-form test functions used to verify the estimators."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..sampling import Parameter, ParameterSpace

KINDS = ("ishigami", "linear_additive", "constant", "g_function")


def ishigami(Z, a: float = 7.0, b: float = 0.1) -> np.ndarray:
    Z = _check(Z, 3, "ishigami")
    x1, x2, x3 = Z[:, 0], Z[:, 1], Z[:, 2]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3**4 * np.sin(x1)


def ishigami_indices(a: float = 7.0, b: float = 0.1) -> dict:
    """Exact variance decomposition of the Ishigami function on U(-pi, pi)^3."""
    pi = np.pi
    V1 = 0.5 * (1.0 + b * pi**4 / 5.0) ** 2
    V2 = a * a / 8.0
    V13 = b * b * pi**8 * (1.0 / 18.0 - 1.0 / 50.0)
    V = V1 + V2 + V13
    S = np.array([V1, V2, 0.0]) / V
    ST = np.array([V1 + V13, V2, V13]) / V
    return {"V": V, "S": S, "ST": ST, "mean": a / 2.0}


def linear_additive(Z, weights=None) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    w = np.ones(Z.shape[1]) if weights is None else np.asarray(weights, dtype=float)
    if w.shape[0] != Z.shape[1]:
        raise DomainError(f"linear_additive: {w.shape[0]} weights for {Z.shape[1]} inputs")
    return Z @ w


def constant(Z, c: float = 1.0) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return np.full(Z.shape[0], float(c))


def g_function(Z, a=None) -> np.ndarray:
    """Sobol' G-function on U(0, 1)^d, ``prod (|4 z - 2| + a_i) / (1 + a_i)``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    a = np.arange(Z.shape[1], dtype=float) if a is None else np.asarray(a, dtype=float)
    if a.shape[0] != Z.shape[1]:
        raise DomainError(f"g_function: {a.shape[0]} coefficients for {Z.shape[1]} inputs")
    return np.prod((np.abs(4.0 * Z - 2.0) + a) / (1.0 + a), axis=1)


def g_function_indices(a) -> dict:
    a = np.asarray(a, dtype=float)
    Vi = 1.0 / (3.0 * (1.0 + a) ** 2)
    V = np.prod(1.0 + Vi) - 1.0
    ST = Vi * np.prod(1.0 + Vi) / (1.0 + Vi) / V
    return {"V": V, "S": Vi / V, "ST": ST, "mean": 1.0}


def analytic_model(kind: str, Z, **params) -> np.ndarray:
    """Evaluate the named test function row-wise on ``Z``."""
    if kind == "ishigami":
        return ishigami(Z, **params)
    if kind == "linear_additive":
        return linear_additive(Z, **params)
    if kind == "constant":
        return constant(Z, **params)
    if kind == "g_function":
        return g_function(Z, **params)
    raise DomainError(f"unknown analytic model {kind!r}; choose from {KINDS}")


def analytic_space(kind: str, d: int = 3) -> ParameterSpace:
    """Natural input box of each test function."""
    if kind == "ishigami":
        lo, hi, d = -np.pi, np.pi, 3
    else:
        lo, hi = 0.0, 1.0
    return ParameterSpace(tuple(Parameter(f"z{i + 1}", lo, hi) for i in range(d)))


def _check(Z, d, name):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != d:
        raise DomainError(f"{name} takes {d} inputs, got {Z.shape[1]}")
    return Z
