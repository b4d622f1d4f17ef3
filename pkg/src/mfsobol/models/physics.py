"""Deterministic parameters and closed-form wall/outlet relations."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..errors import DomainError

MMHG = 133.322  # Pa


@dataclass(frozen=True)
class HemoConfig:
    """Deterministic haemodynamic parameters shared by the 1D and 0D solvers (SI units).

    ``eta`` is 1e-3 Pa s; the published table lists it as 0.001 mPa s, which is
    incompatible with the reported pressures. ``p_out`` is the reference pressure
    at the distal end of the Windkessel (0 reproduces the standard three-element
    form).
    """

    L: float = 0.126
    rho_f: float = 1050.0
    eta: float = 1.0e-3
    nu: float = 0.49
    Rp: float = 2.4875e8
    Cwk: float = 1.3546e-10
    Rd: float = 1.8697e9
    P_dia: float = 78.6 * MMHG
    p_out: float = 0.0
    zeta: float = 2.0
    cycles_1d: int = 5
    cycles_0d: int = 10
    dt_1d: float = 0.0025
    dt_0d: float = 0.001
    nodes_1d: int = 5
    rho_inf: float = 0.5
    newton_tol: float = 1.0e-10

    def __post_init__(self):
        positive = ("L", "rho_f", "eta", "Rp", "Cwk", "Rd", "dt_1d", "dt_0d", "zeta")
        for name in positive:
            if not getattr(self, name) > 0:
                raise DomainError(f"HemoConfig.{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.nu < 1.0:
            raise DomainError(f"HemoConfig.nu must lie in [0, 1), got {self.nu}")
        if self.nodes_1d < 3:
            raise DomainError(f"HemoConfig.nodes_1d must be >= 3, got {self.nodes_1d}")
        if self.cycles_1d < 1 or self.cycles_0d < 1:
            raise DomainError("cycle counts must be >= 1")
        if not 0.0 <= self.rho_inf <= 1.0:
            raise DomainError(f"HemoConfig.rho_inf must lie in [0, 1], got {self.rho_inf}")
        if not self.newton_tol > 0:
            raise DomainError("HemoConfig.newton_tol must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HemoConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown HemoConfig keys: {sorted(unknown)}")
        typed = {}
        for f in fields(cls):
            if f.name in data:
                typed[f.name] = int(data[f.name]) if f.type == "int" else float(data[f.name])
        return cls(**typed)

    def with_(self, **changes) -> "HemoConfig":
        return replace(self, **changes)


def rc_parameters(r: float, E: float, h: float, cfg: HemoConfig, segment_length: float | None = None):
    """Poiseuille resistance and thin-wall compliance of a cylindrical segment.

    Returns ``(R, C)`` with ``R = 8 eta l / (pi r^4)`` and ``C = 3 l pi r^3 / (2 E h)``.
    """
    length = cfg.L if segment_length is None else segment_length
    for name, value in (("r", r), ("E", E), ("h", h), ("segment_length", length)):
        if not value > 0:
            raise DomainError(f"{name} must be > 0, got {value}")
    R = 8.0 * cfg.eta * length / (math.pi * r**4)
    C = 3.0 * length * math.pi * r**3 / (2.0 * E * h)
    return R, C


def tube_beta(E: float, h: float, nu: float) -> float:
    return math.sqrt(math.pi) * E * h / (1.0 - nu**2)


def tube_law(A, A_dia, P_dia, E, h, nu):
    """Pressure from lumen area for a thin linear-elastic membrane wall."""
    if np.min(A) <= 0 or np.min(A_dia) <= 0:
        raise DomainError("areas must be > 0")
    beta = tube_beta(E, h, nu)
    return P_dia + beta / A_dia * (np.sqrt(A) - np.sqrt(A_dia))


def tube_compliance(A, A_dia, E, h, nu):
    """Local area compliance dA/dP of the tube law (per unit length)."""
    beta = tube_beta(E, h, nu)
    return 2.0 * A_dia * np.sqrt(A) / beta


def wave_speed(A, A_dia, E, h, nu, rho_f):
    beta = tube_beta(E, h, nu)
    return np.sqrt(beta / (2.0 * rho_f * A_dia)) * np.sqrt(np.sqrt(A))


def wk3_outlet_step(P, Q, dQdt, cfg: HemoConfig):
    """Time derivative of the outlet pressure of a three-element Windkessel."""
    C, Rp, Rd = cfg.Cwk, cfg.Rp, cfg.Rd
    return Q * (1.0 / C + Rp / (C * Rd)) + Rp * dQdt - (P - cfg.p_out) / (Rd * C)

