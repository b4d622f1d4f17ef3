"""Observation-station traces and scalar quantities of interest."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

QOI_NAMES = ("P_sys", "PP", "dr_max")


@dataclass(frozen=True)
class StationTrace:
    """Pressure, flow and lumen radius at the observation station over the final cycle.

    ``r_dia`` is the radius at the reference (diastolic) pressure; it defines the
    radial displacement ``r - r_dia``.
    """

    t: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    r: np.ndarray
    r_dia: float
    period: float

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.P) == len(self.Q) == len(self.r) == n):
            raise DomainError("trace arrays must have equal lengths")

    @property
    def dr(self) -> np.ndarray:
        return self.r - self.r_dia

    @property
    def phase(self) -> np.ndarray:
        """Time since the start of the recorded cycle."""
        return self.t - self.t[0]


@dataclass(frozen=True)
class QoiVector:
    P_sys: float
    PP: float
    dr_max: float

    def as_array(self) -> np.ndarray:
        return np.array([self.P_sys, self.PP, self.dr_max])


def extract_qoi(trace: StationTrace) -> QoiVector:
    if len(trace.t) == 0:
        raise DomainError("empty trace")
    p_max = float(np.max(trace.P))
    return QoiVector(
        P_sys=p_max,
        PP=p_max - float(np.min(trace.P)),
        dr_max=float(np.max(trace.r) - np.min(trace.r)),
    )
