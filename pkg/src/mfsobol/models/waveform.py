"""Periodic inlet flow waveforms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from ..errors import DomainError

# Truncated Fourier series of a common-carotid flow waveform, period 1 s.
# Q(t) = MEAN + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)   [m^3/s]
# Calibrated once so the 1D solver at mean inputs reproduces a systolic
# pressure of 129.7 mmHg and a pulse pressure of 51.1 mmHg
# (tools/calibrate_waveform.py).
CAROTID_MEAN = 6.6489083458032575e-06
CAROTID_COS = (
    9.528731126217233e-07,
    -8.003402822944031e-07,
    -1.850618374659807e-06,
    -1.349661842257321e-06,
    -1.063754391260264e-06,
    1.0405569896512414e-07,
    9.82303075367837e-07,
    7.969470026167967e-07,
    3.0859289587498864e-07,
    -1.4289405717579259e-07,
)
CAROTID_SIN = (
    3.5480508355218316e-06,
    1.8968900307618274e-06,
    1.0106529533604312e-06,
    -4.5844879287685416e-07,
    -8.724961938226094e-07,
    -1.5200896952135544e-06,
    -5.715936346284009e-07,
    1.9626563304573966e-07,
    5.499837385443744e-07,
    4.1848267915031283e-07,
)
CAROTID_PERIOD = 1.0


@dataclass(frozen=True)
class InflowWaveform:
    """Inlet flow samples over one period, evaluated by periodic linear interpolation."""

    t: np.ndarray
    Q: np.ndarray
    period: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if t.ndim != 1 or t.shape != Q.shape or t.size < 2:
            raise DomainError("waveform needs matching 1D arrays of at least two samples")
        if not self.period > 0:
            raise DomainError(f"period must be > 0, got {self.period}")
        if np.any(np.diff(t) <= 0):
            raise DomainError("waveform times must be strictly increasing")
        if t[0] < 0 or t[-1] > self.period * (1 + 1e-12):
            raise DomainError("waveform times must lie in [0, period]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "Q", Q)

    def __call__(self, time) -> np.ndarray:
        """Flow at arbitrary times (periodic extension)."""
        tau = np.mod(np.asarray(time, dtype=float), self.period)
        t, Q = self.t, self.Q
        # close the period so Q(0) == Q(T)
        if t[0] > 0 or t[-1] < self.period:
            tt = np.concatenate([[t[-1] - self.period], t, [t[0] + self.period]])
            QQ = np.concatenate([[Q[-1]], Q, [Q[0]]])
        else:
            tt, QQ = t, Q
        return np.interp(tau, tt, QQ)

    def grid(self, dt: float) -> np.ndarray:
        """Flow at ``k * dt`` for one period; requires ``period / dt`` to be an integer."""
        cache = self.__dict__.setdefault("_grids", {})
        if dt not in cache:
            n = steps_per_period(self.period, dt)
            g = np.ascontiguousarray(self(np.arange(n) * dt))
            g.flags.writeable = False
            cache[dt] = g
        return cache[dt]

    @property
    def mean(self) -> float:
        x = np.linspace(0.0, self.period, 20001)
        return float(trapezoid(self(x), x) / self.period)

    @property
    def peak(self) -> float:
        return float(np.max(self(np.linspace(0.0, self.period, 20001))))

    @classmethod
    def fourier(cls, mean, cos, sin, period=1.0, samples=2000) -> "InflowWaveform":
        t = np.linspace(0.0, period, samples + 1)
        w = 2.0 * np.pi / period
        Q = np.full_like(t, mean)
        for k, (a, b) in enumerate(zip(cos, sin), start=1):
            Q += a * np.cos(k * w * t) + b * np.sin(k * w * t)
        Q[-1] = Q[0]
        return cls(t, Q, period)

    @classmethod
    def constant(cls, q: float, period: float = 1.0) -> "InflowWaveform":
        return cls(np.array([0.0, period]), np.array([q, q]), period)

    @classmethod
    def from_file(cls, path, period: float | None = None) -> "InflowWaveform":
        """Read a two-column text file (time [s], flow [m^3/s]); '#' starts a comment."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise DomainError(f"{path}: expected two columns, got {data.shape[1]}")
        t, Q = data[:, 0], data[:, 1]
        if period is None:
            period = float(t[-1])
        return cls(t, Q, period)

    def to_file(self, path) -> None:
        np.savetxt(
            Path(path),
            np.column_stack([self.t, self.Q]),
            header=f"period {self.period!r} s\ntime [s]  flow [m^3/s]",
            fmt="%.12e",
        )


def steps_per_period(period: float, dt: float) -> int:
    n = int(round(period / dt))
    if n < 1 or abs(n * dt - period) > 1e-9 * period:
        raise DomainError(f"period {period} is not an integer multiple of dt {dt}")
    return n


@lru_cache(maxsize=1)
def carotid_waveform() -> InflowWaveform:
    """Default calibrated common-carotid inflow."""
    return InflowWaveform.fourier(CAROTID_MEAN, CAROTID_COS, CAROTID_SIN, CAROTID_PERIOD)
