"""Forward solvers: input points ``(r, E, h)`` to station traces and QoIs.

Both solvers are driven by an inflow waveform sampled on their own time grid
and terminated by the same three-element Windkessel. Batched entry points
evaluate many points in one kernel call.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, SolverError
from ._backend import get_kernels
from .physics import HemoConfig
from .qoi import QoiVector, StationTrace
from .waveform import InflowWaveform, carotid_waveform, steps_per_period

_STATUS = {1: "non-finite state", 2: "CFL condition violated", 3: "non-positive lumen area",
           4: "Newton iteration did not converge"}


def _points(Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != 3:
        raise DomainError(f"expected input points with 3 columns (r, E, h), got {Z.shape[1]}")
    if np.any(Z <= 0) or not np.all(np.isfinite(Z)):
        raise DomainError("r, E and h must be finite and > 0")
    return Z


def _raise_failures(status, step, node, Z, label):
    bad = np.flatnonzero(status)
    if bad.size:
        k = int(bad[0])
        nd = None if node is None or node[k] < 0 else int(node[k])
        where = f" at node {nd}" if nd is not None else ""
        raise SolverError(
            f"{label} solver failed for point {k} {tuple(Z[k])}: "
            f"{_STATUS.get(int(status[k]), 'unknown')} at step {int(step[k])}{where}",
            step=int(step[k]), node=nd, index=k,
        )


def _grid(waveform, dt):
    waveform = carotid_waveform() if waveform is None else waveform
    return waveform, waveform.grid(dt)


def _run_0d(Z, cfg, waveform, record, backend):
    cfg = HemoConfig() if cfg is None else cfg
    waveform, q = _grid(waveform, cfg.dt_0d)
    k = get_kernels(backend)
    out = k.zerod_run(
        Z[:, 0], Z[:, 1], Z[:, 2], q, cfg.cycles_0d, cfg.dt_0d, cfg.eta, cfg.L,
        cfg.Rp, cfg.Cwk, cfg.Rd, cfg.p_out, cfg.P_dia, cfg.rho_inf, cfg.newton_tol, record,
    )
    return cfg, waveform, out


def _run_1d(Z, cfg, waveform, record, backend):
    cfg = HemoConfig() if cfg is None else cfg
    waveform, q = _grid(waveform, cfg.dt_1d)
    k = get_kernels(backend)
    out = k.oned_run(
        Z[:, 0], Z[:, 1], Z[:, 2], q, cfg.cycles_1d, cfg.dt_1d, cfg.nodes_1d, cfg.rho_f,
        cfg.eta, cfg.nu, cfg.zeta, cfg.L, cfg.Rp, cfg.Cwk, cfg.Rd, cfg.p_out, cfg.P_dia, record,
    )
    return cfg, waveform, out


def qoi_0d(Z, cfg: HemoConfig | None = None, waveform: InflowWaveform | None = None,
           backend: str | None = None) -> np.ndarray:
    """QoIs ``(P_sys, PP, dr_max)`` of the 0D model for each row of ``Z``; shape ``(n, 3)``."""
    Z = _points(Z)
    _, _, (qoi, status, step, _, _) = _run_0d(Z, cfg, waveform, False, backend)
    _raise_failures(status, step, None, Z, "0D")
    return qoi


def qoi_1d(Z, cfg: HemoConfig | None = None, waveform: InflowWaveform | None = None,
           backend: str | None = None) -> np.ndarray:
    """QoIs ``(P_sys, PP, dr_max)`` of the 1D model for each row of ``Z``; shape ``(n, 3)``."""
    Z = _points(Z)
    _, _, (qoi, status, step, node, *_) = _run_1d(Z, cfg, waveform, False, backend)
    _raise_failures(status, step, node, Z, "1D")
    return qoi


def simulate_0d(z, cfg: HemoConfig | None = None, waveform: InflowWaveform | None = None,
                backend: str | None = None) -> StationTrace:
    """Final-cycle trace of the two-unit RC chain at its half-length node.

    The radius follows the linearised wall, ``r + 3 r^2 (P - P_dia) / (4 E h)``.
    """
    Z = _points(z)
    if Z.shape[0] != 1:
        raise DomainError("simulate_0d takes a single input point")
    cfg, waveform, (_, status, step, P, Q) = _run_0d(Z, cfg, waveform, True, backend)
    _raise_failures(status, step, None, Z, "0D")
    r0, E, h = Z[0]
    n_per = P.shape[1]
    t = (cfg.cycles_0d - 1) * waveform.period + np.arange(n_per) * cfg.dt_0d
    r = r0 + 3.0 * r0**2 * (P[0] - cfg.P_dia) / (4.0 * E * h)
    return StationTrace(t, P[0].copy(), Q[0].copy(), r, float(r0), waveform.period)


def simulate_1d(z, cfg: HemoConfig | None = None, waveform: InflowWaveform | None = None,
                backend: str | None = None) -> StationTrace:
    """Final-cycle trace of the 1D model at mid-span; ``r = sqrt(A / pi)``."""
    Z = _points(z)
    if Z.shape[0] != 1:
        raise DomainError("simulate_1d takes a single input point")
    cfg, waveform, (_, status, step, node, P, Q, r) = _run_1d(Z, cfg, waveform, True, backend)
    _raise_failures(status, step, node, Z, "1D")
    n_per = P.shape[1]
    t = (cfg.cycles_1d - 1) * waveform.period + np.arange(n_per) * cfg.dt_1d
    return StationTrace(t, P[0].copy(), Q[0].copy(), r[0].copy(), float(Z[0, 0]), waveform.period)


def qoi_vector(trace_or_row) -> QoiVector:
    row = np.asarray(trace_or_row, dtype=float).ravel()
    return QoiVector(float(row[0]), float(row[1]), float(row[2]))


def cfl_number(z, cfg: HemoConfig | None = None) -> float:
    """Courant number of the 1D grid at the reference (diastolic) state."""
    cfg = HemoConfig() if cfg is None else cfg
    r, E, h = np.asarray(z, dtype=float)
    beta = np.sqrt(np.pi) * E * h / (1.0 - cfg.nu**2)
    A0 = np.pi * r * r
    c0 = np.sqrt(beta / (2.0 * cfg.rho_f * A0)) * A0**0.25
    return float(c0 * cfg.dt_1d * (cfg.nodes_1d - 1) / cfg.L)


__all__ = ["qoi_0d", "qoi_1d", "simulate_0d", "simulate_1d", "cfl_number", "steps_per_period"]
