"""Cross-fidelity error metrics on station traces."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..errors import DomainError
from ..models.qoi import StationTrace

METRICS = tuple(f"{kind}_{field}" for field in ("P", "Q", "dr") for kind in ("avg", "max", "sys", "dia"))


def _support(trace: StationTrace, align: str) -> np.ndarray:
    if align == "phase":
        return trace.phase
    if align == "time":
        return np.asarray(trace.t, dtype=float)
    raise DomainError(f"align must be 'phase' or 'time', got {align!r}")


def resample_pair(ref: StationTrace, other: StationTrace, align: str = "phase"):
    """Both traces on the finer of the two grids, restricted to the common support.

    Returns ``(ref_fields, other_fields)`` as dicts of ``P``, ``Q`` and ``dr``.
    """
    t_ref, t_oth = _support(ref, align), _support(other, align)
    lo = max(t_ref[0], t_oth[0])
    hi = min(t_ref[-1], t_oth[-1])
    if not hi > lo:
        raise DomainError(f"traces do not overlap in {align}: [{t_ref[0]}, {t_ref[-1]}] vs [{t_oth[0]}, {t_oth[-1]}]")
    fine = t_ref if np.median(np.diff(t_ref)) <= np.median(np.diff(t_oth)) else t_oth
    grid = fine[(fine >= lo) & (fine <= hi)]
    out = []
    for tr, t in ((ref, t_ref), (other, t_oth)):
        out.append({name: np.interp(grid, t, np.asarray(v, dtype=float))
                    for name, v in (("P", tr.P), ("Q", tr.Q), ("dr", tr.dr))})
    return out[0], out[1]


def error_metrics(ref: StationTrace, other: StationTrace, align: str = "phase") -> dict:
    """Average, maximum, systolic and diastolic relative errors of ``other`` against ``ref``.

    Pressure averages are normalised by the summed reference pressure; flow and
    displacement averages by the reference range. Maximum errors use the mean
    reference value, systolic errors the reference peak, diastolic errors the
    mean reference pressure (P) or the reference range (Q, dr). Values are
    fractions, not percent.
    """
    a, b = resample_pair(ref, other, align)
    out = {}
    for f in ("P", "Q", "dr"):
        x, y = a[f], b[f]
        diff = np.abs(x - y)
        rng = float(np.max(x) - np.min(x))
        mean = float(np.mean(x))
        if f == "P":
            avg = float(np.sum(diff) / np.sum(x))
            dia_den = mean
        else:
            avg = float(np.mean(diff) / rng) if rng > 0 else float(np.mean(diff))
            dia_den = rng
        out[f"avg_{f}"] = avg
        out[f"max_{f}"] = float(np.max(diff) / mean) if mean != 0 else float(np.max(diff))
        peak = float(np.max(x))
        out[f"sys_{f}"] = abs(peak - float(np.max(y))) / peak if peak != 0 else abs(peak - float(np.max(y)))
        dmin = abs(float(np.min(x)) - float(np.min(y)))
        out[f"dia_{f}"] = dmin / dia_den if dia_den != 0 else dmin
    return {k: out[k] for k in METRICS}


def validate_fidelities(traces: dict, pairs=None, align: str = "phase") -> list[dict]:
    """Error table for model pairs; the first id of each pair is the reference.

    ``traces`` maps model id to ``StationTrace`` in fidelity order; by default
    every pair (higher fidelity, lower fidelity) is reported.
    """
    ids = list(traces)
    if pairs is None:
        pairs = list(combinations(ids, 2))
    rows = []
    for ref_id, oth_id in pairs:
        row = {"reference": ref_id, "model": oth_id}
        row.update(error_metrics(traces[ref_id], traces[oth_id], align))
        rows.append(row)
    return rows
