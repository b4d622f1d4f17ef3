"""Model evaluation with caching and a bounded process pool."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..models.analytic import analytic_model
from ..models.physics import HemoConfig
from ..models.qoi import QOI_NAMES
from ..models.solvers import qoi_0d, qoi_1d
from ..models.waveform import InflowWaveform, carotid_waveform
from .cache import EvalCache
from .config import ANALYTIC_QOI, CampaignConfig

CHUNK = 256


def _waveform(path):
    return carotid_waveform() if path is None else InflowWaveform.from_file(path)


def model_hemo(spec: dict, hemo: HemoConfig) -> HemoConfig:
    if spec["kind"] == "surrogate_hf":
        return hemo.with_(nodes_1d=int(spec["nodes"]), dt_1d=hemo.dt_1d * float(spec["dt_factor"]))
    return hemo


def model_form(Z, lower, upper) -> np.ndarray:
    """Mean-zero quadratic of the inputs scaled to [-1, 1] (synthetic model-form error)."""
    lower, upper = np.asarray(lower), np.asarray(upper)
    U = (Z - 0.5 * (lower + upper)) / (0.5 * (upper - lower))
    s = U.sum(axis=1)
    sq = (U**2).sum(axis=1)
    return 0.5 * (s * s - sq) + 0.5 * (sq - U.shape[1] / 3.0)


def solve(spec: dict, hemo: dict | None, waveform_path, Z: np.ndarray):
    """Raw outputs of one model on ``Z`` (SI units) and the wall time per point.

    Top-level so that worker processes can unpickle it.
    """
    t0 = time.perf_counter()
    kind = spec["kind"]
    if kind == "analytic":
        Y = analytic_model(spec["function"], Z, **spec.get("params", {}))[:, None]
    else:
        cfg = model_hemo(spec, HemoConfig.from_dict(hemo or {}))
        wf = _waveform(waveform_path)
        Y = qoi_0d(Z, cfg, wf) if kind == "zerod" else qoi_1d(Z, cfg, wf)
        if spec.get("discrepancy"):
            Y = Y * (1.0 + np.outer(model_form(Z, *spec["bounds"]), spec["discrepancy"]))
    wall = (time.perf_counter() - t0) / max(Z.shape[0], 1)
    return np.asarray(Y, dtype=float), np.full(Z.shape[0], wall)


class Evaluator:
    """Evaluates configured models, reusing cached (model, point) pairs.

    Results are written into indexed slots, so they do not depend on which
    worker finishes first.
    """

    def __init__(self, cfg: CampaignConfig, cache_root=None, jobs: int = 1):
        self.cfg = cfg
        self.jobs = max(int(jobs), 1)
        self.cache_root = cache_root
        self._caches: dict[str, EvalCache] = {}
        self.solved = 0

    def outputs(self, k: int) -> tuple[str, ...]:
        return (ANALYTIC_QOI,) if self.cfg.models[k].kind == "analytic" else QOI_NAMES

    def cache(self, k: int) -> EvalCache:
        digest = self.cfg.model_digest(k)
        if digest not in self._caches:
            root = None if self.cache_root is None else f"{self.cache_root}/{digest}"
            self._caches[digest] = EvalCache(root, len(self.outputs(k)))
        return self._caches[digest]

    def raw(self, k: int, Z) -> tuple[np.ndarray, np.ndarray]:
        """All raw outputs of model ``k`` at ``Z``: ``(Y, wall)``."""
        Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=float)))
        cache = self.cache(k)
        Y, wall, found = cache.lookup(Z)
        miss = np.flatnonzero(~found)
        if miss.size:
            # de-duplicate repeated points (A and C_j share columns, not rows, but be safe)
            Zm = Z[miss]
            _, first, inverse = np.unique(Zm, axis=0, return_index=True, return_inverse=True)
            order = np.sort(first)
            Zu = Zm[order]
            Yu, Wu = self._solve(k, Zu)
            cache.add(Zu, Yu, Wu)
            self.solved += Zu.shape[0]
            pos = np.empty(first.shape[0], dtype=int)
            pos[np.argsort(first)] = np.arange(first.shape[0])
            idx = pos[np.asarray(inverse).ravel()]
            Y[miss] = Yu[idx]
            wall[miss] = Wu[idx]
        return Y, wall

    def values(self, k: int, Z, qoi: str) -> np.ndarray:
        Y, _ = self.raw(k, Z)
        return Y[:, self.outputs(k).index(qoi)]

    def _solve(self, k: int, Z: np.ndarray):
        spec = self.cfg.models[k].solver_spec()
        hemo = self.cfg.model_hemo(k).to_dict()
        wf = self.cfg.waveform_path
        n = Z.shape[0]
        if self.jobs == 1 or n <= CHUNK:
            return solve(spec, hemo, wf, Z)
        bounds = list(range(0, n, CHUNK)) + [n]
        Y = np.empty((n, len(self.outputs(k))))
        W = np.empty(n)
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            futures = [(a, b, pool.submit(solve, spec, hemo, wf, Z[a:b])) for a, b in zip(bounds, bounds[1:])]
            for a, b, fut in futures:
                Y[a:b], W[a:b] = fut.result()
        return Y, W
