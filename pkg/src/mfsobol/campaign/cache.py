"""Append-only evaluation cache.

Each model (identified by a digest of everything that determines its output)
owns a directory of ``.npz`` segments holding input points, raw SI outputs and
per-point wall time. Segments are only ever added, never rewritten, so an
interrupted campaign resumes from whatever was flushed.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np


class EvalCache:
    """Point-keyed store of raw model outputs.

    Parameters
    ----------
    root : path or None
        Segment directory; ``None`` keeps everything in memory.
    n_out : int
        Number of raw outputs per point.
    """

    def __init__(self, root, n_out: int):
        self.root = None if root is None else Path(root)
        self.n_out = n_out
        self._index: dict[bytes, int] = {}
        self._Y: list[np.ndarray] = []
        self._wall: list[float] = []
        self._segments = 0
        self.hits = 0
        self.misses = 0
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            for seg in sorted(self.root.glob("seg-*.npz")):
                with np.load(seg) as f:
                    self._ingest(f["Z"], f["Y"], f["wall"])
                self._segments += 1

    def __len__(self) -> int:
        return len(self._Y)

    @staticmethod
    def keys(Z: np.ndarray) -> list[bytes]:
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        return [row.tobytes() for row in Z]

    def _ingest(self, Z, Y, wall):
        for key, y, w in zip(self.keys(Z), np.asarray(Y, dtype=float), np.asarray(wall, dtype=float)):
            if key not in self._index:
                self._index[key] = len(self._Y)
                self._Y.append(y)
                self._wall.append(float(w))

    def lookup(self, Z):
        """Cached rows for ``Z``: ``(Y, wall, found)`` with NaN where missing."""
        n = Z.shape[0]
        Y = np.full((n, self.n_out), np.nan)
        wall = np.zeros(n)
        found = np.zeros(n, dtype=bool)
        for i, key in enumerate(self.keys(Z)):
            j = self._index.get(key)
            if j is not None:
                Y[i] = self._Y[j]
                wall[i] = self._wall[j]
                found[i] = True
        self.hits += int(found.sum())
        self.misses += int(n - found.sum())
        return Y, wall, found

    def add(self, Z, Y, wall) -> None:
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        if Z.shape[0] == 0:
            return
        Y = np.asarray(Y, dtype=float).reshape(Z.shape[0], self.n_out)
        wall = np.asarray(wall, dtype=float).ravel()
        self._ingest(Z, Y, wall)
        if self.root is not None:
            name = self.root / f"seg-{self._segments:06d}.npz"
            tmp = self.root / f".tmp-{os.getpid()}-{self._segments:06d}.npz"
            with open(tmp, "wb") as fh:
                np.savez(fh, Z=Z, Y=Y, wall=wall)
            os.replace(tmp, name)
            self._segments += 1
