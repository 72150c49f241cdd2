"""Numpy implementations of the hot numeric kernels.

Used when the compiled extension (synthengine._ckernels) is unavailable.
All inputs are float64 C-contiguous arrays; embedding rows are pre-normalized
by the caller, so dot products are cosines.
"""

from __future__ import annotations

import numpy as np


def topk_margins(x: np.ndarray, pos: np.ndarray, neg: np.ndarray, k: int) -> np.ndarray:
    """Per-row top-k-mean cosine to pos minus top-k-mean cosine to neg.

    k is clamped to each prompt set's size.
    """

    def topk_mean(sims: np.ndarray, kk: int) -> np.ndarray:
        m = sims.shape[1]
        kk = min(kk, m)
        if kk == m:
            return sims.mean(axis=1)
        part = np.partition(sims, m - kk, axis=1)[:, m - kk :]
        return part.mean(axis=1)

    pos_score = topk_mean(x @ pos.T, k)
    neg_score = topk_mean(x @ neg.T, k)
    return pos_score - neg_score


def nearest_other_sqdists(points: np.ndarray) -> np.ndarray:
    """For each row, squared distance to the nearest *other* row."""
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, np.inf)
    return np.maximum(d2.min(axis=1), 0.0)


def coverage_hits(real: np.ndarray, syn: np.ndarray, radius: float) -> int:
    """Count of real rows with at least one syn row within `radius` (inclusive)."""
    if syn.shape[0] == 0:
        return 0
    r2 = radius * radius
    sq_r = np.einsum("ij,ij->i", real, real)
    sq_s = np.einsum("ij,ij->i", syn, syn)
    hits = 0
    # Chunk over real rows to bound the distance-matrix footprint.
    chunk = max(1, int(2**22 // max(1, syn.shape[0])))
    for start in range(0, real.shape[0], chunk):
        stop = min(start + chunk, real.shape[0])
        d2 = sq_r[start:stop, None] + sq_s[None, :] - 2.0 * (real[start:stop] @ syn.T)
        hits += int(np.count_nonzero(np.maximum(d2.min(axis=1), 0.0) <= r2))
    return hits
