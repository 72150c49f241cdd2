"""Kernel backend selection: compiled extension when built, numpy otherwise.

Set SYNTHENGINE_KERNELS=python to force the numpy fallback (used by the
benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

from synthengine import _pykernels

_FORCED = os.environ.get("SYNTHENGINE_KERNELS", "").strip().lower()

if _FORCED in ("", "cython", "c"):
    try:
        from synthengine import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _FORCED in ("cython", "c"):
            raise
        _impl = _pykernels
        BACKEND = "python"
elif _FORCED == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    raise ValueError(f"unknown SYNTHENGINE_KERNELS value: {_FORCED!r}")


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    return arr


def normalize_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normalize rows; returns (normalized, zero_norm_mask)."""
    norms = np.linalg.norm(a, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return np.ascontiguousarray(a / safe[:, None]), zero


def topk_margins(x: np.ndarray, pos: np.ndarray, neg: np.ndarray, k: int) -> np.ndarray:
    x = _as_matrix(x, "x")
    pos = _as_matrix(pos, "pos")
    neg = _as_matrix(neg, "neg")
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise ValueError("prompt sets must be non-empty")
    if pos.shape[1] != x.shape[1] or neg.shape[1] != x.shape[1]:
        raise ValueError("embedding dims of samples and prompts must match")
    if k < 1:
        raise ValueError("k must be >= 1")
    return np.asarray(_impl.topk_margins(x, pos, neg, int(k)))


def nearest_other_sqdists(points: np.ndarray) -> np.ndarray:
    points = _as_matrix(points, "points")
    if points.shape[0] < 2:
        raise ValueError("need at least 2 points")
    return np.asarray(_impl.nearest_other_sqdists(points))


def coverage_hits(real: np.ndarray, syn: np.ndarray, radius: float) -> int:
    real = _as_matrix(real, "real")
    syn = _as_matrix(syn, "syn")
    if syn.shape[0] and syn.shape[1] != real.shape[1]:
        raise ValueError("real and syn dims must match")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return int(_impl.coverage_hits(real, syn, float(radius)))
