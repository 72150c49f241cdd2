"""Domain-gap diagnostics between real and synthetic embedding sets.

Emits a diagonal-covariance Frechet distance, a nearest-neighbor coverage
fraction, and a deterministic 2-D principal-component projection as plain
data files; figure rendering is an external plotting concern.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from synthengine import kernels
from synthengine.errors import EngineError
from synthengine.records import atomic_write_bytes
from synthengine.scores import EmbeddingRecord


def _as_matrix(embs: Iterable[EmbeddingRecord] | np.ndarray, min_rows: int, name: str) -> np.ndarray:
    if isinstance(embs, np.ndarray):
        mat = np.asarray(embs, dtype=np.float64)
    else:
        rows = [e.vec if isinstance(e, EmbeddingRecord) else e for e in embs]
        mat = np.array(rows, dtype=np.float64) if rows else np.empty((0, 0))
    if mat.ndim != 2 or mat.shape[0] < min_rows:
        raise EngineError(f"{name}: need at least {min_rows} embeddings, got {mat.shape[0]}")
    return mat


def frechet_gap(real_embs, syn_embs) -> float:
    """Diagonal-covariance Frechet distance (population std per dimension)."""
    real = _as_matrix(real_embs, 2, "real embeddings")
    syn = _as_matrix(syn_embs, 2, "synthetic embeddings")
    if real.shape[1] != syn.shape[1]:
        raise EngineError(f"dim mismatch: real {real.shape[1]} vs syn {syn.shape[1]}")
    mu_r = real.mean(axis=0)
    mu_s = syn.mean(axis=0)
    sigma_r = real.std(axis=0)  # ddof=0: population std
    sigma_s = syn.std(axis=0)
    fd2 = float(np.sum((mu_r - mu_s) ** 2) + np.sum((sigma_r - sigma_s) ** 2))
    return math.sqrt(max(fd2, 0.0))


def nn_coverage(real_embs, syn_embs) -> float:
    """Fraction of real anchors with a synthetic neighbor within the real NN scale.

    The radius is the nearest-rank median over real anchors of the distance to
    the nearest other real anchor.
    """
    real = _as_matrix(real_embs, 2, "real embeddings")
    syn = _as_matrix(syn_embs, 0, "synthetic embeddings")
    if syn.shape[0] and syn.shape[1] != real.shape[1]:
        raise EngineError(f"dim mismatch: real {real.shape[1]} vs syn {syn.shape[1]}")
    if syn.shape[0] == 0:
        return 0.0
    nn_sq = kernels.nearest_other_sqdists(real)
    dists = sorted(math.sqrt(d) for d in nn_sq)
    radius = dists[max(1, math.ceil(0.5 * len(dists))) - 1]
    hits = kernels.coverage_hits(real, syn, radius)
    return hits / real.shape[0]


def project_2d(embs: Iterable[EmbeddingRecord]) -> list[tuple[str, float, float]]:
    """Top-2 principal-component projection with deterministic component signs.

    Each component's sign is fixed so its largest-magnitude loading is
    positive. Output rows are in ascending id order.
    """
    records = sorted(embs, key=lambda e: e.id)
    mat = _as_matrix(records, 3, "embeddings")
    if mat.shape[1] < 2:
        raise EngineError("projection requires embedding dim >= 2")
    centered = mat - mat.mean(axis=0)
    if not np.any(centered):
        raise EngineError("all embeddings identical; projection undefined")
    cov = (centered.T @ centered) / (mat.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    components = eigvecs[:, order]
    for j in range(components.shape[1]):
        lead = int(np.argmax(np.abs(components[:, j])))
        if components[lead, j] < 0:
            components[:, j] = -components[:, j]
    coords = centered @ components
    return [(rec.id, float(u), float(v)) for rec, (u, v) in zip(records, coords)]


def write_summary(
    real_embs: list[EmbeddingRecord],
    syn_embs: list[EmbeddingRecord],
    path: str | Path,
) -> dict:
    summary = {
        "frechet_gap": frechet_gap(real_embs, syn_embs),
        "nn_coverage": nn_coverage(real_embs, syn_embs),
        "n_real": len(real_embs),
        "n_syn": len(syn_embs),
        "dim": real_embs[0].dim if real_embs else 0,
    }
    atomic_write_bytes(path, (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return summary


def write_projection(
    real_embs: list[EmbeddingRecord],
    syn_embs: list[EmbeddingRecord],
    path: str | Path,
) -> None:
    """CSV `id,u,v,origin` over the union of both sets, canonical id order."""
    origin = {e.id: "real" for e in real_embs}
    for e in syn_embs:
        if e.id in origin:
            raise EngineError(f"id {e.id} appears in both real and synthetic sets")
        origin[e.id] = "synthetic"
    rows = project_2d(list(real_embs) + list(syn_embs))
    lines = ["id,u,v,origin\n"]
    lines.extend(f"{rid},{u!r},{v!r},{origin[rid]}\n" for rid, u, v in rows)
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))
