"""Two-stage filter cascade: semantic margin gate, then structural gate.

Semantic stage compares each sample embedding against positive/negative prompt
template embeddings (top-k-mean scaled cosine margin). Survivors are gated on
pose structure: person box area ratio and count of confident keypoints. The
structural stage is never evaluated for samples the semantic stage rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from synthengine import kernels
from synthengine.config import PipelineConfig
from synthengine.errors import EngineError, WireFormatError
from synthengine.records import DatasetManifest, atomic_write_bytes
from synthengine.scores import DetectionRecord, EmbeddingRecord

STAGE_SEMANTIC = "semantic"
STAGE_STRUCTURAL = "structural"
STAGE_PASSED = "passed"

ROUTE_ACCEPT = "accept"
ROUTE_REJECT = "reject"
ROUTE_BORDERLINE = "borderline"


@dataclass(frozen=True)
class PromptBank:
    """Positive and negative prompt templates with their text embeddings."""

    positives: tuple[tuple[str, tuple[float, ...]], ...]
    negatives: tuple[tuple[str, tuple[float, ...]], ...]

    def validate(self) -> None:
        if not self.positives or not self.negatives:
            raise EngineError("prompt bank needs at least one positive and one negative template")
        dims = {len(vec) for _, vec in self.positives} | {len(vec) for _, vec in self.negatives}
        if len(dims) != 1:
            raise EngineError(f"prompt bank embedding dims are inconsistent: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return len(self.positives[0][1])

    def positive_matrix(self) -> np.ndarray:
        return np.array([vec for _, vec in self.positives], dtype=np.float64)

    def negative_matrix(self) -> np.ndarray:
        return np.array([vec for _, vec in self.negatives], dtype=np.float64)


@dataclass(frozen=True)
class StructScore:
    area_ratio: float
    kpt_count: int
    person_found: bool

    def to_json_obj(self) -> dict:
        return {
            "area_ratio": self.area_ratio,
            "kpt_count": self.kpt_count,
            "person_found": self.person_found,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "StructScore":
        return cls(
            area_ratio=float(obj["area_ratio"]),
            kpt_count=int(obj["kpt_count"]),
            person_found=bool(obj["person_found"]),
        )


ZERO_STRUCT = StructScore(area_ratio=0.0, kpt_count=0, person_found=False)


@dataclass(frozen=True)
class FilterDecision:
    id: str
    s_sem: float
    s_struct: StructScore | None  # absent iff the semantic stage did not pass
    stage: str
    routing: str

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "s_sem": self.s_sem,
            "s_struct": None if self.s_struct is None else self.s_struct.to_json_obj(),
            "stage": self.stage,
            "routing": self.routing,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FilterDecision":
        struct = obj.get("s_struct")
        return cls(
            id=obj["id"],
            s_sem=float(obj["s_sem"]),
            s_struct=None if struct is None else StructScore.from_json_obj(struct),
            stage=obj["stage"],
            routing=obj["routing"],
        )


def _normalized_or_raise(vec: np.ndarray, what: str) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EngineError(f"zero-norm embedding for {what}; cosine undefined")
    return vec / norm


def semantic_margin(
    x_emb: Iterable[float], bank: PromptBank, k_top: int, scale: float
) -> float:
    """Scaled cosine margin: top-k-mean over positives minus over negatives."""
    bank.validate()
    if scale <= 0:
        raise EngineError("similarity scale must be positive")
    x = np.asarray(list(x_emb) if not isinstance(x_emb, np.ndarray) else x_emb, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != bank.dim:
        raise EngineError(f"embedding dim {x.shape} does not match prompt bank dim {bank.dim}")
    xn = _normalized_or_raise(x, "sample")[None, :]
    pos = bank.positive_matrix()
    neg = bank.negative_matrix()
    posn = np.stack([_normalized_or_raise(v, f"positive template {t!r}") for (t, _), v in zip(bank.positives, pos)])
    negn = np.stack([_normalized_or_raise(v, f"negative template {t!r}") for (t, _), v in zip(bank.negatives, neg)])
    margin = kernels.topk_margins(xn, posn, negn, k_top)[0]
    return float(scale * margin)


def semantic_gate(margin: float, tau_sem: float, delta: float) -> str:
    """pass iff margin >= tau; borderline in [tau - delta, tau); reject below."""
    if delta < 0:
        raise EngineError("borderline delta must be >= 0")
    if margin >= tau_sem:
        return "pass"
    if margin >= tau_sem - delta:
        return ROUTE_BORDERLINE
    return ROUTE_REJECT


def structural_score(det: DetectionRecord, kpt_conf_thresh: float) -> StructScore:
    """Score the most confident person; empty detections yield the zero score.

    Ties on det_score prefer the larger box area, then the lexicographically
    smallest box coordinates, so the selection is total and deterministic.
    """
    if not det.persons:
        return ZERO_STRUCT
    best = max(
        det.persons,
        key=lambda p: (p.det_score, p.box[2] * p.box[3], tuple(-c for c in p.box)),
    )
    x, y, w, h = best.box
    area_ratio = (w * h) / (det.image_w * det.image_h)
    kpt_count = sum(1 for (_, _, conf) in best.keypoints if conf >= kpt_conf_thresh)
    return StructScore(area_ratio=area_ratio, kpt_count=kpt_count, person_found=True)


def structural_gate(s: StructScore, tau_area: float, tau_kpt_count: int) -> str:
    if s.person_found and s.area_ratio >= tau_area and s.kpt_count >= tau_kpt_count:
        return "pass"
    return ROUTE_REJECT


def semantic_margins(
    manifest: DatasetManifest,
    embeddings: Iterable[EmbeddingRecord],
    bank: PromptBank,
    cfg: PipelineConfig,
) -> dict[str, float]:
    """Batch semantic margins for every record in the manifest, keyed by id."""
    bank.validate()
    emb_by_id = {e.id: e for e in embeddings}
    missing = [r.id for r in manifest.records if r.id not in emb_by_id]
    if missing:
        raise EngineError(
            f"missing embeddings for {len(missing)} manifest ids: {', '.join(missing[:5])}"
            + ("..." if len(missing) > 5 else "")
        )
    if len(manifest) == 0:
        return {}
    ids = manifest.ids()
    dim = emb_by_id[ids[0]].dim
    if dim != bank.dim:
        raise EngineError(f"sample embedding dim {dim} != prompt bank dim {bank.dim}")
    x = np.array([emb_by_id[i].vec for i in ids], dtype=np.float64)
    xn, zero = kernels.normalize_rows(x)
    if zero.any():
        bad = ids[int(np.argmax(zero))]
        raise EngineError(f"zero-norm embedding for id {bad}; cosine undefined")
    posn, pzero = kernels.normalize_rows(bank.positive_matrix())
    negn, nzero = kernels.normalize_rows(bank.negative_matrix())
    if pzero.any() or nzero.any():
        raise EngineError("zero-norm prompt template embedding; cosine undefined")
    margins = cfg.similarity_scale * kernels.topk_margins(xn, posn, negn, cfg.k_top)
    return {i: float(m) for i, m in zip(ids, margins)}


def run_cascade(
    manifest: DatasetManifest,
    embeddings: Iterable[EmbeddingRecord],
    detections: Iterable[DetectionRecord],
    bank: PromptBank,
    cfg: PipelineConfig,
    tau_sem: float | None = None,
) -> tuple[DatasetManifest, list[FilterDecision]]:
    """Apply the full cascade; returns the clean manifest and one decision per id.

    Detections are only required for ids whose semantic gate passed.
    """
    cfg.validate()
    tau = cfg.resolved_tau_sem() if tau_sem is None else float(tau_sem)
    margins = semantic_margins(manifest, embeddings, bank, cfg)
    det_by_id = {d.id: d for d in detections}

    sem_pass = [r for r in manifest.records if semantic_gate(margins[r.id], tau, cfg.borderline_delta) == "pass"]
    missing_det = [r.id for r in sem_pass if r.id not in det_by_id]
    if missing_det:
        raise EngineError(
            f"missing detections for semantically passing ids: {', '.join(missing_det[:5])}"
            + ("..." if len(missing_det) > 5 else "")
        )

    decisions: list[FilterDecision] = []
    clean = []
    for rec in manifest.records:
        margin = margins[rec.id]
        verdict = semantic_gate(margin, tau, cfg.borderline_delta)
        if verdict == ROUTE_REJECT:
            decisions.append(FilterDecision(rec.id, margin, None, STAGE_SEMANTIC, ROUTE_REJECT))
            continue
        if verdict == ROUTE_BORDERLINE:
            decisions.append(FilterDecision(rec.id, margin, None, STAGE_SEMANTIC, ROUTE_BORDERLINE))
            continue
        score = structural_score(det_by_id[rec.id], cfg.tau_kpt_conf)
        if structural_gate(score, cfg.tau_area, cfg.tau_kpt_count) == "pass":
            decisions.append(FilterDecision(rec.id, margin, score, STAGE_PASSED, ROUTE_ACCEPT))
            clean.append(rec)
        else:
            decisions.append(FilterDecision(rec.id, margin, score, STAGE_STRUCTURAL, ROUTE_REJECT))

    clean_manifest = DatasetManifest(
        task=manifest.task,
        records=tuple(clean),  # manifest order is already canonical
        provenance=manifest.provenance,
    ).with_provenance("filter", cfg.config_hash())
    return clean_manifest, decisions


# --- wire formats ---------------------------------------------------------


def read_prompt_bank(path: str | Path) -> PromptBank:
    """Bank JSONL: {"template": str, "polarity": "positive"|"negative", "vec": [...]} per line."""
    positives: list[tuple[str, tuple[float, ...]]] = []
    negatives: list[tuple[str, tuple[float, ...]]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise WireFormatError(f"malformed JSON: {exc.msg}", str(path), lineno) from exc
            template = obj.get("template")
            polarity = obj.get("polarity")
            vec = obj.get("vec")
            if not isinstance(template, str) or not template:
                raise WireFormatError("template must be a non-empty string", str(path), lineno)
            if polarity not in ("positive", "negative"):
                raise WireFormatError(f"polarity must be positive|negative, got {polarity!r}", str(path), lineno)
            if not isinstance(vec, list) or not vec:
                raise WireFormatError("vec must be a non-empty list", str(path), lineno)
            entry = (template, tuple(float(v) for v in vec))
            (positives if polarity == "positive" else negatives).append(entry)
    bank = PromptBank(positives=tuple(positives), negatives=tuple(negatives))
    bank.validate()
    return bank


def write_prompt_bank(bank: PromptBank, path: str | Path) -> None:
    lines = []
    for polarity, entries in (("positive", bank.positives), ("negative", bank.negatives)):
        for template, vec in entries:
            lines.append(
                json.dumps(
                    {"template": template, "polarity": polarity, "vec": list(vec)},
                    separators=(",", ":"),
                )
                + "\n"
            )
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


def write_decisions(decisions: Iterable[FilterDecision], path: str | Path) -> None:
    ordered = sorted(decisions, key=lambda d: d.id)
    lines = [json.dumps(d.to_json_obj(), separators=(",", ":")) + "\n" for d in ordered]
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


def read_decisions(path: str | Path) -> list[FilterDecision]:
    out: list[FilterDecision] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                out.append(FilterDecision.from_json_obj(obj))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise WireFormatError(f"bad decision line: {exc}", str(path), lineno) from exc
    return out


def write_margins(margins: dict[str, float], path: str | Path) -> None:
    lines = [
        json.dumps({"id": i, "margin": margins[i]}, separators=(",", ":")) + "\n"
        for i in sorted(margins)
    ]
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


def read_margins(path: str | Path) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                rid, margin = obj["id"], float(obj["margin"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise WireFormatError(f"bad margin line: {exc}", str(path), lineno) from exc
            if rid in out:
                raise WireFormatError(f"duplicate id {rid}", str(path), lineno)
            out[rid] = margin
    return out
