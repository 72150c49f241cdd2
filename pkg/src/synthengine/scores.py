"""Scorer output records: embeddings and pose detections, as JSONL wire formats.

The engine never runs an encoder or detector itself; these records arrive from
external adapter processes (see adapters.py) or from files produced by any
model stack that can print one JSON object per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from synthengine.errors import WireFormatError
from synthengine.records import atomic_write_bytes, is_content_hash

COCO_KEYPOINT_COUNT = 17


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    dim: int
    vec: tuple[float, ...]

    def to_json_obj(self) -> dict:
        return {"id": self.id, "dim": self.dim, "vec": list(self.vec)}


@dataclass(frozen=True)
class PersonDet:
    box: tuple[float, float, float, float]  # x, y, w, h in pixels
    det_score: float
    keypoints: tuple[tuple[float, float, float], ...]  # (x, y, conf) x 17

    def to_json_obj(self) -> dict:
        return {
            "box": list(self.box),
            "det_score": self.det_score,
            "keypoints": [list(k) for k in self.keypoints],
        }


@dataclass(frozen=True)
class DetectionRecord:
    id: str
    image_w: int
    image_h: int
    persons: tuple[PersonDet, ...]

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "image_w": self.image_w,
            "image_h": self.image_h,
            "persons": [p.to_json_obj() for p in self.persons],
        }


def _require_id(obj: dict, path: str | None, lineno: int | None) -> str:
    rid = obj.get("id")
    if not is_content_hash(rid):
        raise WireFormatError(f"missing or malformed id: {rid!r}", path, lineno)
    return rid


def _iter_json_lines(stream: IO[str] | Iterable[str], path: str | None):
    for lineno, raw in enumerate(stream, start=1):
        if raw.strip() == "":
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise WireFormatError(f"malformed JSON: {exc.msg}", path, lineno) from exc
        if not isinstance(obj, dict):
            raise WireFormatError("each line must be a JSON object", path, lineno)
        yield lineno, obj


def parse_embedding_obj(obj: dict, path: str | None = None, lineno: int | None = None) -> EmbeddingRecord:
    rid = _require_id(obj, path, lineno)
    dim = obj.get("dim")
    vec = obj.get("vec")
    if not isinstance(dim, int) or dim < 1:
        raise WireFormatError(f"record {rid}: dim must be an integer >= 1", path, lineno)
    if not isinstance(vec, list) or len(vec) != dim:
        raise WireFormatError(f"record {rid}: vec length != dim", path, lineno)
    values = []
    for v in vec:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise WireFormatError(f"record {rid}: non-finite embedding component", path, lineno)
        values.append(float(v))
    return EmbeddingRecord(id=rid, dim=dim, vec=tuple(values))


def parse_embeddings(stream: IO[str] | Iterable[str], path: str | None = None) -> list[EmbeddingRecord]:
    """Parse embedding JSONL; dim must be constant and ids unique."""
    out: list[EmbeddingRecord] = []
    seen: set[str] = set()
    expected_dim: int | None = None
    for lineno, obj in _iter_json_lines(stream, path):
        rec = parse_embedding_obj(obj, path, lineno)
        if expected_dim is None:
            expected_dim = rec.dim
        elif rec.dim != expected_dim:
            raise WireFormatError(
                f"record {rec.id}: dim {rec.dim} does not match file dim {expected_dim}", path, lineno
            )
        if rec.id in seen:
            raise WireFormatError(f"duplicate id {rec.id}", path, lineno)
        seen.add(rec.id)
        out.append(rec)
    return out


def _parse_person(obj: dict, rid: str, image_w: int, image_h: int, path: str | None, lineno: int | None) -> PersonDet:
    box = obj.get("box")
    if not isinstance(box, list) or len(box) != 4:
        raise WireFormatError(f"record {rid}: box must be [x, y, w, h]", path, lineno)
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        raise WireFormatError(f"record {rid}: box w and h must be positive", path, lineno)
    if x < 0 or y < 0 or x + w > image_w or y + h > image_h:
        raise WireFormatError(f"record {rid}: box exceeds image bounds", path, lineno)
    det_score = obj.get("det_score")
    if not isinstance(det_score, (int, float)) or not 0.0 <= det_score <= 1.0:
        raise WireFormatError(f"record {rid}: det_score must be in [0,1]", path, lineno)
    kpts = obj.get("keypoints")
    if not isinstance(kpts, list) or len(kpts) != COCO_KEYPOINT_COUNT:
        raise WireFormatError(
            f"record {rid}: keypoints must have exactly {COCO_KEYPOINT_COUNT} entries", path, lineno
        )
    parsed: list[tuple[float, float, float]] = []
    for k in kpts:
        if not isinstance(k, list) or len(k) != 3:
            raise WireFormatError(f"record {rid}: each keypoint must be [x, y, conf]", path, lineno)
        kx, ky, kc = (float(v) for v in k)
        if not 0.0 <= kc <= 1.0:
            raise WireFormatError(f"record {rid}: keypoint conf must be in [0,1]", path, lineno)
        parsed.append((kx, ky, kc))
    return PersonDet(box=(x, y, w, h), det_score=float(det_score), keypoints=tuple(parsed))


def parse_detection_obj(obj: dict, path: str | None = None, lineno: int | None = None) -> DetectionRecord:
    rid = _require_id(obj, path, lineno)
    image_w = obj.get("image_w")
    image_h = obj.get("image_h")
    if not isinstance(image_w, int) or not isinstance(image_h, int) or image_w < 1 or image_h < 1:
        raise WireFormatError(f"record {rid}: image_w/image_h must be positive integers", path, lineno)
    persons = obj.get("persons")
    if not isinstance(persons, list):
        raise WireFormatError(f"record {rid}: persons must be a list", path, lineno)
    parsed = tuple(_parse_person(p, rid, image_w, image_h, path, lineno) for p in persons)
    return DetectionRecord(id=rid, image_w=image_w, image_h=image_h, persons=parsed)


def parse_detections(stream: IO[str] | Iterable[str], path: str | None = None) -> list[DetectionRecord]:
    out: list[DetectionRecord] = []
    seen: set[str] = set()
    for lineno, obj in _iter_json_lines(stream, path):
        rec = parse_detection_obj(obj, path, lineno)
        if rec.id in seen:
            raise WireFormatError(f"duplicate id {rec.id}", path, lineno)
        seen.add(rec.id)
        out.append(rec)
    return out


def read_embeddings(path: str | Path) -> list[EmbeddingRecord]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_embeddings(f, str(path))


def read_detections(path: str | Path) -> list[DetectionRecord]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_detections(f, str(path))


def serialize_records(records: Iterable[EmbeddingRecord] | Iterable[DetectionRecord]) -> bytes:
    lines = [
        json.dumps(rec.to_json_obj(), separators=(",", ":"), ensure_ascii=True) + "\n"
        for rec in records
    ]
    return "".join(lines).encode("utf-8")


def write_records(records, path: str | Path) -> None:
    """Write score records as JSONL in ascending id order (canonical)."""
    ordered = sorted(records, key=lambda r: r.id)
    atomic_write_bytes(path, serialize_records(ordered))
