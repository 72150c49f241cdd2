"""Core domain types: samples, manifests, content hashing, manifest JSONL I/O.

A manifest is the unit artifact every pipeline stage reads and writes. Records
are content-addressed (the id is the SHA-256 of the image bytes) and kept in
canonical ascending-id order so that equal manifests serialize to identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from synthengine.errors import ManifestError, VersionError, WireFormatError

MANIFEST_VERSION = 1

_HEX64 = frozenset("0123456789abcdef")


def hash_content(data: bytes) -> str:
    """SHA-256 digest of raw bytes as 64 lowercase hex chars."""
    return hashlib.sha256(data).hexdigest()


def is_content_hash(value: str) -> bool:
    return isinstance(value, str) and len(value) == 64 and set(value) <= _HEX64


def provenance_timestamp() -> str:
    """Timestamp for provenance entries.

    Reproducible by default: honors SOURCE_DATE_EPOCH when set and otherwise
    pins the epoch, so reruns with equal inputs produce byte-identical
    artifacts.
    """
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ControlSignal:
    """Generation conditioning for one synthetic sample."""

    prompt: str
    pose_ref: str | None
    edge_ref: str | None
    seed: int

    def validate(self) -> None:
        if not self.prompt:
            raise ManifestError("control.prompt must be non-empty")
        if not (0 <= self.seed < 2**64):
            raise ManifestError(f"control.seed out of u64 range: {self.seed}")

    def to_json_obj(self) -> dict:
        return {
            "prompt": self.prompt,
            "pose_ref": self.pose_ref,
            "edge_ref": self.edge_ref,
            "seed": self.seed,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ControlSignal":
        sig = cls(
            prompt=obj.get("prompt", ""),
            pose_ref=obj.get("pose_ref"),
            edge_ref=obj.get("edge_ref"),
            seed=obj.get("seed", -1),
        )
        sig.validate()
        return sig


@dataclass(frozen=True)
class SampleRecord:
    """One image-level unit flowing through the pipeline."""

    id: str
    origin: str  # "real" | "synthetic"
    scene_index: int
    variation_index: int
    control: ControlSignal | None
    image_path: str
    label_path: str | None = None

    def validate(self) -> None:
        if not is_content_hash(self.id):
            raise ManifestError(f"record id is not a 64-hex content hash: {self.id!r}")
        if self.origin not in ("real", "synthetic"):
            raise ManifestError(f"record {self.id}: unknown origin {self.origin!r}")
        if self.origin == "real" and self.control is not None:
            raise ManifestError(f"record {self.id}: real records must not carry a control signal")
        if self.origin == "synthetic" and self.control is None:
            raise ManifestError(f"record {self.id}: synthetic records require a control signal")
        if self.scene_index < 1 or self.variation_index < 1:
            raise ManifestError(
                f"record {self.id}: scene_index/variation_index must be >= 1"
            )
        if not self.image_path:
            raise ManifestError(f"record {self.id}: image_path must be non-empty")
        if self.control is not None:
            self.control.validate()

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "scene_index": self.scene_index,
            "variation_index": self.variation_index,
            "control": None if self.control is None else self.control.to_json_obj(),
            "image_path": self.image_path,
            "label_path": self.label_path,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SampleRecord":
        control = obj.get("control")
        rec = cls(
            id=obj.get("id", ""),
            origin=obj.get("origin", ""),
            scene_index=obj.get("scene_index", 0),
            variation_index=obj.get("variation_index", 0),
            control=None if control is None else ControlSignal.from_json_obj(control),
            image_path=obj.get("image_path", ""),
            label_path=obj.get("label_path"),
        )
        rec.validate()
        return rec


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered, content-hashed collection of SampleRecords."""

    task: str
    records: tuple[SampleRecord, ...]
    provenance: tuple[tuple[str, str, str], ...] = ()
    version: int = MANIFEST_VERSION

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def by_id(self) -> dict[str, SampleRecord]:
        return {r.id: r for r in self.records}

    def with_provenance(self, stage: str, config_hash: str) -> "DatasetManifest":
        entry = (stage, config_hash, provenance_timestamp())
        return DatasetManifest(
            task=self.task,
            records=self.records,
            provenance=self.provenance + (entry,),
            version=self.version,
        )

    def validate(self) -> None:
        seen: set[str] = set()
        prev = ""
        for rec in self.records:
            rec.validate()
            if rec.id in seen:
                raise ManifestError(f"duplicate record id {rec.id}")
            if rec.id < prev:
                raise ManifestError("records are not in ascending id order")
            seen.add(rec.id)
            prev = rec.id


def build_manifest(
    task: str,
    records: Iterable[SampleRecord],
    provenance: Iterable[tuple[str, str, str]] = (),
) -> DatasetManifest:
    """Assemble a manifest in canonical order, rejecting conflicting duplicates."""
    by_id: dict[str, SampleRecord] = {}
    for rec in records:
        rec.validate()
        prior = by_id.get(rec.id)
        if prior is not None and prior != rec:
            raise ManifestError(f"conflicting records for id {rec.id}")
        by_id[rec.id] = rec
    ordered = tuple(by_id[i] for i in sorted(by_id))
    manifest = DatasetManifest(task=task, records=ordered, provenance=tuple(provenance))
    manifest.validate()
    return manifest


def merge_manifests(a: DatasetManifest, b: DatasetManifest) -> DatasetManifest:
    """Union of two manifests deduplicated by id, canonical order, provenance concatenated."""
    if a.task != b.task:
        raise ManifestError(f"task mismatch: {a.task!r} vs {b.task!r}")
    merged: dict[str, SampleRecord] = {r.id: r for r in a.records}
    for rec in b.records:
        prior = merged.get(rec.id)
        if prior is not None and prior != rec:
            raise ManifestError(f"duplicate id {rec.id} with conflicting fields")
        merged[rec.id] = rec
    ordered = tuple(merged[i] for i in sorted(merged))
    return DatasetManifest(task=a.task, records=ordered, provenance=a.provenance + b.provenance)


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True) + "\n"


def manifest_bytes(manifest: DatasetManifest) -> bytes:
    """Canonical serialization; equal manifests yield identical bytes."""
    manifest.validate()
    header = {
        "version": manifest.version,
        "task": manifest.task,
        "provenance": [list(entry) for entry in manifest.provenance],
    }
    lines = [_dump_line(header)]
    lines.extend(_dump_line(rec.to_json_obj()) for rec in manifest.records)
    return "".join(lines).encode("utf-8")


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Whole-file atomic write: temp file in same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    atomic_write_bytes(path, manifest_bytes(manifest))


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    records: list[SampleRecord] = []
    header: dict | None = None
    with path.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise WireFormatError(f"malformed JSON: {exc.msg}", str(path), lineno) from exc
            if lineno == 1:
                if not isinstance(obj, dict) or "version" not in obj:
                    raise WireFormatError("first line must be the manifest header", str(path), 1)
                if obj["version"] != MANIFEST_VERSION:
                    raise VersionError(
                        f"{path}: unsupported manifest version {obj['version']!r}"
                    )
                header = obj
                continue
            try:
                records.append(SampleRecord.from_json_obj(obj))
            except ManifestError as exc:
                raise WireFormatError(str(exc), str(path), lineno) from exc
    if header is None:
        raise WireFormatError("empty file: missing manifest header", str(path), 1)
    provenance = tuple(tuple(entry) for entry in header.get("provenance", []))
    for entry in provenance:
        if len(entry) != 3:
            raise WireFormatError("provenance entries must be [stage, config_hash, timestamp]", str(path), 1)
    manifest = DatasetManifest(
        task=header.get("task", ""),
        records=tuple(records),
        provenance=provenance,  # type: ignore[arg-type]
    )
    manifest.validate()
    return manifest


def resolve_image_path(manifest_path: str | Path, record: SampleRecord) -> Path:
    """Image paths in a manifest are relative to the manifest's directory."""
    p = Path(record.image_path)
    if p.is_absolute():
        return p
    return Path(manifest_path).parent / p
