"""Deterministic expansion of a control space into generation job specs.

Job conditioning is drawn with a counter-based scheme (keyed hash of
seed, scene, variation), so any job is reproducible in isolation and the
full plan is a pure function of the control space.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

from synthengine.config import ControlSpace
from synthengine.errors import CoverageError, EngineError, WireFormatError
from synthengine.records import (
    ControlSignal,
    DatasetManifest,
    SampleRecord,
    atomic_write_bytes,
    build_manifest,
    hash_content,
)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


@dataclass(frozen=True)
class GenerationJob:
    scene_index: int
    variation_index: int
    control: ControlSignal

    def to_json_obj(self) -> dict:
        return {
            "scene_index": self.scene_index,
            "variation_index": self.variation_index,
            "control": self.control.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GenerationJob":
        return cls(
            scene_index=int(obj["scene_index"]),
            variation_index=int(obj["variation_index"]),
            control=ControlSignal.from_json_obj(obj["control"]),
        )


def _derive_words(seed: int, i: int, v: int, n_words: int) -> tuple[int, ...]:
    digest = hashlib.blake2b(
        struct.pack("<QQQ", seed, i, v), digest_size=8 * n_words
    ).digest()
    return struct.unpack(f"<{n_words}Q", digest)


def expand_plan(space: ControlSpace) -> list[GenerationJob]:
    """Exactly n_scenes * k_variations jobs in (scene, variation) order."""
    space.validate()
    jobs: list[GenerationJob] = []
    seeds_seen: set[int] = set()
    for i in range(1, space.n_scenes + 1):
        for v in range(1, space.k_variations + 1):
            w_prompt, w_pose, w_edge, w_seed = _derive_words(space.seed, i, v, 4)
            control = ControlSignal(
                prompt=space.prompts[w_prompt % len(space.prompts)],
                pose_ref=space.pose_refs[w_pose % len(space.pose_refs)] if space.pose_refs else None,
                edge_ref=space.edge_refs[w_edge % len(space.edge_refs)] if space.edge_refs else None,
                seed=w_seed,
            )
            if control.seed in seeds_seen:
                raise EngineError(
                    f"derived seed collision at scene {i} variation {v}; change control.seed"
                )
            seeds_seen.add(control.seed)
            jobs.append(GenerationJob(scene_index=i, variation_index=v, control=control))
    return jobs


def emit_plan(jobs: list[GenerationJob], path: str | Path) -> None:
    ordered = sorted(jobs, key=lambda j: (j.scene_index, j.variation_index))
    lines = [json.dumps(j.to_json_obj(), separators=(",", ":")) + "\n" for j in ordered]
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


def read_plan(path: str | Path) -> list[GenerationJob]:
    jobs: list[GenerationJob] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                job = GenerationJob.from_json_obj(json.loads(raw))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise WireFormatError(f"bad plan line: {exc}", str(path), lineno) from exc
            key = (job.scene_index, job.variation_index)
            if key in seen:
                raise WireFormatError(f"duplicate (scene, variation) {key}", str(path), lineno)
            seen.add(key)
            jobs.append(job)
    return jobs


def job_image_stem(job: GenerationJob) -> str:
    """Filename contract with the generator adapter: one image per (i, v)."""
    return f"{job.scene_index:05d}_{job.variation_index:05d}"


def collect_generated(
    jobs: list[GenerationJob], images_dir: str | Path, task: str, manifest_path: str | Path
) -> DatasetManifest:
    """Verify one generated image per job, hash bytes, and build the synthetic manifest.

    Image paths are stored relative to the manifest's directory.
    """
    images_dir = Path(images_dir)
    manifest_dir = Path(manifest_path).parent.resolve()
    records: list[SampleRecord] = []
    missing: list[str] = []
    for job in sorted(jobs, key=lambda j: (j.scene_index, j.variation_index)):
        stem = job_image_stem(job)
        candidates = [images_dir / (stem + ext) for ext in IMAGE_EXTENSIONS]
        found = [p for p in candidates if p.is_file()]
        if not found:
            missing.append(stem)
            continue
        if len(found) > 1:
            raise CoverageError(f"ambiguous generator output for {stem}: {[p.name for p in found]}")
        image = found[0]
        try:
            rel = image.resolve().relative_to(manifest_dir)
            image_path = rel.as_posix()
        except ValueError:
            image_path = str(image.resolve())
        records.append(
            SampleRecord(
                id=hash_content(image.read_bytes()),
                origin="synthetic",
                scene_index=job.scene_index,
                variation_index=job.variation_index,
                control=job.control,
                image_path=image_path,
            )
        )
    if missing:
        raise CoverageError(
            f"generator output missing for {len(missing)} jobs: {', '.join(missing[:10])}"
            + ("..." if len(missing) > 10 else "")
        )
    return build_manifest(task, records)
