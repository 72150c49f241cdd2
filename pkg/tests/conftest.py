from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from synthengine.records import ControlSignal, SampleRecord, build_manifest


def fake_id(key) -> str:
    return hashlib.sha256(str(key).encode()).hexdigest()


def make_real_record(key, image_path: str = "") -> SampleRecord:
    rid = fake_id(key)
    return SampleRecord(
        id=rid,
        origin="real",
        scene_index=1,
        variation_index=1,
        control=None,
        image_path=image_path or f"images/{rid}.png",
    )


def make_syn_record(key, scene: int = 1, variation: int = 1, image_path: str = "") -> SampleRecord:
    rid = fake_id(key)
    return SampleRecord(
        id=rid,
        origin="synthetic",
        scene_index=scene,
        variation_index=variation,
        control=ControlSignal(prompt="a person", pose_ref=None, edge_ref=None, seed=int(str(scene) + str(variation))),
        image_path=image_path or f"images/{rid}.png",
    )


def make_manifest(task: str, n: int, origin: str = "real", prefix: str = ""):
    if origin == "real":
        records = [make_real_record(f"{prefix}{origin}-{i}") for i in range(n)]
    else:
        records = [make_syn_record(f"{prefix}{origin}-{i}", scene=i + 1) for i in range(n)]
    return build_manifest(task, records)


def write_png(path: Path, width: int = 8, height: int = 12, color=(200, 30, 30)) -> bytes:
    from PIL import Image

    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.new("RGB", (width, height), color)
    img.save(path, format="PNG")
    return path.read_bytes()


def brute_force_margin(x, positives, negatives, k: int, scale: float) -> float:
    """Independent oracle: explicit cosine, sort, slice, mean."""

    def cos(a, b):
        na = math.sqrt(sum(v * v for v in a))
        nb = math.sqrt(sum(v * v for v in b))
        return sum(p * q for p, q in zip(a, b)) / (na * nb)

    pos_logits = sorted((scale * cos(x, t) for t in positives), reverse=True)
    neg_logits = sorted((scale * cos(x, t) for t in negatives), reverse=True)
    kp = min(k, len(pos_logits))
    kn = min(k, len(neg_logits))
    return sum(pos_logits[:kp]) / kp - sum(neg_logits[:kn]) / kn


def write_jsonl(path: Path, objs) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for obj in objs:
            f.write(json.dumps(obj) + "\n")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
