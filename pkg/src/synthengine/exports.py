"""Dataset export/import in the two standard pose layouts.

YOLO pose: images/ + labels/<stem>.txt with normalized coordinates, plus a
data.yaml index written last (its presence implies a complete export) and the
manifest itself for lossless reimport. COCO: a single keypoints JSON document.
Both exports are byte-deterministic for equal inputs.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from PIL import Image

from synthengine.errors import ExportError, WireFormatError
from synthengine.records import (
    DatasetManifest,
    SampleRecord,
    atomic_write_bytes,
    build_manifest,
    hash_content,
    is_content_hash,
    manifest_bytes,
    read_manifest,
    resolve_image_path,
)

KEYPOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

COCO_SKELETON = (
    (16, 14), (14, 12), (17, 15), (15, 13), (12, 13), (6, 12), (7, 13),
    (6, 7), (6, 8), (7, 9), (8, 10), (9, 11), (2, 3), (1, 2), (1, 3),
    (2, 4), (3, 5), (4, 6), (5, 7),
)

N_KPT = len(KEYPOINT_NAMES)
TOKENS_PER_LABEL_LINE = 1 + 4 + 3 * N_KPT


@dataclass(frozen=True)
class GroundTruthPerson:
    box: tuple[float, float, float, float]  # x, y, w, h pixels
    keypoints: tuple[tuple[float, float, int], ...]  # (x, y, visibility 0|1|2)


@dataclass(frozen=True)
class PoseAnnotation:
    id: str
    image_w: int
    image_h: int
    persons: tuple[GroundTruthPerson, ...]

    def validate(self) -> None:
        if self.image_w < 1 or self.image_h < 1:
            raise ExportError(f"annotation {self.id}: image dims must be positive")
        for p in self.persons:
            if len(p.keypoints) != N_KPT:
                raise ExportError(f"annotation {self.id}: expected {N_KPT} keypoints")
            if p.box[2] <= 0 or p.box[3] <= 0:
                raise ExportError(f"annotation {self.id}: box w/h must be positive")
            for _, _, vis in p.keypoints:
                if vis not in (0, 1, 2):
                    raise ExportError(f"annotation {self.id}: visibility must be 0, 1 or 2")


def read_annotations(path: str | Path) -> dict[str, PoseAnnotation]:
    """Annotation JSONL: {"id", "image_w", "image_h", "persons":[{"box","keypoints"}]}."""
    out: dict[str, PoseAnnotation] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise WireFormatError(f"malformed JSON: {exc.msg}", str(path), lineno) from exc
            try:
                ann = annotation_from_json_obj(obj)
            except (KeyError, TypeError, ValueError, ExportError) as exc:
                raise WireFormatError(f"bad annotation: {exc}", str(path), lineno) from exc
            if ann.id in out:
                raise WireFormatError(f"duplicate id {ann.id}", str(path), lineno)
            out[ann.id] = ann
    return out


def annotation_from_json_obj(obj: dict) -> PoseAnnotation:
    persons = []
    for p in obj.get("persons", []):
        box = tuple(float(v) for v in p["box"])
        if len(box) != 4:
            raise ValueError("box must be [x, y, w, h]")
        kpts = tuple((float(k[0]), float(k[1]), int(k[2])) for k in p["keypoints"])
        persons.append(GroundTruthPerson(box=box, keypoints=kpts))
    ann = PoseAnnotation(
        id=obj["id"],
        image_w=int(obj["image_w"]),
        image_h=int(obj["image_h"]),
        persons=tuple(persons),
    )
    ann.validate()
    return ann


def write_annotations(annotations: Iterable[PoseAnnotation], path: str | Path) -> None:
    lines = []
    for ann in sorted(annotations, key=lambda a: a.id):
        obj = {
            "id": ann.id,
            "image_w": ann.image_w,
            "image_h": ann.image_h,
            "persons": [
                {"box": list(p.box), "keypoints": [[x, y, v] for x, y, v in p.keypoints]}
                for p in ann.persons
            ],
        }
        lines.append(json.dumps(obj, separators=(",", ":")) + "\n")
    atomic_write_bytes(path, "".join(lines).encode("utf-8"))


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _norm_or_raise(value: float, span: float, what: str, rid: str) -> float:
    norm = value / span
    if not 0.0 <= norm <= 1.0:
        raise ExportError(f"record {rid}: {what} normalizes to {norm:.6f}, outside [0,1]")
    return norm


def yolo_label_lines(ann: PoseAnnotation) -> list[str]:
    """One `0 cx cy w h x1 y1 v1 ... x17 y17 v17` line per person, normalized."""
    lines = []
    for p in ann.persons:
        x, y, w, h = p.box
        parts = [
            "0",
            _fmt(_norm_or_raise(x + w / 2, ann.image_w, "box cx", ann.id)),
            _fmt(_norm_or_raise(y + h / 2, ann.image_h, "box cy", ann.id)),
            _fmt(_norm_or_raise(w, ann.image_w, "box w", ann.id)),
            _fmt(_norm_or_raise(h, ann.image_h, "box h", ann.id)),
        ]
        for kx, ky, vis in p.keypoints:
            if vis == 0:
                parts.extend(["0.000000", "0.000000", "0"])
            else:
                parts.append(_fmt(_norm_or_raise(kx, ann.image_w, "keypoint x", ann.id)))
                parts.append(_fmt(_norm_or_raise(ky, ann.image_h, "keypoint y", ann.id)))
                parts.append(str(vis))
        lines.append(" ".join(parts))
    return lines


def _require_annotations(
    manifest: DatasetManifest, annotations: dict[str, PoseAnnotation]
) -> None:
    missing = [r.id for r in manifest.records if r.id not in annotations]
    if missing:
        raise ExportError(
            f"annotations missing for {len(missing)} records: {', '.join(missing[:5])}"
            + ("..." if len(missing) > 5 else "")
        )


def export_yolo_pose(
    manifest: DatasetManifest,
    annotations: dict[str, PoseAnnotation],
    manifest_path: str | Path,
    out_dir: str | Path,
    symlink_images: bool = False,
) -> None:
    _require_annotations(manifest, annotations)
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)

    for rec in manifest.records:  # canonical order
        ann = annotations[rec.id]
        ann.validate()
        label_text = "".join(line + "\n" for line in yolo_label_lines(ann))
        atomic_write_bytes(out / "labels" / f"{rec.id}.txt", label_text.encode("utf-8"))

        src = resolve_image_path(manifest_path, rec)
        if not src.is_file():
            raise ExportError(f"record {rec.id}: image file not found: {src}")
        dst = out / "images" / (rec.id + src.suffix.lower())
        if dst.exists() or dst.is_symlink():
            dst.unlink()
        if symlink_images:
            dst.symlink_to(src.resolve())
        else:
            shutil.copyfile(src, dst)

    atomic_write_bytes(out / "manifest.jsonl", manifest_bytes(manifest))
    # Index written last: its presence implies all label files are in place.
    index = (
        "path: .\n"
        "train: images\n"
        "val: images\n"
        "kpt_shape: [17, 3]\n"
        "names:\n"
        "  0: person\n"
    )
    atomic_write_bytes(out / "data.yaml", index.encode("utf-8"))


def export_coco(
    manifest: DatasetManifest,
    annotations: dict[str, PoseAnnotation],
    path: str | Path,
) -> None:
    _require_annotations(manifest, annotations)
    images = []
    anns = []
    ann_id = 1
    for idx, rec in enumerate(manifest.records, start=1):
        ann = annotations[rec.id]
        ann.validate()
        images.append(
            {
                "id": idx,
                "file_name": rec.image_path,
                "width": ann.image_w,
                "height": ann.image_h,
                "sha256": rec.id,
            }
        )
        for p in ann.persons:
            flat: list[float | int] = []
            for kx, ky, vis in p.keypoints:
                flat.extend([kx, ky, vis])
            anns.append(
                {
                    "id": ann_id,
                    "image_id": idx,
                    "category_id": 1,
                    "bbox": list(p.box),
                    "area": p.box[2] * p.box[3],
                    "iscrowd": 0,
                    "keypoints": flat,
                    "num_keypoints": sum(1 for _, _, v in p.keypoints if v > 0),
                }
            )
            ann_id += 1
    doc = {
        "images": images,
        "annotations": anns,
        "categories": [
            {
                "id": 1,
                "name": "person",
                "supercategory": "person",
                "keypoints": list(KEYPOINT_NAMES),
                "skeleton": [list(edge) for edge in COCO_SKELETON],
            }
        ],
    }
    atomic_write_bytes(path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))


def _parse_label_file(path: Path, image_w: int, image_h: int) -> list[GroundTruthPerson]:
    persons = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            tokens = raw.split()
            if len(tokens) != TOKENS_PER_LABEL_LINE:
                raise WireFormatError(
                    f"expected {TOKENS_PER_LABEL_LINE} tokens, got {len(tokens)}",
                    str(path),
                    lineno,
                )
            if tokens[0] != "0":
                raise WireFormatError(f"unknown class id {tokens[0]!r}", str(path), lineno)
            try:
                values = [float(t) for t in tokens[1:]]
            except ValueError as exc:
                raise WireFormatError(f"non-numeric token: {exc}", str(path), lineno) from exc
            cx, cy, w, h = values[:4]
            for v in values[:4]:
                if not 0.0 <= v <= 1.0:
                    raise WireFormatError("box coordinate outside [0,1]", str(path), lineno)
            kpts = []
            for i in range(N_KPT):
                kx, ky, vis = values[4 + 3 * i : 7 + 3 * i]
                if vis not in (0.0, 1.0, 2.0) or int(vis) != vis:
                    raise WireFormatError(f"visibility must be 0, 1 or 2, got {vis}", str(path), lineno)
                if not (0.0 <= kx <= 1.0 and 0.0 <= ky <= 1.0):
                    raise WireFormatError("keypoint coordinate outside [0,1]", str(path), lineno)
                kpts.append((kx * image_w, ky * image_h, int(vis)))
            persons.append(
                GroundTruthPerson(
                    box=((cx - w / 2) * image_w, (cy - h / 2) * image_h, w * image_w, h * image_h),
                    keypoints=tuple(kpts),
                )
            )
    return persons


def _image_dims(path: Path) -> tuple[int, int]:
    try:
        with Image.open(path) as img:
            return img.size
    except Exception as exc:
        raise ExportError(f"cannot read image dimensions from {path}: {exc}") from exc


def import_yolo_pose(dir_path: str | Path) -> tuple[DatasetManifest, dict[str, PoseAnnotation]]:
    root = Path(dir_path)
    images_dir = root / "images"
    labels_dir = root / "labels"
    if not images_dir.is_dir() or not labels_dir.is_dir():
        raise ExportError(f"{root}: not a YOLO pose export (missing images/ or labels/)")

    manifest_file = root / "manifest.jsonl"
    if manifest_file.is_file():
        manifest = read_manifest(manifest_file)
    else:
        records = []
        for img in sorted(images_dir.iterdir()):
            if not img.is_file():
                continue
            records.append(
                SampleRecord(
                    id=hash_content(img.read_bytes()),
                    origin="real",
                    scene_index=1,
                    variation_index=1,
                    control=None,
                    image_path=f"images/{img.name}",
                )
            )
        manifest = build_manifest("imported", records)

    annotations: dict[str, PoseAnnotation] = {}
    for rec in manifest.records:
        matches = sorted(images_dir.glob(rec.id + ".*"))
        if not matches:
            raise ExportError(f"record {rec.id}: exported image missing under images/")
        w, h = _image_dims(matches[0])
        label_file = labels_dir / f"{rec.id}.txt"
        if not label_file.is_file():
            raise ExportError(f"record {rec.id}: label file missing under labels/")
        persons = _parse_label_file(label_file, w, h)
        annotations[rec.id] = PoseAnnotation(id=rec.id, image_w=w, image_h=h, persons=tuple(persons))
    return manifest, annotations


def import_coco(path: str | Path) -> tuple[DatasetManifest, dict[str, PoseAnnotation]]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise WireFormatError(f"malformed JSON: {exc.msg}", str(path)) from exc
    images = doc.get("images")
    anns = doc.get("annotations")
    if not isinstance(images, list) or not isinstance(anns, list):
        raise WireFormatError("document must contain images[] and annotations[]", str(path))

    records = []
    meta: dict[int, tuple[str, int, int]] = {}
    for img in images:
        rid = img.get("sha256")
        if not is_content_hash(rid):
            # Foreign COCO file: derive the id from the referenced image bytes.
            candidate = path.parent / img.get("file_name", "")
            if not candidate.is_file():
                raise ExportError(
                    f"image entry {img.get('id')}: no sha256 key and file not found: {candidate}"
                )
            rid = hash_content(candidate.read_bytes())
        width, height = int(img["width"]), int(img["height"])
        meta[int(img["id"])] = (rid, width, height)
        records.append(
            SampleRecord(
                id=rid,
                origin="real",
                scene_index=1,
                variation_index=1,
                control=None,
                image_path=img.get("file_name", ""),
            )
        )

    persons_by_image: dict[int, list[GroundTruthPerson]] = {}
    for ann in anns:
        flat = ann.get("keypoints", [])
        if len(flat) != 3 * N_KPT:
            raise WireFormatError(
                f"annotation {ann.get('id')}: keypoints must have {3 * N_KPT} values", str(path)
            )
        kpts = []
        for i in range(N_KPT):
            kx, ky, vis = flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]
            if vis not in (0, 1, 2):
                raise WireFormatError(
                    f"annotation {ann.get('id')}: visibility must be 0, 1 or 2", str(path)
                )
            kpts.append((float(kx), float(ky), int(vis)))
        box = tuple(float(v) for v in ann.get("bbox", ()))
        if len(box) != 4:
            raise WireFormatError(f"annotation {ann.get('id')}: bbox must be [x,y,w,h]", str(path))
        persons_by_image.setdefault(int(ann["image_id"]), []).append(
            GroundTruthPerson(box=box, keypoints=tuple(kpts))
        )

    annotations: dict[str, PoseAnnotation] = {}
    for image_id, (rid, width, height) in meta.items():
        annotations[rid] = PoseAnnotation(
            id=rid,
            image_w=width,
            image_h=height,
            persons=tuple(persons_by_image.get(image_id, [])),
        )
    return build_manifest("imported", records), annotations


def import_dataset(path: str | Path) -> tuple[DatasetManifest, dict[str, PoseAnnotation]]:
    """Inverse of the corresponding export: YOLO directory or COCO JSON file."""
    p = Path(path)
    if p.is_dir():
        return import_yolo_pose(p)
    if p.suffix.lower() == ".json":
        return import_coco(p)
    raise ExportError(f"{p}: expected a YOLO export directory or a COCO .json document")
