"""Threshold calibration from labeled real anchors.

The semantic threshold is the largest observed positive-anchor margin that
still keeps positive recall at or above the requested floor. Candidates are
restricted to observed margins (nearest-rank order statistics, no
interpolation), so results are deterministic and brute-force checkable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from synthengine.cascade import StructScore
from synthengine.errors import ConfigError, EngineError, WireFormatError
from synthengine.records import atomic_write_bytes, is_content_hash


@dataclass(frozen=True)
class AnchorLabel:
    id: str
    label: str  # "positive" | "negative"


@dataclass(frozen=True)
class CalibrationReport:
    tau_sem: float
    achieved_recall: float
    achieved_rejection: float
    n_pos: int
    n_neg: int

    def to_json_obj(self) -> dict:
        return {
            "tau_sem": self.tau_sem,
            "achieved_recall": self.achieved_recall,
            "achieved_rejection": self.achieved_rejection,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "method": "recall-floor",
        }


def calibrate_semantic(
    margins: dict[str, float], labels: Iterable[AnchorLabel], recall_target: float
) -> CalibrationReport:
    """Pick tau = max candidate with positive pass-rate >= recall_target.

    Ties at tau pass (inclusive >=, matching the cascade gate). Negative
    anchors never influence tau; they only populate achieved_rejection.
    """
    if not 0.0 < recall_target <= 1.0:
        raise ConfigError(f"recall target must be in (0,1], got {recall_target!r}")
    labels = list(labels)
    unlabeled = [lab.id for lab in labels if lab.id not in margins]
    if unlabeled:
        raise EngineError(f"labeled ids without margins: {', '.join(unlabeled[:5])}")
    pos = [margins[lab.id] for lab in labels if lab.label == "positive"]
    neg = [margins[lab.id] for lab in labels if lab.label == "negative"]
    if not pos:
        raise EngineError("calibration requires at least one positive anchor")

    n_pos = len(pos)
    tau = None
    for candidate in sorted(set(pos), reverse=True):
        recall = sum(1 for m in pos if m >= candidate) / n_pos
        if recall >= recall_target:
            tau = candidate
            break
    assert tau is not None  # recall at min(pos) is always 1.0

    achieved_recall = sum(1 for m in pos if m >= tau) / n_pos
    achieved_rejection = (sum(1 for m in neg if m < tau) / len(neg)) if neg else 0.0
    return CalibrationReport(
        tau_sem=tau,
        achieved_recall=achieved_recall,
        achieved_rejection=achieved_rejection,
        n_pos=n_pos,
        n_neg=len(neg),
    )


def nearest_rank_quantile(values: list[float], q: float) -> float:
    """Lower-tail nearest-rank quantile over observed values (no interpolation)."""
    if not values:
        raise EngineError("quantile of empty set")
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"quantile must be in [0,1], got {q!r}")
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def calibrate_structural(
    struct_scores: dict[str, StructScore], labels: Iterable[AnchorLabel], quantile: float
) -> tuple[float, int]:
    """Derive (tau_area, tau_kpt_count) from positive-anchor structural scores."""
    labels = list(labels)
    missing = [lab.id for lab in labels if lab.label == "positive" and lab.id not in struct_scores]
    if missing:
        raise EngineError(f"positive anchors without structural scores: {', '.join(missing[:5])}")
    pos = [struct_scores[lab.id] for lab in labels if lab.label == "positive"]
    if not pos:
        raise EngineError("calibration requires at least one positive anchor")
    tau_area = nearest_rank_quantile([s.area_ratio for s in pos], quantile)
    tau_kpt = int(math.floor(nearest_rank_quantile([float(s.kpt_count) for s in pos], quantile)))
    return tau_area, tau_kpt


def read_labels(path: str | Path) -> list[AnchorLabel]:
    """Sidecar CSV with columns id,label; an `id,label` header row is optional."""
    out: list[AnchorLabel] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["id", "label"]:
                continue
            if len(row) != 2:
                raise WireFormatError(f"expected 2 columns, got {len(row)}", str(path), lineno)
            rid, label = row[0].strip(), row[1].strip()
            if not is_content_hash(rid):
                raise WireFormatError(f"malformed id {rid!r}", str(path), lineno)
            if label not in ("positive", "negative"):
                raise WireFormatError(f"label must be positive|negative, got {label!r}", str(path), lineno)
            if rid in seen:
                raise WireFormatError(f"duplicate id {rid}", str(path), lineno)
            seen.add(rid)
            out.append(AnchorLabel(id=rid, label=label))
    return out


def write_report(
    report: CalibrationReport,
    path: str | Path,
    recall_target: float | None = None,
    extra: dict | None = None,
) -> None:
    obj = report.to_json_obj()
    if recall_target is not None:
        obj["recall_target"] = recall_target
    if extra:
        obj.update(extra)
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def read_report(path: str | Path) -> CalibrationReport:
    with open(path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    try:
        return CalibrationReport(
            tau_sem=float(obj["tau_sem"]),
            achieved_recall=float(obj["achieved_recall"]),
            achieved_rejection=float(obj["achieved_rejection"]),
            n_pos=int(obj["n_pos"]),
            n_neg=int(obj["n_neg"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WireFormatError(f"bad calibration report: {exc}", str(path))
