"""Training-pool composition: the five ablation conditions A-E.

A=real, B=raw synthetic, C=filtered synthetic, D=real+raw, E=real+filtered.
Human review verdicts are applied here: accepted borderline ids join the
filtered pool (pulled from the raw pool), rejected ids are removed.
"""

from __future__ import annotations

import hashlib
import json

from synthengine.errors import EngineError
from synthengine.records import DatasetManifest, build_manifest, merge_manifests

CONDITION_INPUTS = {
    "A": ("real",),
    "B": ("raw_syn",),
    "C": ("filtered_syn",),
    "D": ("real", "raw_syn"),
    "E": ("real", "filtered_syn"),
}


def apply_verdicts(
    pool: DatasetManifest,
    source: DatasetManifest | None,
    verdicts: dict[str, str],
) -> tuple[DatasetManifest, list[str]]:
    """Fold review verdicts into a filtered pool.

    Accepted ids are added from `source` (the raw pool they were filtered out
    of); rejected ids are dropped from `pool` if present. Returns the adjusted
    manifest and the sorted list of applied ids.
    """
    if not verdicts:
        return pool, []
    accepted = sorted(i for i, d in verdicts.items() if d == "accept")
    rejected = {i for i, d in verdicts.items() if d == "reject"}
    records = {r.id: r for r in pool.records if r.id not in rejected}
    if accepted:
        if source is None:
            raise EngineError("accept verdicts present but no raw pool to pull records from")
        source_by_id = source.by_id()
        missing = [i for i in accepted if i not in source_by_id]
        if missing:
            raise EngineError(f"accepted ids not found in the raw pool: {', '.join(missing[:5])}")
        for rid in accepted:
            records[rid] = source_by_id[rid]
    applied = sorted(set(accepted) | (rejected & {r.id for r in pool.records}))
    adjusted = build_manifest(pool.task, records.values(), provenance=pool.provenance)
    return adjusted, applied


def compose_condition(
    condition: str,
    real: DatasetManifest | None = None,
    raw_syn: DatasetManifest | None = None,
    filtered_syn: DatasetManifest | None = None,
    verdicts: dict[str, str] | None = None,
) -> DatasetManifest:
    """Build the training pool for one ablation condition."""
    condition = condition.upper()
    if condition not in CONDITION_INPUTS:
        raise EngineError(f"unknown condition {condition!r}; expected one of A-E")
    inputs = {"real": real, "raw_syn": raw_syn, "filtered_syn": filtered_syn}
    for name in CONDITION_INPUTS[condition]:
        if inputs[name] is None:
            raise EngineError(f"condition {condition} requires the {name} manifest")

    applied: list[str] = []
    if filtered_syn is not None and verdicts:
        filtered_syn, applied = apply_verdicts(filtered_syn, raw_syn, verdicts)

    if condition == "A":
        pool = real
    elif condition == "B":
        pool = raw_syn
    elif condition == "C":
        pool = filtered_syn
    elif condition == "D":
        pool = merge_manifests(real, raw_syn)
    else:
        pool = merge_manifests(real, filtered_syn)

    stamp = hashlib.sha256(
        json.dumps({"condition": condition, "verdicts_applied": applied}, sort_keys=True).encode()
    ).hexdigest()
    return pool.with_provenance(f"compose:{condition}", stamp)
