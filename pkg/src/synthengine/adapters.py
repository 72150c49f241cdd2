"""Subprocess adapter protocol for external model scorers.

The engine writes request lines {"id": ..., "image_path": ...} to the
adapter's stdin and reads embedding/detection records from its stdout,
newline-delimited UTF-8. Output must cover exactly the requested ids.
"""

from __future__ import annotations

import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import json

from synthengine.errors import AdapterError, CoverageError
from synthengine.records import DatasetManifest, resolve_image_path
from synthengine.scores import (
    DetectionRecord,
    EmbeddingRecord,
    parse_detections,
    parse_embeddings,
)

MODES = ("embed", "detect")


@dataclass(frozen=True)
class ScorerJob:
    command: str
    mode: str  # "embed" | "detect"
    requests: tuple[tuple[str, str], ...]  # (id, image_path)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise AdapterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.command.strip():
            raise AdapterError("adapter command is empty")


def run_external_scorer(job: ScorerJob) -> list[EmbeddingRecord] | list[DetectionRecord]:
    """Run one adapter process over a manifest slice and validate coverage."""
    job.validate()
    stdin_payload = "".join(
        json.dumps({"id": rid, "image_path": path}, separators=(",", ":")) + "\n"
        for rid, path in job.requests
    )
    argv = shlex.split(job.command)
    try:
        proc = subprocess.run(
            argv,
            input=stdin_payload,
            capture_output=True,
            text=True,
            check=False,
        )
    except OSError as exc:
        raise AdapterError(f"failed to launch adapter {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-10:]
        raise AdapterError(
            f"adapter exited with status {proc.returncode}; stderr tail:\n" + "\n".join(tail)
        )

    lines = proc.stdout.splitlines(keepends=True)
    if job.mode == "embed":
        records = parse_embeddings(lines, path=f"<adapter {argv[0]}>")
    else:
        records = parse_detections(lines, path=f"<adapter {argv[0]}>")

    requested = {rid for rid, _ in job.requests}
    returned = {r.id for r in records}
    missing = sorted(requested - returned)
    extra = sorted(returned - requested)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing ids: {', '.join(missing[:10])}")
        if extra:
            parts.append(f"extra ids: {', '.join(extra[:10])}")
        raise CoverageError("adapter output does not cover the request; " + "; ".join(parts))
    return records


def _slices(seq: list, n: int) -> list[list]:
    if n <= 1 or len(seq) <= 1:
        return [seq]
    size = (len(seq) + n - 1) // n
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def ingest_scores(
    manifest: DatasetManifest,
    manifest_path: str | Path,
    command: str,
    mode: str,
    workers: int = 1,
) -> list[EmbeddingRecord] | list[DetectionRecord]:
    """Score a whole manifest, optionally sharding across adapter processes.

    Results are merged keyed by id, so the outcome is independent of
    completion order.
    """
    requests = [
        (rec.id, str(resolve_image_path(manifest_path, rec))) for rec in manifest.records
    ]
    if not requests:
        return []
    jobs = [
        ScorerJob(command=command, mode=mode, requests=tuple(chunk))
        for chunk in _slices(requests, max(1, workers))
    ]
    merged: dict[str, EmbeddingRecord | DetectionRecord] = {}
    if len(jobs) == 1:
        results = [run_external_scorer(jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(run_external_scorer, jobs))
    for batch in results:
        for rec in batch:
            merged[rec.id] = rec
    return [merged[i] for i in sorted(merged)]
