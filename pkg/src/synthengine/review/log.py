"""Review queue backed by a single append-only JSONL event log.

State is pure log replay: enqueue events create pending items, verdict events
flip them. Every mutation is appended and flushed to disk *before* it is
applied in memory or acknowledged, so an acknowledged verdict survives a
crash and a restart reconstructs the exact queue.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from synthengine.cascade import FilterDecision, StructScore
from synthengine.errors import ReviewConflict, ReviewError, ReviewNotFound, WireFormatError
from synthengine.records import atomic_write_bytes

POLICIES = ("borderline_only", "borderline_and_rejected")

STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"


@dataclass(frozen=True)
class ReviewItem:
    id: str
    image_path: str
    s_sem: float
    s_struct: StructScore | None
    stage: str
    enqueued_at: float
    status: str = STATUS_PENDING

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "image_path": self.image_path,
            "s_sem": self.s_sem,
            "s_struct": None if self.s_struct is None else self.s_struct.to_json_obj(),
            "stage": self.stage,
            "enqueued_at": self.enqueued_at,
            "status": self.status,
        }


@dataclass(frozen=True)
class Verdict:
    id: str
    decision: str  # "accept" | "reject"
    reviewer: str
    decided_at: float

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "decision": self.decision,
            "reviewer": self.reviewer,
            "decided_at": self.decided_at,
        }


class ReviewQueue:
    """Single-writer review queue; all mutations go through the event log."""

    def __init__(self, log_path: str | Path):
        self._log_path = Path(log_path)
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._verdicts: dict[str, Verdict] = {}
        if self._log_path.exists():
            self._replay()

    # -- log plumbing ------------------------------------------------------

    def _replay(self) -> None:
        with self._log_path.open("r", encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                if raw.strip() == "":
                    continue
                try:
                    event = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise WireFormatError(f"corrupt log: {exc.msg}", str(self._log_path), lineno) from exc
                kind = event.get("event")
                if kind == "enqueue":
                    self._apply_enqueue(event, strict=False)
                elif kind == "verdict":
                    self._apply_verdict(event, lineno)
                else:
                    raise WireFormatError(f"unknown event kind {kind!r}", str(self._log_path), lineno)

    def _apply_enqueue(self, event: dict, strict: bool) -> None:
        rid = event["id"]
        if rid in self._items:
            if strict:
                raise ReviewError(f"id {rid} already enqueued")
            return
        struct = event.get("s_struct")
        self._items[rid] = ReviewItem(
            id=rid,
            image_path=event.get("image_path", ""),
            s_sem=float(event["s_sem"]),
            s_struct=None if struct is None else StructScore.from_json_obj(struct),
            stage=event["stage"],
            enqueued_at=float(event["enqueued_at"]),
        )

    def _apply_verdict(self, event: dict, lineno: int | None = None) -> None:
        rid = event["id"]
        item = self._items.get(rid)
        if item is None:
            raise WireFormatError(f"verdict for unknown id {rid}", str(self._log_path), lineno)
        if item.status != STATUS_PENDING:
            raise WireFormatError(f"second verdict for id {rid}", str(self._log_path), lineno)
        decision = event["decision"]
        verdict = Verdict(
            id=rid,
            decision=decision,
            reviewer=event.get("reviewer", ""),
            decided_at=float(event["decided_at"]),
        )
        self._verdicts[rid] = verdict
        status = STATUS_ACCEPTED if decision == "accept" else STATUS_REJECTED
        self._items[rid] = replace(item, status=status)

    def _append(self, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":")) + "\n"
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        with self._log_path.open("a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    # -- operations --------------------------------------------------------

    def enqueue(
        self,
        decisions: Iterable[FilterDecision],
        policy: str = "borderline_only",
        image_paths: dict[str, str] | None = None,
    ) -> int:
        """Enqueue reviewable decisions; already-known ids are skipped (idempotent)."""
        if policy not in POLICIES:
            raise ReviewError(f"policy must be one of {POLICIES}, got {policy!r}")
        wanted = {"borderline"} if policy == "borderline_only" else {"borderline", "reject"}
        added = 0
        with self._lock:
            for dec in sorted(decisions, key=lambda d: d.id):
                if dec.routing not in wanted or dec.id in self._items:
                    continue
                event = {
                    "event": "enqueue",
                    "id": dec.id,
                    "image_path": (image_paths or {}).get(dec.id, ""),
                    "s_sem": dec.s_sem,
                    "s_struct": None if dec.s_struct is None else dec.s_struct.to_json_obj(),
                    "stage": dec.stage,
                    "enqueued_at": time.time(),
                }
                self._append(event)
                self._apply_enqueue(event, strict=True)
                added += 1
        return added

    def next_item(self) -> ReviewItem | None:
        """Oldest pending item (FIFO by enqueued_at, ties by id)."""
        with self._lock:
            pending = [it for it in self._items.values() if it.status == STATUS_PENDING]
            if not pending:
                return None
            return min(pending, key=lambda it: (it.enqueued_at, it.id))

    def get_item(self, rid: str) -> ReviewItem | None:
        with self._lock:
            return self._items.get(rid)

    def submit_verdict(self, rid: str, decision: str, reviewer: str) -> Verdict:
        if decision not in ("accept", "reject"):
            raise ReviewError(f"decision must be accept|reject, got {decision!r}")
        with self._lock:
            item = self._items.get(rid)
            if item is None:
                raise ReviewNotFound(f"id {rid} was never enqueued")
            if item.status != STATUS_PENDING:
                raise ReviewConflict(f"id {rid} already adjudicated ({item.status})")
            event = {
                "event": "verdict",
                "id": rid,
                "decision": decision,
                "reviewer": reviewer,
                "decided_at": time.time(),
            }
            self._append(event)  # write-ahead: on disk before the ack
            self._apply_verdict(event)
            return self._verdicts[rid]

    def stats(self) -> dict[str, int]:
        with self._lock:
            counts = {STATUS_PENDING: 0, STATUS_ACCEPTED: 0, STATUS_REJECTED: 0}
            for item in self._items.values():
                counts[item.status] += 1
            return counts

    def verdicts(self) -> list[Verdict]:
        with self._lock:
            return [self._verdicts[i] for i in sorted(self._verdicts)]

    def export_verdicts(self, path: str | Path) -> int:
        """Verdict JSONL in canonical id order; pure read of queue state."""
        rows = self.verdicts()
        payload = "".join(
            json.dumps(v.to_json_obj(), separators=(",", ":")) + "\n" for v in rows
        )
        atomic_write_bytes(path, payload.encode("utf-8"))
        return len(rows)


def read_verdicts(path: str | Path) -> dict[str, str]:
    """Verdict file -> {id: decision} map consumed by compose."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if raw.strip() == "":
                continue
            try:
                obj = json.loads(raw)
                rid, decision = obj["id"], obj["decision"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise WireFormatError(f"bad verdict line: {exc}", str(path), lineno) from exc
            if decision not in ("accept", "reject"):
                raise WireFormatError(f"decision must be accept|reject, got {decision!r}", str(path), lineno)
            if rid in out:
                raise WireFormatError(f"duplicate verdict for id {rid}", str(path), lineno)
            out[rid] = decision
    return out
