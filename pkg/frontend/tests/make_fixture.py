#!/usr/bin/env python3
"""Seed a review-round fixture for the UI integration test.

Writes into the directory given as argv[1]:
    gen/*.png       eight tiny images
    syn.jsonl       raw synthetic manifest (8 records)
    clean.jsonl     filtered manifest (the 3 cascade-accepted records)
    decisions.jsonl 3 accepts + 5 borderline
Prints the 5 borderline ids (oldest-first queue order = ascending id).
"""

import sys
from pathlib import Path

from PIL import Image

from synthengine.cascade import FilterDecision, write_decisions
from synthengine.records import ControlSignal, SampleRecord, build_manifest, hash_content, write_manifest


def main() -> None:
    root = Path(sys.argv[1])
    gen = root / "gen"
    gen.mkdir(parents=True, exist_ok=True)

    records = []
    for i in range(8):
        path = gen / f"sample-{i}.png"
        Image.new("RGB", (64, 96), ((i * 31) % 256, (i * 57) % 256, 180)).save(path)
        rid = hash_content(path.read_bytes())
        records.append(
            SampleRecord(
                id=rid,
                origin="synthetic",
                scene_index=i + 1,
                variation_index=1,
                control=ControlSignal(prompt="a person", pose_ref=None, edge_ref=None, seed=i),
                image_path=f"gen/{path.name}",
            )
        )

    manifest = build_manifest("pose", records)
    write_manifest(manifest, root / "syn.jsonl")

    accepted = manifest.records[:3]
    borderline = manifest.records[3:]
    write_manifest(build_manifest("pose", accepted), root / "clean.jsonl")

    decisions = [
        FilterDecision(id=r.id, s_sem=1.0, s_struct=None, stage="passed", routing="accept")
        for r in accepted
    ]
    decisions += [
        FilterDecision(id=r.id, s_sem=0.2, s_struct=None, stage="semantic", routing="borderline")
        for r in borderline
    ]
    write_decisions(decisions, root / "decisions.jsonl")

    for r in borderline:
        print(r.id)


if __name__ == "__main__":
    main()
