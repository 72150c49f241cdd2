"""Bundled stub scorer adapter: deterministic fake embeddings/detections.

Speaks the engine's stdio adapter protocol without any model dependency.
Useful for wiring tests and as a reference adapter implementation:

    engine ingest --mode embed --manifest m.jsonl \\
        --adapter "python -m synthengine.stub_scorer --mode embed --dim 8"

Fault-injection flags (--drop, --extra, --fail) exist so protocol error
handling can be exercised end to end.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys


def _hash_floats(key: str, n: int, lo: float = -1.0, hi: float = 1.0) -> list[float]:
    """n floats in [lo, hi), derived from a keyed hash; stable across runs."""
    out: list[float] = []
    counter = 0
    while len(out) < n:
        digest = hashlib.blake2b(f"{key}:{counter}".encode(), digest_size=32).digest()
        for i in range(0, 32, 8):
            if len(out) >= n:
                break
            word = int.from_bytes(digest[i : i + 8], "little")
            out.append(lo + (hi - lo) * (word / 2**64))
        counter += 1
    return out


def _embedding_line(rid: str, dim: int, mode: str) -> str:
    if mode == "zeros":
        vec = [0.0] * dim
    else:
        vec = _hash_floats(rid, dim)
    return json.dumps({"id": rid, "dim": dim, "vec": vec}, separators=(",", ":"))


def _detection_line(rid: str) -> str:
    w, h = 640, 960
    u = _hash_floats(rid, 4, 0.0, 1.0)
    bw = 64.0 + u[0] * (w / 2 - 64.0)
    bh = 64.0 + u[1] * (h / 2 - 64.0)
    bx = u[2] * (w - bw)
    by = u[3] * (h - bh)
    confs = _hash_floats(rid + ":kpt", 17, 0.0, 1.0)
    kpts = [[round(bx + bw / 2, 2), round(by + bh / 2, 2), round(c, 4)] for c in confs]
    person = {
        "box": [round(bx, 2), round(by, 2), round(bw, 2), round(bh, 2)],
        "det_score": round(0.5 + u[0] / 2, 4),
        "keypoints": kpts,
    }
    return json.dumps(
        {"id": rid, "image_w": w, "image_h": h, "persons": [person]},
        separators=(",", ":"),
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="stub scorer adapter (stdio protocol)")
    parser.add_argument("--mode", choices=("embed", "detect"), required=True)
    parser.add_argument("--dim", type=int, default=8, help="embedding dimension")
    parser.add_argument("--vec", choices=("zeros", "hash"), default="hash")
    parser.add_argument("--drop", type=int, default=0, help="omit the last N requested ids")
    parser.add_argument("--extra", type=int, default=0, help="emit N records for unrequested ids")
    parser.add_argument("--fail", action="store_true", help="exit nonzero after reading stdin")
    args = parser.parse_args(argv)

    requests = []
    for raw in sys.stdin:
        raw = raw.strip()
        if not raw:
            continue
        req = json.loads(raw)
        requests.append(req["id"])

    if args.fail:
        print("stub adapter: injected failure", file=sys.stderr)
        return 3

    emit = requests[: len(requests) - args.drop] if args.drop else requests
    for i in range(args.extra):
        emit.append(hashlib.sha256(f"extra:{i}".encode()).hexdigest())

    for rid in emit:
        if args.mode == "embed":
            print(_embedding_line(rid, args.dim, args.vec))
        else:
            print(_detection_line(rid))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
