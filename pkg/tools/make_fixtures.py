"""Regenerate the committed test fixtures.

Run from the repository root:

    python tools/make_fixtures.py

Produces tests/data/golden.ooda (handcrafted interchange bytes that pin the
on-disk format) and tests/data/golden_eval/ (a tiny checkpoint, dumps, and
the frozen evaluation report used by the exact-match CLI test).
"""

from __future__ import annotations

import json
import struct
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"

sys.path.insert(0, str(ROOT / "src"))

from oodbench import cli  # noqa: E402
from oodbench.dataio import Dataset, SyntheticSpec, axis_means, gen_blobs, gen_noise, write_dump  # noqa: E402


# Golden record values chosen to be exactly representable as float32 so that
# byte-level expectations in tests stay trivial.
GOLDEN_LABELS = [0, 1, -1]
GOLDEN_LOGITS = [[1.5, -0.5], [0.25, 0.125], [-2.0, 3.0]]
GOLDEN_FEATURES = [[0.5, 1.0], [2.0, -1.0], [0.0, 0.25]]


def golden_bytes() -> bytes:
    parts = [b"OODA", struct.pack("<IQIII", 1, 3, 2, 2, 0b11)]
    for label, logits, features in zip(GOLDEN_LABELS, GOLDEN_LOGITS, GOLDEN_FEATURES):
        parts.append(struct.pack("<i", label))
        parts.append(struct.pack("<2f", *logits))
        parts.append(struct.pack("<2f", *features))
    return b"".join(parts)


def make_golden_dump():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "golden.ooda").write_bytes(golden_bytes())
    print(f"wrote {DATA / 'golden.ooda'}")


def make_golden_eval():
    outdir = DATA / "golden_eval"
    outdir.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(
        kind="blobs", dim=4, n_classes=2, means=axis_means(4, 2, 3.0), sigma=1.0
    )
    write_dump(gen_blobs(spec, 120, seed=5).to_dump(), outdir / "train.ooda")
    write_dump(gen_blobs(spec, 60, seed=6).to_dump(), outdir / "test.ooda")
    write_dump(gen_noise(4, 60, seed=7).to_dump(), outdir / "noise.ooda")

    rc = cli.main(
        [
            "train",
            "--train-dump", str(outdir / "train.ooda"),
            "--test-dump", str(outdir / "test.ooda"),
            "--epochs", "16",
            "--checkpoint-every", "4",
            "--hidden", "8",
            "--lr", "0.1",
            "--init-scale", "1.0",
            "--seed", "3",
            "--out", str(outdir / "run"),
        ]
    )
    assert rc == 0, rc
    best = outdir / "run" / "ckpt_best.oodc"
    best.replace(outdir / "checkpoint.oodc")
    rc = cli.main(
        [
            "evaluate",
            "--checkpoint", str(outdir / "checkpoint.oodc"),
            "--supervisor", "baseline",
            "--inlier-dump", str(outdir / "test.ooda"),
            "--ood", f"noise={outdir / 'noise.ooda'}",
            "--out", str(outdir / "run"),
        ]
    )
    assert rc == 0, rc
    report = (outdir / "run" / "report_baseline_noise.json").read_text()
    (outdir / "expected_report.json").write_text(report)
    # only the inputs and the frozen expectation are committed
    for p in sorted((outdir / "run").glob("*")):
        p.unlink()
    (outdir / "run").rmdir()
    print(f"wrote fixtures under {outdir}")
    print(report)


if __name__ == "__main__":
    make_golden_dump()
    make_golden_eval()
