"""Format conformance for the standalone writer."""

import struct
from pathlib import Path

import numpy as np
import pytest

from ooda_exporter.writer import write_dump

GOLDEN = Path(__file__).parent / "data" / "golden.ooda"

# the values frozen into the shared golden file
GOLDEN_LABELS = [0, 1, -1]
GOLDEN_LOGITS = [[1.5, -0.5], [0.25, 0.125], [-2.0, 3.0]]
GOLDEN_FEATURES = [[0.5, 1.0], [2.0, -1.0], [0.0, 0.25]]


def test_reproduces_golden_bytes(tmp_path):
    """Writing the golden record values yields the exact golden file."""
    out = tmp_path / "golden.ooda"
    write_dump(
        out,
        np.array(GOLDEN_LOGITS),
        labels=np.array(GOLDEN_LABELS),
        features=np.array(GOLDEN_FEATURES),
    )
    assert out.read_bytes() == GOLDEN.read_bytes()


def test_header_fields(tmp_path):
    out = tmp_path / "x.ooda"
    write_dump(out, np.zeros((2, 3)), labels=np.array([1, 2]))
    buf = out.read_bytes()
    assert buf[:4] == b"OODA"
    version, n, classes, feat, flags = struct.unpack("<IQIII", buf[4:28])
    assert (version, n, classes, feat, flags) == (1, 2, 3, 0, 0b01)
    assert len(buf) == 28 + 2 * (4 + 12)


def test_empty_dump_is_header_only(tmp_path):
    out = tmp_path / "e.ooda"
    write_dump(out, np.zeros((0, 5)))
    assert out.stat().st_size == 28


def test_count_mismatch_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_dump(tmp_path / "b.ooda", np.zeros((2, 2)), labels=np.array([1]))


def test_primary_engine_reads_our_files(tmp_path):
    """Cross-readability with the evaluation engine, when it is installed."""
    oodbench_dataio = pytest.importorskip("oodbench.dataio")
    out = tmp_path / "cross.ooda"
    rng = np.random.default_rng(3)
    logits = rng.standard_normal((17, 4)).astype(np.float32)
    features = rng.standard_normal((17, 6)).astype(np.float32)
    labels = rng.integers(-1, 4, 17)
    write_dump(out, logits, labels=labels, features=features)
    dump = oodbench_dataio.read_dump(out)
    assert dump.n == 17
    np.testing.assert_array_equal(dump.logits, logits.astype(np.float64))
    np.testing.assert_array_equal(dump.features, features.astype(np.float64))
    np.testing.assert_array_equal(dump.labels, labels)
