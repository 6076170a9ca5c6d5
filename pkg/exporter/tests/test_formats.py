"""File writers checked against hand-assembled bytes.

The binary layout is frozen by hand here, not read back through any
library: magic "EMB1", version 1, little-endian u32 dim and u64 count,
then per record a u16 id length, the id bytes, and dim float32 values.
"""

import json
import struct

import numpy as np
import pytest

from embexport.errors import ExportError
from embexport.formats import FORMAT_JSONL, write_embedding_file

ENTRIES = [
    ("a", np.array([1.0, 0.0], dtype=np.float32)),
    ("bb", np.array([0.0, 0.5], dtype=np.float32)),
]


class TestBinary:
    def test_exact_bytes(self, tmp_path):
        path = tmp_path / "two.emb"
        write_embedding_file(path, ENTRIES, dim=2)
        expected = (
            b"EMB1"
            + bytes([1])
            + (2).to_bytes(4, "little")
            + (2).to_bytes(8, "little")
            + (1).to_bytes(2, "little")
            + b"a"
            + struct.pack("<2f", 1.0, 0.0)
            + (2).to_bytes(2, "little")
            + b"bb"
            + struct.pack("<2f", 0.0, 0.5)
        )
        assert path.read_bytes() == expected

    def test_multibyte_id_length_counts_bytes(self, tmp_path):
        path = tmp_path / "utf8.emb"
        write_embedding_file(path, [("ær", np.array([2.0], dtype=np.float32))], dim=1)
        raw = path.read_bytes()
        id_length = int.from_bytes(raw[17:19], "little")
        assert id_length == len("ær".encode("utf-8")) == 3
        assert raw[19:22] == "ær".encode("utf-8")


class TestJsonl:
    def test_exact_lines(self, tmp_path):
        path = tmp_path / "two.jsonl"
        write_embedding_file(path, ENTRIES, dim=2, format=FORMAT_JSONL)
        lines = path.read_text().splitlines()
        assert lines == [
            '{"id": "a", "vector": [1.0, 0.0]}',
            '{"id": "bb", "vector": [0.0, 0.5]}',
        ]

    def test_components_survive_json_round_trip(self, tmp_path):
        # every float32 is exactly representable as a JSON double, so
        # parsing the line back and casting must reproduce the bits
        rng = np.random.default_rng(5)
        vector = rng.standard_normal(7).astype(np.float32)
        path = tmp_path / "one.jsonl"
        write_embedding_file(path, [("x", vector)], dim=7, format=FORMAT_JSONL)
        parsed = json.loads(path.read_text())
        np.testing.assert_array_equal(np.array(parsed["vector"], dtype=np.float32), vector)


class TestValidation:
    def test_unknown_format(self, tmp_path):
        with pytest.raises(ExportError, match="unknown embedding format"):
            write_embedding_file(tmp_path / "x", ENTRIES, dim=2, format="csv")

    def test_dimension_mismatch_names_record(self, tmp_path):
        bad = [("a", np.array([1.0, 2.0], dtype=np.float32)), ("b", np.array([1.0], dtype=np.float32))]
        with pytest.raises(ExportError, match="record 1 \\('b'\\) has 1 components"):
            write_embedding_file(tmp_path / "x.emb", bad, dim=2)

    def test_empty_id_rejected(self, tmp_path):
        with pytest.raises(ExportError, match="empty id"):
            write_embedding_file(tmp_path / "x.emb", [("", np.ones(2, dtype=np.float32))], dim=2)

    def test_non_finite_rejected(self, tmp_path):
        with pytest.raises(ExportError, match="non-finite"):
            write_embedding_file(
                tmp_path / "x.emb", [("a", np.array([np.nan, 1.0]))], dim=2
            )

    def test_oversized_id_rejected(self, tmp_path):
        with pytest.raises(ExportError, match="exceeds"):
            write_embedding_file(
                tmp_path / "x.emb", [("i" * 70000, np.ones(1, dtype=np.float32))], dim=1
            )

    def test_failed_write_leaves_no_partial_file(self, tmp_path):
        target = tmp_path / "partial.emb"
        bad = [("a", np.ones(2, dtype=np.float32)), ("b", np.ones(3, dtype=np.float32))]
        with pytest.raises(ExportError):
            write_embedding_file(target, bad, dim=2)
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []
