"""Texts-file parsing and end-to-end export jobs."""

import json
import struct

import numpy as np
import pytest

import embexport.jobs as jobs_mod
from embexport.errors import ExportError
from embexport.formats import FORMAT_JSONL
from embexport.jobs import ExportJob, load_texts, run_export


def write_texts(path, records):
    path.write_text("".join(json.dumps(record) + "\n" for record in records))
    return path


def parse_binary(raw):
    """Independent struct-level reader used only by these tests."""
    magic, version, dim, count = struct.unpack_from("<4sBIQ", raw, 0)
    assert magic == b"EMB1" and version == 1
    offset = struct.calcsize("<4sBIQ")
    entries = []
    for _ in range(count):
        (id_length,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        id_ = raw[offset : offset + id_length].decode("utf-8")
        offset += id_length
        vector = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        entries.append((id_, vector))
    assert offset == len(raw)
    return dim, entries


class TestLoadTexts:
    def test_order_and_blank_lines(self, tmp_path):
        path = tmp_path / "texts.jsonl"
        path.write_text(
            '{"id": "t-2", "text": "beta"}\n\n{"id": "t-1", "text": "alpha"}\n'
        )
        assert load_texts(path) == [("t-2", "beta"), ("t-1", "alpha")]

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "texts.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{broken\n')
        with pytest.raises(ExportError, match="line 2: invalid JSON"):
            load_texts(path)

    def test_non_object_line(self, tmp_path):
        path = write_texts(tmp_path / "texts.jsonl", [["id", "text"]])
        with pytest.raises(ExportError, match="line 1: expected an object"):
            load_texts(path)

    def test_missing_or_empty_id(self, tmp_path):
        path = write_texts(tmp_path / "a.jsonl", [{"text": "x"}])
        with pytest.raises(ExportError, match="'id' must be a non-empty string"):
            load_texts(path)
        path = write_texts(tmp_path / "b.jsonl", [{"id": "", "text": "x"}])
        with pytest.raises(ExportError, match="'id' must be a non-empty string"):
            load_texts(path)

    def test_text_must_be_string(self, tmp_path):
        path = write_texts(tmp_path / "texts.jsonl", [{"id": "a", "text": 4}])
        with pytest.raises(ExportError, match="'text' must be a string"):
            load_texts(path)

    def test_duplicate_id_names_line(self, tmp_path):
        path = write_texts(
            tmp_path / "texts.jsonl",
            [{"id": "a", "text": "x"}, {"id": "a", "text": "y"}],
        )
        with pytest.raises(ExportError, match="line 2: duplicate id 'a'"):
            load_texts(path)


class TestJobValidation:
    def test_format_and_batch_size(self, tmp_path):
        with pytest.raises(ExportError, match="unknown embedding format"):
            ExportJob(texts_path="t", output_path="o", format="parquet")
        with pytest.raises(ExportError, match="batch size"):
            ExportJob(texts_path="t", output_path="o", batch_size=0)


class TestRunExport:
    RECORDS = [
        {"id": "n-1", "text": "oilseed and grain farming"},
        {"id": "n-2", "text": "scheduled passenger air transportation"},
        {"id": "n-3", "text": "software publishers"},
        {"id": "n-4", "text": "oilseed and grain farming"},
        {"id": "n-5", "text": "iron ore mining"},
    ]

    def test_binary_export_preserves_order(self, tmp_path):
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS)
        out = tmp_path / "vectors.emb"
        summary = run_export(ExportJob(texts_path=str(texts), output_path=str(out), model="hash:16"))
        assert (summary.count, summary.dim, summary.empty_texts) == (5, 16, 0)
        dim, entries = parse_binary(out.read_bytes())
        assert dim == 16
        assert [id_ for id_, _ in entries] == ["n-1", "n-2", "n-3", "n-4", "n-5"]
        by_id = dict(entries)
        np.testing.assert_array_equal(by_id["n-1"], by_id["n-4"])
        for _, vector in entries:
            assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-6)

    def test_jsonl_export(self, tmp_path):
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS[:2])
        out = tmp_path / "vectors.jsonl"
        run_export(ExportJob(
            texts_path=str(texts), output_path=str(out), model="hash:8", format=FORMAT_JSONL))
        lines = [json.loads(line) for line in out.read_text().splitlines()]
        assert [line["id"] for line in lines] == ["n-1", "n-2"]
        assert all(len(line["vector"]) == 8 for line in lines)

    def test_batch_size_does_not_change_bytes(self, tmp_path):
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS)
        small = tmp_path / "small.emb"
        large = tmp_path / "large.emb"
        run_export(ExportJob(texts_path=str(texts), output_path=str(small), batch_size=1))
        run_export(ExportJob(texts_path=str(texts), output_path=str(large), batch_size=64))
        assert small.read_bytes() == large.read_bytes()

    def test_empty_texts_warn_but_export(self, tmp_path):
        records = [{"id": "a", "text": "mining"}, {"id": "b", "text": "  "}]
        texts = write_texts(tmp_path / "texts.jsonl", records)
        out = tmp_path / "vectors.emb"
        with pytest.warns(UserWarning, match="1 empty texts embedded as-is"):
            summary = run_export(ExportJob(texts_path=str(texts), output_path=str(out)))
        assert summary.empty_texts == 1
        assert summary.count == 2

    def test_no_records_is_an_error(self, tmp_path):
        texts = tmp_path / "texts.jsonl"
        texts.write_text("\n")
        with pytest.raises(ExportError, match="has no records"):
            run_export(ExportJob(texts_path=str(texts), output_path=str(tmp_path / "x.emb")))

    def test_normalize_rescales_stub_vectors(self, tmp_path, monkeypatch):
        class Stub:
            dim = 2

            def encode(self, texts):
                return np.tile(np.array([[3.0, 4.0]], dtype=np.float32), (len(texts), 1))

        monkeypatch.setattr(jobs_mod, "resolve_encoder", lambda model: Stub())
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS[:1])
        normalized = tmp_path / "unit.emb"
        raw = tmp_path / "raw.emb"
        run_export(ExportJob(texts_path=str(texts), output_path=str(normalized)))
        run_export(ExportJob(texts_path=str(texts), output_path=str(raw), normalize=False))
        _, unit_entries = parse_binary(normalized.read_bytes())
        _, raw_entries = parse_binary(raw.read_bytes())
        np.testing.assert_allclose(unit_entries[0][1], [0.6, 0.8], atol=1e-7)
        np.testing.assert_array_equal(raw_entries[0][1], [3.0, 4.0])

    def test_zero_vector_cannot_be_normalized(self, tmp_path, monkeypatch):
        class Stub:
            dim = 2

            def encode(self, texts):
                return np.zeros((len(texts), 2), dtype=np.float32)

        monkeypatch.setattr(jobs_mod, "resolve_encoder", lambda model: Stub())
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS[:1])
        with pytest.raises(ExportError, match="zero vector for id 'n-1'"):
            run_export(ExportJob(texts_path=str(texts), output_path=str(tmp_path / "x.emb")))

    def test_misshapen_encoder_output_rejected(self, tmp_path, monkeypatch):
        class Stub:
            dim = 4

            def encode(self, texts):
                return np.ones((len(texts), 3), dtype=np.float32)

        monkeypatch.setattr(jobs_mod, "resolve_encoder", lambda model: Stub())
        texts = write_texts(tmp_path / "texts.jsonl", self.RECORDS[:2])
        with pytest.raises(ExportError, match="encoder returned shape"):
            run_export(ExportJob(texts_path=str(texts), output_path=str(tmp_path / "x.emb")))
