"""Embedding stores, cosine retrieval, file formats, and the HTTP client."""

import http.server
import json
import math
import struct
import threading

import numpy as np
import pytest

from emitree.embedding import (
    EMB_MAGIC,
    FORMAT_BINARY,
    FORMAT_JSONL,
    EmbeddingStore,
    cosine,
    cosine_scores,
    fetch_embeddings,
    flat_mips,
    load_embeddings,
    write_embeddings,
)
from emitree.errors import DataError, EngineError, FormatError


def store_of(entries, namespace="test", dim=None):
    dim = dim if dim is not None else len(entries[0][1])
    return EmbeddingStore.from_entries(namespace, dim, entries)


class TestCosine:
    def test_hand_values(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
        assert cosine([1.0, 0.0], [1.0, 0.0]) == 1.0
        assert cosine([1.0, 0.0], [-2.0, 0.0]) == -1.0
        assert math.isclose(
            cosine([1.0, 1.0], [1.0, 0.0]), 1.0 / math.sqrt(2.0), rel_tol=1e-15
        )

    def test_scale_invariance(self):
        a, b = [0.3, -0.7, 0.2], [1.1, 0.4, -0.9]
        assert math.isclose(cosine(a, b), cosine([10 * x for x in a], b), rel_tol=1e-12)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_result_clamped_to_unit_interval(self):
        v = [0.1234567] * 50
        assert cosine(v, v) <= 1.0


class TestEmbeddingStore:
    def test_basic_accessors(self):
        store = store_of([("b", [0.0, 1.0]), ("a", [1.0, 0.0])])
        assert store.dim == 2
        assert set(store.ids) == {"a", "b"}
        assert store.get("a").dtype == np.float32
        assert store.vector64("a").dtype == np.float64
        assert "a" in store and "zzz" not in store
        assert len(store) == 2

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            store_of([("a", [1.0, 0.0]), ("a", [0.0, 1.0])])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DataError, match="expected 2"):
            store_of([("a", [1.0, 0.0]), ("b", [1.0, 0.0, 0.0])], dim=2)

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError, match="finite"):
            store_of([("a", [float("nan"), 0.0])])

    def test_zero_vector_rejected(self):
        with pytest.raises(DataError, match="zero"):
            store_of([("a", [0.0, 0.0])])

    def test_empty_store_rejected(self):
        with pytest.raises(DataError, match="at least one"):
            EmbeddingStore.from_entries("test", 2, [])

    def test_missing_id_error_names_namespace(self):
        store = store_of([("a", [1.0, 0.0])], namespace="level2")
        with pytest.raises(DataError, match="level2"):
            store.get("missing")

    def test_matrix_is_readonly(self):
        store = store_of([("a", [1.0, 0.0])])
        with pytest.raises(ValueError):
            store.matrix64[0, 0] = 5.0


class TestSubsetScoringParity:
    def test_gathered_rows_score_bitwise_like_full_matrix(self):
        # group reasoning scores gathered candidate rows; flat retrieval
        # scores the full matrix. Both must produce identical floats.
        rng = np.random.default_rng(123)
        ids = [f"id{i:03d}" for i in range(40)]
        rows = rng.standard_normal((40, 16)).astype(np.float32)
        store = store_of(list(zip(ids, rows)), dim=16)
        query = rng.standard_normal(16)

        full = cosine_scores(store.matrix64, store.norms64, query)
        subset_ids = ids[7:23]
        sub_rows, sub_norms = store.rows_for(subset_ids)
        subset = cosine_scores(sub_rows, sub_norms, query)
        np.testing.assert_array_equal(subset, full[7:23])


class TestFlatMips:
    def test_orders_by_score_then_id(self):
        store = store_of(
            [
                ("far", [0.0, 1.0]),
                ("tie-b", [1.0, 0.0]),
                ("tie-a", [1.0, 0.0]),
                ("near", [1.0, 0.1]),
            ]
        )
        ranked = flat_mips([1.0, 0.0], store, 4)
        codes = [code for code, _ in ranked]
        assert codes[:3] == ["tie-a", "tie-b", "near"]
        assert codes[3] == "far"
        scores = [score for _, score in ranked]
        assert scores == sorted(scores, reverse=True)
        assert scores[0] == scores[1] == 1.0

    def test_k_larger_than_store(self):
        store = store_of([("a", [1.0, 0.0]), ("b", [0.0, 1.0])])
        assert len(flat_mips([1.0, 1.0], store, 10)) == 2

    def test_k_below_one_rejected(self):
        store = store_of([("a", [1.0, 0.0])])
        with pytest.raises(ValueError):
            flat_mips([1.0, 0.0], store, 0)

    def test_query_dim_mismatch(self):
        store = store_of([("a", [1.0, 0.0])])
        with pytest.raises(ValueError, match="dimension"):
            flat_mips([1.0, 0.0, 0.0], store, 1)


class TestBinaryFormat:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        entries = [(f"node-{i}", rng.standard_normal(5).astype(np.float32)) for i in range(9)]
        store = store_of(entries, namespace="docs", dim=5)
        path = tmp_path / "vectors.emb"
        write_embeddings(store, path)
        assert path.read_bytes()[:4] == EMB_MAGIC
        again = load_embeddings(path, namespace="docs")
        assert again.ids == store.ids
        np.testing.assert_array_equal(again.matrix64, store.matrix64)

    def test_sniffing_picks_binary(self, tmp_path):
        store = store_of([("a", [1.0, 0.0])])
        path = tmp_path / "v.bin"
        write_embeddings(store, path, format=FORMAT_BINARY)
        assert load_embeddings(path).ids == ("a",)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.emb"
        path.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(FormatError, match="magic"):
            load_embeddings(path, format=FORMAT_BINARY)

    def test_truncated_record_reports_index(self, tmp_path):
        store = store_of([("a", [1.0, 0.0]), ("b", [0.0, 1.0])])
        path = tmp_path / "v.emb"
        write_embeddings(store, path)
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(FormatError, match="record 1"):
            load_embeddings(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        store = store_of([("a", [1.0, 0.0])])
        path = tmp_path / "v.emb"
        write_embeddings(store, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            load_embeddings(path)

    def test_unsupported_version(self, tmp_path):
        store = store_of([("a", [1.0, 0.0])])
        path = tmp_path / "v.emb"
        write_embeddings(store, path)
        data = bytearray(path.read_bytes())
        data[4] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            load_embeddings(path)


class TestJsonlFormat:
    def test_roundtrip(self, tmp_path):
        entries = [("x", [0.5, -0.25]), ("y", [1.0, 2.0])]
        store = store_of(entries)
        path = tmp_path / "v.jsonl"
        write_embeddings(store, path, format=FORMAT_JSONL)
        again = load_embeddings(path)
        assert again.ids == store.ids
        np.testing.assert_array_equal(again.matrix64, store.matrix64)

    def test_first_line_fixes_dimension(self, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text(
            json.dumps({"id": "a", "vector": [1.0, 0.0]})
            + "\n"
            + json.dumps({"id": "b", "vector": [1.0, 0.0, 0.0]})
            + "\n"
        )
        with pytest.raises(FormatError, match="line 2"):
            load_embeddings(path, format=FORMAT_JSONL)

    def test_malformed_line_number(self, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text(json.dumps({"id": "a", "vector": [1.0]}) + "\n{oops\n")
        with pytest.raises(FormatError, match="line 2"):
            load_embeddings(path, format=FORMAT_JSONL)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text("")
        with pytest.raises((FormatError, DataError)):
            load_embeddings(path, format=FORMAT_JSONL)


class _EmbedHandler(http.server.BaseHTTPRequestHandler):
    dim = 3

    def do_POST(self):
        if self.path != "/embed":
            self.send_error(404)
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        texts = payload["texts"]
        if any(t == "boom" for t in texts):
            self.send_error(500, "inference failed")
            return
        vectors = [[float(len(t)), 1.0, 0.0] for t in texts]
        body = json.dumps({"dim": self.dim, "vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def embed_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join()


class TestFetchEmbeddings:
    def test_fetches_vectors(self, embed_server):
        dim, matrix = fetch_embeddings(embed_server, ["ab", "xyz"])
        assert dim == 3
        assert matrix.dtype == np.float32
        np.testing.assert_array_equal(matrix, [[2.0, 1.0, 0.0], [3.0, 1.0, 0.0]])

    def test_server_error_raises(self, embed_server):
        with pytest.raises(EngineError):
            fetch_embeddings(embed_server, ["boom"])

    def test_unreachable_host_raises(self):
        with pytest.raises(EngineError):
            fetch_embeddings("http://127.0.0.1:9", ["a"], timeout=0.5)
