"""Acceptance check for the exporter: file-format roundtrip and HTTP protocol.

The roundtrip half deliberately loads the exported file with the primary
package's reader. The two packages share no code, so a successful load proves
the on-disk format itself is the interface. Expected values are structural
(dim, count, cosine of identical texts) and need no frozen numbers beyond the
1.0 cosine of two identical inputs under a deterministic encoder.

Run with ``pytest -s`` to see the report line.
"""

import json

from fastapi.testclient import TestClient

from emitree.embedding import cosine, load_embeddings

from embexport.encoders import HashEncoder
from embexport.jobs import ExportJob, run_export
from embexport.server import create_app

TEXTS = [
    ("c-01", "oilseed and grain farming"),
    ("c-02", "vegetable and melon farming"),
    ("c-03", "scheduled passenger air transportation"),
    ("c-04", "software publishers"),
    ("c-05", "iron ore mining"),
    ("c-06", "commercial banking"),
    ("c-07", "scheduled passenger air transportation"),
    ("c-08", "drycleaning and laundry services"),
    ("c-09", "breweries"),
    ("c-10", "semiconductor and related device manufacturing"),
]
DUPLICATE_PAIR = ("c-03", "c-07")


def _report(num, label, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} acceptance {num} ({label}): {detail}")
    assert ok, detail


def test_9_exporter_roundtrip(tmp_path):
    texts_path = tmp_path / "texts.jsonl"
    texts_path.write_text(
        "".join(json.dumps({"id": id_, "text": text}) + "\n" for id_, text in TEXTS)
    )
    out = tmp_path / "level6.emb"
    summary = run_export(
        ExportJob(texts_path=str(texts_path), output_path=str(out), model="hash:64")
    )

    store = load_embeddings(out, namespace="level6")
    dims_match = store.dim == 64 == summary.dim
    count_matches = len(store) == len(TEXTS) == summary.count
    order_kept = store.ids == tuple(id_ for id_, _ in TEXTS)

    first, second = DUPLICATE_PAIR
    similarity = cosine(store.vector64(first), store.vector64(second))
    identical_ok = abs(similarity - 1.0) <= 1e-6

    client = TestClient(create_app(HashEncoder(dim=64)))
    pair = client.post("/embed", json={"texts": ["grain farming", "iron ore mining"]})
    pair_body = pair.json() if pair.status_code == 200 else {}
    pair_ok = (
        pair.status_code == 200
        and pair_body.get("dim") == 64
        and len(pair_body.get("vectors", [])) == 2
        and all(len(vec) == 64 for vec in pair_body.get("vectors", []))
    )
    empty = client.post("/embed", json={"texts": []})
    empty_ok = empty.status_code == 200 and empty.json() == {"dim": 64, "vectors": []}
    malformed = client.post(
        "/embed", content=b"{oops", headers={"content-type": "application/json"}
    )
    malformed_ok = malformed.status_code == 400

    ok = all(
        [dims_match, count_matches, order_kept, identical_ok, pair_ok, empty_ok, malformed_ok]
    )
    _report(
        9,
        "exporter roundtrip",
        ok,
        f"primary loader read {len(store)} vectors of dim {store.dim} in export order; "
        f"identical texts cosine {similarity:.9f}; /embed protocol examples "
        f"{pair.status_code}/{empty.status_code}/{malformed.status_code} "
        "(pair, empty list, malformed JSON)",
    )
