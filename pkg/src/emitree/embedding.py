"""Embedding stores, cosine scoring, exact top-k retrieval, and vector file IO.

Vectors are stored as 32-bit floats; every similarity is computed after an
upcast to 64-bit floats so scores do not depend on accumulation order quirks
of the storage type. Retrieval is exact (no approximate index): scores for
the whole candidate set are computed and sorted, descending by score with
ties broken ascending by id.

Two on-disk formats are supported:

* ``emb-binary``: magic ``EMB1``, one version byte (``0x01``), u32 dimension,
  u64 record count, then per record a u16 byte length, the UTF-8 id, and
  ``dim`` little-endian float32 components.
* ``emb-jsonl``: one ``{"id": ..., "vector": [...]}`` object per line; the
  first line fixes the dimension.
"""

from __future__ import annotations

import io
import json
import os
import struct
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np
import requests

from .errors import DataError, EngineError, FormatError
from .ioutil import open_atomic

EMB_MAGIC = b"EMB1"
EMB_VERSION = 1

FORMAT_BINARY = "emb-binary"
FORMAT_JSONL = "emb-jsonl"

_HEADER = struct.Struct("<4sBIQ")
_ID_LEN = struct.Struct("<H")


def as_vector(values: Sequence[float] | np.ndarray, *, context: str = "vector") -> np.ndarray:
    """Validate and return a 1-d float64 copy of ``values``."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{context} must be a 1-d array with at least one component")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{context} has non-finite components")
    return arr


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity in 64-bit arithmetic, clamped to ``[-1, 1]``."""
    va = as_vector(a, context="left vector")
    vb = as_vector(b, context="right vector")
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    return float(min(1.0, max(-1.0, float(va @ vb) / (na * nb))))


def cosine_scores(rows64: np.ndarray, norms64: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine of ``query`` against each row, shared by every retrieval path.

    Each dot product is evaluated row by row rather than as one matrix-vector
    product: batched BLAS kernels pick accumulation lanes by row position, so
    the same row can round differently depending on which other rows share the
    batch. Per-row evaluation makes every score a function of that row and the
    query alone, which is what lets hierarchical and flat retrieval agree
    bitwise on shared candidates. Candidate sets are small enough here that
    the batched product buys nothing.
    """
    qnorm = float(np.linalg.norm(query))
    if qnorm == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    dots = np.empty(rows64.shape[0], dtype=np.float64)
    for i in range(rows64.shape[0]):
        dots[i] = rows64[i] @ query
    return np.clip(dots / (norms64 * qnorm), -1.0, 1.0)


class EmbeddingStore:
    """Immutable id-to-vector table with a fixed dimension and a namespace."""

    def __init__(self, namespace: str, dim: int, ids: Sequence[str], matrix: np.ndarray):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.namespace = namespace
        self.dim = dim
        self._ids = tuple(ids)
        self._index = {id_: row for row, id_ in enumerate(self._ids)}
        self._matrix32 = matrix.astype(np.float32, copy=True)
        self._matrix64 = self._matrix32.astype(np.float64)
        # Per-row norms for the same reason cosine_scores dots row by row:
        # axis reductions over a batch may round a row differently than the
        # row alone, and norms must be reproducible across store layouts.
        self._norms64 = np.sqrt(
            np.array([row @ row for row in self._matrix64], dtype=np.float64)
        )
        for arr in (self._matrix32, self._matrix64, self._norms64):
            arr.setflags(write=False)

    @classmethod
    def from_entries(
        cls,
        namespace: str,
        dim: int,
        entries: Iterable[tuple[str, Sequence[float] | np.ndarray]],
    ) -> "EmbeddingStore":
        """Build a store, validating ids, dimensions, finiteness, and norms."""
        ids: list[str] = []
        seen: set[str] = set()
        rows: list[np.ndarray] = []
        for id_, values in entries:
            if not isinstance(id_, str) or not id_:
                raise DataError(f"embedding id must be a non-empty string, got {id_!r}")
            if id_ in seen:
                raise DataError(f"duplicate embedding id {id_!r} in namespace {namespace!r}")
            row = np.asarray(values, dtype=np.float32)
            if row.ndim != 1 or row.size != dim:
                raise DataError(
                    f"embedding {id_!r} has {row.size} components, expected {dim}"
                )
            if not np.all(np.isfinite(row)):
                raise DataError(f"embedding {id_!r} has non-finite components")
            if float(np.linalg.norm(row.astype(np.float64))) == 0.0:
                raise DataError(f"embedding {id_!r} has zero norm")
            seen.add(id_)
            ids.append(id_)
            rows.append(row)
        if not rows:
            raise DataError(
                f"namespace {namespace!r} needs at least one embedding"
            )
        return cls(namespace, dim, ids, np.vstack(rows))

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix64(self) -> np.ndarray:
        return self._matrix64

    @property
    def norms64(self) -> np.ndarray:
        return self._norms64

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self._index

    def get(self, id_: str) -> np.ndarray:
        """The stored float32 vector for ``id_``."""
        row = self._row(id_)
        return self._matrix32[row]

    def vector64(self, id_: str) -> np.ndarray:
        row = self._row(id_)
        return self._matrix64[row]

    def _row(self, id_: str) -> int:
        try:
            return self._index[id_]
        except KeyError:
            raise DataError(
                f"no embedding for id {id_!r} in namespace {self.namespace!r}"
            ) from None

    def rows_for(self, ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Gathered float64 rows and their norms for a candidate subset."""
        idx = np.asarray([self._row(id_) for id_ in ids], dtype=np.intp)
        return self._matrix64[idx], self._norms64[idx]

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for row, id_ in enumerate(self._ids):
            yield id_, self._matrix32[row]


def flat_mips(
    query: Sequence[float] | np.ndarray, store: EmbeddingStore, k: int
) -> list[tuple[str, float]]:
    """Exact top-k by cosine over the whole store.

    Returns ``min(k, len(store))`` pairs sorted descending by score; equal
    scores are ordered ascending by id.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(store) == 0:
        raise ValueError("cannot rank against an empty store")
    q = as_vector(query, context="query")
    if q.size != store.dim:
        raise ValueError(f"dimension mismatch: query {q.size} vs store {store.dim}")
    scores = cosine_scores(store.matrix64, store.norms64, q)
    order = sorted(range(len(store)), key=lambda i: (-scores[i], store.ids[i]))
    return [(store.ids[i], float(scores[i])) for i in order[:k]]


Source = Union[str, os.PathLike]


def write_embeddings(store: EmbeddingStore, path: Source, format: str = FORMAT_BINARY) -> None:
    """Write a store to disk in the requested format (atomically)."""
    if format == FORMAT_BINARY:
        _write_binary(store, path)
    elif format == FORMAT_JSONL:
        _write_jsonl(store, path)
    else:
        raise ValueError(f"unknown embedding format {format!r}")


def load_embeddings(path: Source, format: str | None = None, namespace: str = "") -> EmbeddingStore:
    """Load a store from disk.

    When ``format`` is ``None`` the file is sniffed: a leading ``EMB1`` magic
    selects the binary format, anything else is treated as JSON lines. The
    namespace is a load-time label, not part of the file.
    """
    if format is None:
        with open(path, "rb") as handle:
            format = FORMAT_BINARY if handle.read(4) == EMB_MAGIC else FORMAT_JSONL
    if format == FORMAT_BINARY:
        return _load_binary(path, namespace)
    if format == FORMAT_JSONL:
        return _load_jsonl(path, namespace)
    raise ValueError(f"unknown embedding format {format!r}")


def _write_binary(store: EmbeddingStore, path: Source) -> None:
    with open_atomic(path, "wb") as handle:
        handle.write(_HEADER.pack(EMB_MAGIC, EMB_VERSION, store.dim, len(store)))
        for id_, row in store.items():
            encoded = id_.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise DataError(f"id {id_!r} exceeds the 65535-byte id limit")
            handle.write(_ID_LEN.pack(len(encoded)))
            handle.write(encoded)
            handle.write(row.astype("<f4").tobytes())


def _load_binary(path: Source, namespace: str) -> EmbeddingStore:
    with open(path, "rb") as handle:
        header = handle.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != EMB_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {EMB_MAGIC!r}")
        if version != EMB_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dim < 1:
            raise FormatError(f"{path}: dimension must be >= 1, got {dim}")

        def read_exact(n: int, record: int, what: str) -> bytes:
            data = handle.read(n)
            if len(data) != n:
                raise FormatError(f"{path}: truncated {what} in record {record}")
            return data

        entries: list[tuple[str, np.ndarray]] = []
        for record in range(count):
            (id_len,) = _ID_LEN.unpack(read_exact(_ID_LEN.size, record, "id length"))
            id_ = read_exact(id_len, record, "id").decode("utf-8")
            raw = read_exact(dim * 4, record, "vector")
            entries.append((id_, np.frombuffer(raw, dtype="<f4")))
        if handle.read(1):
            raise FormatError(f"{path}: trailing data after {count} records")
    return EmbeddingStore.from_entries(namespace, dim, entries)


def _write_jsonl(store: EmbeddingStore, path: Source) -> None:
    with open_atomic(path) as handle:
        for id_, row in store.items():
            record = {"id": id_, "vector": [float(x) for x in row]}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def _load_jsonl(path: Source, namespace: str) -> EmbeddingStore:
    entries: list[tuple[str, np.ndarray]] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {line_no}: malformed JSON ({exc.msg})") from None
            if not isinstance(record, dict) or "id" not in record or "vector" not in record:
                raise FormatError(f"{path}: line {line_no}: expected an object with id and vector")
            vector = record["vector"]
            if not isinstance(vector, list) or not vector:
                raise FormatError(f"{path}: line {line_no}: vector must be a non-empty array")
            if dim is None:
                dim = len(vector)
            elif len(vector) != dim:
                raise FormatError(
                    f"{path}: line {line_no}: vector has {len(vector)} components, expected {dim}"
                )
            entries.append((record["id"], np.asarray(vector, dtype=np.float32)))
    if dim is None:
        raise FormatError(f"{path}: no records")
    return EmbeddingStore.from_entries(namespace, dim, entries)


def fetch_embeddings(base_url: str, texts: Sequence[str], timeout: float = 30.0) -> tuple[int, np.ndarray]:
    """Request embeddings from a provider speaking the ``/embed`` protocol.

    Posts ``{"texts": [...]}`` to ``<base_url>/embed`` and returns the
    response dimension together with a float32 matrix whose rows follow the
    request order.
    """
    url = base_url.rstrip("/") + "/embed"
    try:
        response = requests.post(url, json={"texts": list(texts)}, timeout=timeout)
    except requests.RequestException as exc:
        raise EngineError(f"embedding provider unreachable: {exc}") from exc
    if response.status_code != 200:
        raise EngineError(f"embedding provider returned {response.status_code}: {response.text[:200]}")
    payload = response.json()
    if not isinstance(payload, dict) or "dim" not in payload or "vectors" not in payload:
        raise EngineError("embedding provider response is missing dim or vectors")
    dim = payload["dim"]
    vectors = payload["vectors"]
    if len(vectors) != len(texts):
        raise EngineError(
            f"embedding provider returned {len(vectors)} vectors for {len(texts)} texts"
        )
    matrix = np.asarray(vectors, dtype=np.float32)
    if matrix.size and (matrix.ndim != 2 or matrix.shape[1] != dim):
        raise EngineError("embedding provider vectors disagree with the declared dimension")
    return int(dim), matrix.reshape((len(vectors), dim))
