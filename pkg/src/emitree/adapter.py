"""Trainable linear adapters over frozen embeddings.

An adapter is a square matrix ``W`` applied to both sides of a cosine
similarity, so retrieval in the adapted space scores ``cos(W q, W c)``. It is
trained with an in-batch-negatives ranking loss: for a batch of n aligned
(query, document) pairs,

    loss = -(1/n) * sum_i log( exp(s * cos(Wq_i, Wd_i))
                               / sum_j exp(s * cos(Wq_i, Wd_j)) )

where ``s`` is a fixed similarity scale. Optimization is plain gradient
descent on the analytic gradient; a central finite-difference checker is
provided as an independent cross-check of that gradient.
"""

from __future__ import annotations

import os
import struct
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import EmbeddingStore
from .errors import DataError, EngineError, FormatError
from .ioutil import open_atomic
from .rng import Splitmix64

ADAPTER_MAGIC = b"ADP1"
ADAPTER_VERSION = 1

INIT_NOISE_SIGMA = 0.01

_ADP_HEADER = struct.Struct("<4sBI")
_ADP_NS_LEN = struct.Struct("<H")


@dataclass(frozen=True)
class Adapter:
    """A square linear map over one embedding namespace."""

    matrix: np.ndarray
    namespace: str = ""

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise ValueError(f"adapter matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("adapter matrix has non-finite entries")
        matrix = matrix.copy()
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vector: Sequence[float] | np.ndarray) -> np.ndarray:
        """``W v`` in 64-bit arithmetic."""
        v = np.asarray(vector, dtype=np.float64)
        if v.ndim != 1 or v.size != self.dim:
            raise ValueError(f"expected a vector of dimension {self.dim}, got shape {v.shape}")
        return self.matrix @ v


def identity_adapter(dim: int, namespace: str = "") -> Adapter:
    return Adapter(matrix=np.eye(dim), namespace=namespace)


def _stack(vectors: Sequence[Sequence[float] | np.ndarray], what: str) -> np.ndarray:
    if len(vectors) == 0:
        raise ValueError(f"{what} batch is empty")
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"{what} batch must be a sequence of equal-length vectors")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{what} batch has non-finite components")
    return matrix


def _row_norms(matrix: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"{what} batch contains a zero-norm vector")
    return norms


def _softmax_ranking_loss(scores: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of each row against its diagonal; also the softmax."""
    n = scores.shape[0]
    shift = scores.max(axis=1, keepdims=True)
    exp = np.exp(scores - shift)
    total = exp.sum(axis=1)
    loss = float(np.mean(np.log(total) + shift.ravel() - np.diag(scores)))
    return loss, exp / total[:, None]


def mnr_loss(
    queries: Sequence[Sequence[float] | np.ndarray],
    documents: Sequence[Sequence[float] | np.ndarray],
    scale: float = 1.0,
) -> float:
    """Ranking loss over already-embedded pairs (no adapter involved).

    A batch of one pair has no negatives and scores exactly zero. Duplicate
    document vectors act as false negatives, so they trigger a warning.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    q = _stack(queries, "query")
    d = _stack(documents, "document")
    if q.shape != d.shape:
        raise ValueError(f"query batch {q.shape} and document batch {d.shape} disagree")
    if len(np.unique(d, axis=0)) < d.shape[0]:
        warnings.warn(
            "duplicate document vectors in batch act as false negatives",
            stacklevel=2,
        )
    qn = _row_norms(q, "query")
    dn = _row_norms(d, "document")
    cosines = (q @ d.T) / np.outer(qn, dn)
    loss, _ = _softmax_ranking_loss(scale * cosines)
    return loss


def _adapted_loss_and_gradient(
    q: np.ndarray, d: np.ndarray, w: np.ndarray, scale: float
) -> tuple[float, np.ndarray]:
    """Loss and ``d loss / d W`` for base batches ``q``, ``d`` under adapter ``w``."""
    u = q @ w.T
    v = d @ w.T
    un = _row_norms(u, "adapted query")
    vn = _row_norms(v, "adapted document")
    inv = 1.0 / np.outer(un, vn)
    cosines = (u @ v.T) * inv
    loss, softmax = _softmax_ranking_loss(scale * cosines)
    n = q.shape[0]
    coeff = (softmax - np.eye(n)) / n
    weighted = coeff * inv
    row_scale = (coeff * cosines).sum(axis=1) / (un * un)
    col_scale = (coeff * cosines).sum(axis=0) / (vn * vn)
    grad_u = scale * (weighted @ v - row_scale[:, None] * u)
    grad_v = scale * (weighted.T @ u - col_scale[:, None] * v)
    return loss, grad_u.T @ q + grad_v.T @ d


def mnr_gradient(
    queries: Sequence[Sequence[float] | np.ndarray],
    documents: Sequence[Sequence[float] | np.ndarray],
    adapter: Adapter,
    scale: float = 1.0,
) -> np.ndarray:
    """Analytic gradient of the ranking loss with respect to the adapter matrix."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    q = _stack(queries, "query")
    d = _stack(documents, "document")
    if q.shape != d.shape:
        raise ValueError(f"query batch {q.shape} and document batch {d.shape} disagree")
    if q.shape[1] != adapter.dim:
        raise ValueError(f"batch dimension {q.shape[1]} does not match adapter {adapter.dim}")
    _, grad = _adapted_loss_and_gradient(q, d, adapter.matrix, scale)
    return grad


def finite_diff_check(
    queries: Sequence[Sequence[float] | np.ndarray],
    documents: Sequence[Sequence[float] | np.ndarray],
    adapter: Adapter,
    scale: float = 1.0,
    eps: float = 1e-4,
) -> float:
    """Worst relative disagreement between analytic and numeric gradients.

    Each matrix entry is perturbed by ``+eps`` and ``-eps`` and the central
    difference of the loss is compared against the analytic entry. The
    denominator is ``max(|analytic| + |numeric|, floor)`` where the floor is
    one thousandth of the largest analytic entry, so entries far below the
    gradient's own scale cannot dominate the ratio.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if eps < 1e-9:
        warnings.warn(
            "finite-difference step below 1e-9 is dominated by float64 cancellation",
            stacklevel=2,
        )
    q = _stack(queries, "query")
    d = _stack(documents, "document")
    if q.shape != d.shape:
        raise ValueError(f"query batch {q.shape} and document batch {d.shape} disagree")
    analytic = mnr_gradient(queries, documents, adapter, scale)
    numeric = np.zeros_like(analytic)
    base = adapter.matrix.copy()
    dim = adapter.dim

    def loss_at(w: np.ndarray) -> float:
        u = q @ w.T
        v = d @ w.T
        un = _row_norms(u, "adapted query")
        vn = _row_norms(v, "adapted document")
        loss, _ = _softmax_ranking_loss(scale * ((u @ v.T) / np.outer(un, vn)))
        return loss

    for i in range(dim):
        for j in range(dim):
            original = base[i, j]
            base[i, j] = original + eps
            plus = loss_at(base)
            base[i, j] = original - eps
            minus = loss_at(base)
            base[i, j] = original
            numeric[i, j] = (plus - minus) / (2.0 * eps)
    floor = 1e-3 * max(float(np.abs(analytic).max()), 1e-8)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float((np.abs(analytic - numeric) / denom).max())


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings for adapter training."""

    learning_rate: float = 1e-2
    epochs: int = 100
    batch_size: int = 32
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError(f"learning rate must be non-negative, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


DEFAULT_TRAIN = TrainConfig()

# Settings typical for fine-tuning a full sentence encoder. The step size is
# roughly three orders of magnitude too small to move a plain linear adapter;
# prefer DEFAULT_TRAIN for the adapters in this package.
ENCODER_FINETUNE_PRESET = TrainConfig(learning_rate=2e-5, epochs=100, batch_size=32)


@dataclass
class TrainResult:
    adapter: Adapter
    history: list[float] = field(default_factory=list)
    dropped_duplicate_pairs: int = 0
    singleton_batches: int = 0


def train(
    pairs: Sequence[tuple[str, str]],
    query_store: EmbeddingStore,
    doc_store: EmbeddingStore,
    config: TrainConfig = DEFAULT_TRAIN,
) -> TrainResult:
    """Fit an adapter on aligned (query id, document id) pairs.

    The matrix starts at identity plus seeded Gaussian noise (sigma 0.01).
    Pairs are shuffled once with the seeded stream and cut into fixed batches
    that every epoch revisits in the same order, so a zero learning rate
    leaves both the matrix and the loss history constant. Within a batch,
    pairs repeating an already-seen document id are dropped (they would act
    as false negatives) and counted.
    """
    if len(pairs) == 0:
        raise DataError("no training pairs")
    if query_store.dim != doc_store.dim:
        raise DataError(
            f"query store dimension {query_store.dim} does not match "
            f"document store dimension {doc_store.dim}"
        )
    queries = np.vstack([query_store.vector64(qid) for qid, _ in pairs])
    documents = np.vstack([doc_store.vector64(did) for _, did in pairs])
    doc_ids = [did for _, did in pairs]

    rng = Splitmix64(config.seed)
    dim = doc_store.dim
    noise = np.empty((dim, dim))
    for i in range(dim):
        for j in range(dim):
            noise[i, j] = rng.gauss()
    matrix = np.eye(dim) + INIT_NOISE_SIGMA * noise

    order = list(range(len(pairs)))
    rng.shuffle(order)
    batches: list[list[int]] = []
    dropped = 0
    singletons = 0
    for start in range(0, len(order), config.batch_size):
        chunk = order[start : start + config.batch_size]
        seen: set[str] = set()
        batch: list[int] = []
        for index in chunk:
            if doc_ids[index] in seen:
                dropped += 1
                continue
            seen.add(doc_ids[index])
            batch.append(index)
        if len(batch) == 1:
            singletons += 1
        batches.append(batch)
    if config.batch_size < 2:
        warnings.warn("batch size 1 has no in-batch negatives", stacklevel=2)

    history: list[float] = []
    for epoch in range(config.epochs):
        total = 0.0
        weight = 0
        for batch in batches:
            idx = np.asarray(batch, dtype=np.intp)
            loss, grad = _adapted_loss_and_gradient(
                queries[idx], documents[idx], matrix, config.scale
            )
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise EngineError(
                    f"non-finite loss or gradient at epoch {epoch}, "
                    f"learning rate {config.learning_rate}; lower the rate or the scale"
                )
            matrix = matrix - config.learning_rate * grad
            total += loss * len(batch)
            weight += len(batch)
        history.append(total / weight)
    return TrainResult(
        adapter=Adapter(matrix=matrix, namespace=doc_store.namespace),
        history=history,
        dropped_duplicate_pairs=dropped,
        singleton_batches=singletons,
    )


def save_adapter(adapter: Adapter, path: str | os.PathLike) -> None:
    """Write the binary adapter container (float32 entries, row-major)."""
    encoded = adapter.namespace.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise DataError(f"namespace {adapter.namespace!r} exceeds the 65535-byte limit")
    with open_atomic(path, "wb") as handle:
        handle.write(_ADP_HEADER.pack(ADAPTER_MAGIC, ADAPTER_VERSION, adapter.dim))
        handle.write(adapter.matrix.astype("<f4").tobytes())
        handle.write(_ADP_NS_LEN.pack(len(encoded)))
        handle.write(encoded)


def load_adapter(path: str | os.PathLike) -> Adapter:
    with open(path, "rb") as handle:
        header = handle.read(_ADP_HEADER.size)
        if len(header) < _ADP_HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, dim = _ADP_HEADER.unpack(header)
        if magic != ADAPTER_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {ADAPTER_MAGIC!r}")
        if version != ADAPTER_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dim < 1:
            raise FormatError(f"{path}: dimension must be >= 1, got {dim}")
        raw = handle.read(dim * dim * 4)
        if len(raw) != dim * dim * 4:
            raise FormatError(f"{path}: truncated matrix")
        ns_len_raw = handle.read(_ADP_NS_LEN.size)
        if len(ns_len_raw) != _ADP_NS_LEN.size:
            raise FormatError(f"{path}: truncated namespace length")
        (ns_len,) = _ADP_NS_LEN.unpack(ns_len_raw)
        namespace = handle.read(ns_len)
        if len(namespace) != ns_len:
            raise FormatError(f"{path}: truncated namespace")
        if handle.read(1):
            raise FormatError(f"{path}: trailing data")
    matrix = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape((dim, dim))
    return Adapter(matrix=matrix, namespace=namespace.decode("utf-8"))
