"""Level-by-level beam classification over a coded taxonomy.

Starting from the synthetic root, each declared level scores every child of
every beam node with cosine similarity in that level's embedding namespace
(optionally through that namespace's adapter, applied to both the query and
the candidate vectors) and keeps the top ``k`` candidates as the next beam.
A node whose children do not sit on the level being scored, a leaf reached
early in particular, carries itself forward so it keeps competing. The final
ranking comes from the last level's full candidate pool, not from the
truncated beam, and per-level scores are never accumulated across levels:
each level stands on its own similarity space.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .adapter import Adapter
from .embedding import EmbeddingStore, cosine_scores
from .errors import DataError
from .ioutil import open_atomic
from .taxonomy import ROOT_CODE, Taxonomy

DEFAULT_FINAL_LIST_SIZE = 10


@dataclass(frozen=True)
class BeamConfig:
    """Beam width, per-level namespaces, and the size of the returned ranking."""

    k: int
    level_namespaces: Mapping[int, str]
    final_list_size: int = DEFAULT_FINAL_LIST_SIZE

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"beam width must be >= 1, got {self.k}")
        if self.final_list_size < 1:
            raise ValueError(f"final list size must be >= 1, got {self.final_list_size}")


@dataclass
class ClassificationResult:
    """Ranked leaves plus the bookkeeping needed for cost accounting."""

    query_id: str
    ranked_leaves: list[tuple[str, float]]
    similarity_count: int
    visited_per_level: list[int]
    beam_trace: list[list[str]]

    @property
    def top_code(self) -> str | None:
        return self.ranked_leaves[0][0] if self.ranked_leaves else None


def _scored(
    store: EmbeddingStore,
    codes: Sequence[str],
    query: np.ndarray,
    adapter: Adapter | None,
) -> np.ndarray:
    """Cosine scores for a candidate subset, identical to the flat path.

    Both the query and the candidate rows pass through the namespace adapter
    when one is configured, and the cosine itself always runs through
    :func:`emitree.embedding.cosine_scores`.
    """
    rows, norms = store.rows_for(codes)
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.size != store.dim:
        raise ValueError(f"query dimension {q.size} does not match store {store.dim}")
    if adapter is not None:
        if adapter.dim != store.dim:
            raise DataError(
                f"adapter dimension {adapter.dim} does not match "
                f"namespace {store.namespace!r} dimension {store.dim}"
            )
        # Adapt and renormalize row by row, like cosine_scores: batched
        # kernels round by batch shape, and a candidate's score must not
        # depend on which other candidates were gathered with it.
        adapted = np.empty_like(rows)
        for i in range(rows.shape[0]):
            adapted[i] = adapter.matrix @ rows[i]
        rows = adapted
        norms = np.sqrt(np.array([row @ row for row in rows], dtype=np.float64))
        if np.any(norms == 0.0):
            raise ValueError("adapter maps a stored vector to zero norm")
        q = adapter.apply(q)
    return cosine_scores(rows, norms, q)


def _ranked_order(codes: Sequence[str], scores: np.ndarray) -> list[int]:
    return sorted(range(len(codes)), key=lambda i: (-scores[i], codes[i]))


def group_reason(
    query_vectors: Mapping[int, np.ndarray],
    tax: Taxonomy,
    stores: Mapping[str, EmbeddingStore],
    adapters: Mapping[str, Adapter] | None,
    config: BeamConfig,
    query_id: str = "",
) -> ClassificationResult:
    """Classify one query by walking the taxonomy level by level.

    ``query_vectors`` maps each declared level to the query embedding in that
    level's namespace (use :func:`broadcast_query` when a single encoder
    serves every level).
    """
    adapters = adapters or {}
    levels = tax.levels
    missing_levels = [level for level in levels if level not in config.level_namespaces]
    if missing_levels:
        raise DataError(f"no namespace configured for levels {missing_levels}")

    beam: list[str] = [ROOT_CODE]
    visited: list[int] = []
    trace: list[list[str]] = []
    similarity_count = 0
    ranked: list[tuple[str, float]] = []

    for position, level in enumerate(levels):
        namespace = config.level_namespaces[level]
        store = stores.get(namespace)
        if store is None:
            raise DataError(f"no embedding store loaded for namespace {namespace!r}")
        query = query_vectors.get(level)
        if query is None:
            raise DataError(f"no query vector supplied for level {level}")

        codes: list[str] = []
        for code in beam:
            on_level = [child.code for child in tax.children(code) if child.level == level]
            if on_level:
                codes.extend(on_level)
            elif code != ROOT_CODE:
                codes.append(code)
        if not codes:
            raise DataError(f"no candidates at level {level}; the taxonomy is empty")

        scores = _scored(store, codes, query, adapters.get(namespace))
        order = _ranked_order(codes, scores)
        similarity_count += len(codes)
        visited.append(len(codes))
        beam = [codes[i] for i in order[: min(config.k, len(codes))]]
        trace.append(list(beam))
        if position == len(levels) - 1:
            ranked = [(codes[i], float(scores[i])) for i in order[: config.final_list_size]]

    return ClassificationResult(
        query_id=query_id,
        ranked_leaves=ranked,
        similarity_count=similarity_count,
        visited_per_level=visited,
        beam_trace=trace,
    )


def flat_classify(
    query: np.ndarray,
    store: EmbeddingStore,
    adapter: Adapter | None = None,
    final_list_size: int = DEFAULT_FINAL_LIST_SIZE,
    query_id: str = "",
) -> ClassificationResult:
    """Single-shot ranking over one namespace, in the same result shape."""
    if final_list_size < 1:
        raise ValueError(f"final list size must be >= 1, got {final_list_size}")
    if len(store) == 0:
        raise ValueError("cannot rank against an empty store")
    codes = list(store.ids)
    scores = _scored(store, codes, np.asarray(query, dtype=np.float64), adapter)
    order = _ranked_order(codes, scores)
    ranked = [(codes[i], float(scores[i])) for i in order[:final_list_size]]
    return ClassificationResult(
        query_id=query_id,
        ranked_leaves=ranked,
        similarity_count=len(codes),
        visited_per_level=[len(codes)],
        beam_trace=[[code for code, _ in ranked]],
    )


def broadcast_query(levels: Sequence[int], vector: np.ndarray) -> dict[int, np.ndarray]:
    """Reuse one query embedding for every level (single-encoder setups)."""
    return {level: vector for level in levels}


@dataclass
class BatchResult:
    """Per-query outcomes plus the errors collected along the way."""

    results: list[ClassificationResult] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    @property
    def total_similarity_count(self) -> int:
        return sum(result.similarity_count for result in self.results)


def classify_batch(
    queries: Sequence[tuple[str, Mapping[int, np.ndarray]]],
    tax: Taxonomy,
    stores: Mapping[str, EmbeddingStore],
    adapters: Mapping[str, Adapter] | None,
    config: BeamConfig,
) -> BatchResult:
    """Classify many queries, continuing past per-query failures.

    Successful results keep the input order; failures are collected as
    (query id, message) pairs instead of aborting the batch.
    """
    batch = BatchResult()
    for query_id, vectors in queries:
        try:
            batch.results.append(
                group_reason(vectors, tax, stores, adapters, config, query_id=query_id)
            )
        except (DataError, ValueError) as exc:
            batch.errors.append((query_id, str(exc)))
    return batch


def write_results_jsonl(results: Sequence[ClassificationResult], path: str | os.PathLike) -> None:
    """One JSON object per query: ranked leaves, similarity count, beam trace."""
    with open_atomic(path) as handle:
        for result in results:
            record = {
                "id": result.query_id,
                "leaves": [
                    {"code": code, "score": score} for code, score in result.ranked_leaves
                ],
                "similarity_count": result.similarity_count,
                "beam": result.beam_trace,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
