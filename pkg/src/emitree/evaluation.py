"""Retrieval metrics, beam-width sweeps, and the stage ablation harness.

Accuracy at k is a hit rate: the percentage of queries whose ranked list
contains at least one ground-truth label within the first ``k`` positions.
Multi-label queries count as hits on any of their labels.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .adapter import Adapter, TrainConfig, train
from .corpus import PreprocessConfig, preprocess, split, TRAIN, TEST
from .embedding import EmbeddingStore
from .errors import DataError
from .ioutil import open_atomic
from .reasoning import (
    BeamConfig,
    ClassificationResult,
    classify_batch,
    flat_classify,
)
from .taxonomy import Taxonomy

ACC_COLUMNS = (1, 3, 5, 10)

EVAL_CSV_COLUMNS = ("config", "k", "acc1", "acc3", "acc5", "acc10", "mean_sims", "seconds")


def hit_rank(result: ClassificationResult, truth: set[str]) -> int | None:
    """1-based rank of the first ground-truth label, or ``None`` if absent."""
    for rank, (code, _) in enumerate(result.ranked_leaves, start=1):
        if code in truth:
            return rank
    return None


def acc_at_k(
    results: Sequence[ClassificationResult],
    truths: Mapping[str, set[str]],
    k: int,
) -> float:
    """Percentage of queries with a ground-truth label in the top ``k``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(results) == 0:
        raise ValueError("accuracy over zero queries is undefined")
    hits = 0
    for result in results:
        if result.query_id not in truths:
            raise DataError(f"no ground truth for query {result.query_id!r}")
        rank = hit_rank(result, truths[result.query_id])
        if rank is not None and rank <= k:
            hits += 1
    return 100.0 * hits / len(results)


@dataclass
class EvalOutcome:
    """Accuracies at several cutoffs plus cost and timing bookkeeping."""

    acc_at: dict[int, float]
    hit_ranks: dict[str, int | None]
    mean_similarity_count: float
    seconds: float


def evaluate(
    results: Sequence[ClassificationResult],
    truths: Mapping[str, set[str]],
    acc_ks: Sequence[int] = ACC_COLUMNS,
    seconds: float = 0.0,
) -> EvalOutcome:
    ranks = {}
    for result in results:
        if result.query_id not in truths:
            raise DataError(f"no ground truth for query {result.query_id!r}")
        ranks[result.query_id] = hit_rank(result, truths[result.query_id])
    if not results:
        raise ValueError("accuracy over zero queries is undefined")
    mean_sims = float(np.mean([result.similarity_count for result in results]))
    return EvalOutcome(
        acc_at={k: acc_at_k(results, truths, k) for k in acc_ks},
        hit_ranks=ranks,
        mean_similarity_count=mean_sims,
        seconds=seconds,
    )


@dataclass
class SweepRow:
    """One evaluated configuration: a label, an optional beam width, metrics."""

    label: str
    k: int | None
    outcome: EvalOutcome


def k_sweep(
    queries: Sequence[tuple[str, Mapping[int, np.ndarray]]],
    truths: Mapping[str, set[str]],
    tax: Taxonomy,
    stores: Mapping[str, EmbeddingStore],
    adapters: Mapping[str, Adapter] | None,
    level_namespaces: Mapping[int, str],
    ks: Sequence[int],
    final_list_size: int = 10,
    acc_ks: Sequence[int] = ACC_COLUMNS,
    label: str = "group",
) -> list[SweepRow]:
    """Classify the query set once per beam width; empty ``ks`` yields no rows.

    Wall time per row is measured and carried in the outcome, but it is
    informational only and never part of any assertion or default report.
    """
    rows = []
    for k in ks:
        config = BeamConfig(k=k, level_namespaces=level_namespaces, final_list_size=final_list_size)
        started = time.perf_counter()
        batch = classify_batch(queries, tax, stores, adapters, config)
        elapsed = time.perf_counter() - started
        if batch.errors:
            qid, message = batch.errors[0]
            raise DataError(f"classification failed for {qid!r}: {message}")
        rows.append(
            SweepRow(label=label, k=k, outcome=evaluate(batch.results, truths, acc_ks, elapsed))
        )
    return rows


def flat_baseline(
    queries: Sequence[tuple[str, np.ndarray]],
    truths: Mapping[str, set[str]],
    store: EmbeddingStore,
    adapter: Adapter | None = None,
    final_list_size: int = 10,
    acc_ks: Sequence[int] = ACC_COLUMNS,
    label: str = "flat",
) -> SweepRow:
    """Single-shot ranking over the leaf store, as a sweep row for comparison."""
    started = time.perf_counter()
    results = [
        flat_classify(vector, store, adapter, final_list_size, query_id=qid)
        for qid, vector in queries
    ]
    elapsed = time.perf_counter() - started
    return SweepRow(label=label, k=None, outcome=evaluate(results, truths, acc_ks, elapsed))


def write_eval_csv(
    rows: Sequence[SweepRow], path: str | os.PathLike, timings: bool = False
) -> None:
    """The fixed-schema evaluation report.

    The ``seconds`` column is only populated when ``timings`` is set; default
    runs leave it empty so that rerunning a seeded pipeline reproduces the
    file byte for byte.
    """
    with open_atomic(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(EVAL_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.label,
                    "" if row.k is None else row.k,
                    *(f"{row.outcome.acc_at[k]:.4f}" for k in ACC_COLUMNS),
                    f"{row.outcome.mean_similarity_count:.4f}",
                    f"{row.outcome.seconds:.6f}" if timings else "",
                ]
            )


@dataclass(frozen=True)
class AblationStage:
    """One harness configuration: which components are switched on."""

    name: str
    preprocess: bool
    trained: bool
    group: bool


def default_stages() -> list[AblationStage]:
    """The canonical progression from bare retrieval to the full stack."""
    return [
        AblationStage("zero_shot", preprocess=False, trained=False, group=False),
        AblationStage("preprocess", preprocess=True, trained=False, group=False),
        AblationStage("trained_adapter", preprocess=True, trained=True, group=False),
        AblationStage("group_reasoning", preprocess=True, trained=True, group=True),
    ]


@dataclass
class AblationInputs:
    """Texts, labels, and an encoder for the stage ablation harness.

    The harness embeds class and query texts with ``embed`` (optionally after
    preprocessing), trains an adapter on the train split when a stage asks
    for one, and reports held-out accuracy per stage.
    """

    tax: Taxonomy
    class_texts: Mapping[str, str]
    query_texts: Sequence[tuple[str, str]]
    truths: Mapping[str, set[str]]
    embed: Callable[[str], np.ndarray]
    dim: int
    preprocess_config: PreprocessConfig = field(default_factory=PreprocessConfig)
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)
    beam_k: int = 4
    final_list_size: int = 10
    acc_ks: Sequence[int] = ACC_COLUMNS


def ablation_run(
    inputs: AblationInputs, stages: Sequence[AblationStage] | None = None
) -> list[SweepRow]:
    """Evaluate each stage on the held-out test split.

    Stage toggles: ``preprocess`` cleans texts before embedding, ``trained``
    fits an adapter on train-split pairs (identity otherwise), and ``group``
    classifies with the level-by-level beam instead of flat leaf retrieval.
    """
    if stages is None:
        stages = default_stages()
    assignment = split([qid for qid, _ in inputs.query_texts], inputs.ratios, inputs.split_seed)
    rows: list[SweepRow] = []
    for stage in stages:
        def text_of(raw: str) -> str:
            return preprocess(raw, inputs.preprocess_config) if stage.preprocess else raw

        class_vectors = {
            code: inputs.embed(text_of(text)) for code, text in inputs.class_texts.items()
        }
        all_store = EmbeddingStore.from_entries(
            "shared", inputs.dim, sorted(class_vectors.items())
        )
        leaf_codes = [leaf.code for leaf in inputs.tax.leaves()]
        leaf_store = EmbeddingStore.from_entries(
            "leaves", inputs.dim, [(code, class_vectors[code]) for code in leaf_codes]
        )
        query_vectors = {
            qid: inputs.embed(text_of(text)) for qid, text in inputs.query_texts
        }

        # The adapter is fitted on leaf pairs and applied only in the leaf
        # namespace; beam routing above the final level stays zero-shot so
        # a sparsely trained adapter cannot derail it.
        adapters: dict[str, Adapter] | None = None
        if stage.trained:
            pairs = [
                (qid, code)
                for qid, _ in inputs.query_texts
                if assignment.by_id[qid] == TRAIN
                for code in sorted(inputs.truths[qid])
            ]
            query_store = EmbeddingStore.from_entries(
                "queries", inputs.dim, sorted(query_vectors.items())
            )
            fitted = train(pairs, query_store, leaf_store, inputs.train_config).adapter
            adapters = {"leaves": fitted}

        test_ids = [qid for qid, _ in inputs.query_texts if assignment.by_id[qid] == TEST]
        started = time.perf_counter()
        if stage.group:
            final_level = inputs.tax.levels[-1]
            namespaces: dict[int, str] = {
                level: "leaves" if level == final_level else "shared"
                for level in inputs.tax.levels
            }
            config = BeamConfig(
                k=inputs.beam_k,
                level_namespaces=namespaces,
                final_list_size=inputs.final_list_size,
            )
            queries = [
                (qid, {level: query_vectors[qid] for level in inputs.tax.levels})
                for qid in test_ids
            ]
            batch = classify_batch(
                queries,
                inputs.tax,
                {"shared": all_store, "leaves": leaf_store},
                adapters,
                config,
            )
            if batch.errors:
                qid, message = batch.errors[0]
                raise DataError(f"classification failed for {qid!r}: {message}")
            results = batch.results
        else:
            results = [
                flat_classify(
                    query_vectors[qid],
                    leaf_store,
                    adapters.get("leaves") if adapters else None,
                    inputs.final_list_size,
                    query_id=qid,
                )
                for qid in test_ids
            ]
        elapsed = time.perf_counter() - started
        rows.append(
            SweepRow(
                label=stage.name,
                k=inputs.beam_k if stage.group else None,
                outcome=evaluate(results, inputs.truths, inputs.acc_ks, elapsed),
            )
        )
    return rows
