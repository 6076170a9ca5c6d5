"""Command-line entry points.

Subcommands: ``validate``, ``train``, ``classify``, ``eval``, ``estimate``,
and ``theorem-check``. Options always win over the JSON run configuration,
relative paths in the configuration resolve against the file's directory,
and every output is written atomically into the ``--out`` directory. Report
commands render a PNG figure next to each delimited report.

Exit codes: 0 success, 1 usage problems, 2 invalid input data, 3 runtime
failures.

All randomness flows from the single ``seed`` value: each component draws
its own stream via ``derive_seed(seed, name)`` with the names
``corpus.split``, ``adapter.train:<namespace>``, and ``ablation.encoder``,
so any rerun with the same inputs and seed writes byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import emission as emission_mod
from .adapter import Adapter, TrainConfig, load_adapter, save_adapter, train
from .embedding import EmbeddingStore, load_embeddings
from .errors import DataError, EngineError
from .evaluation import (
    AblationInputs,
    SweepRow,
    ablation_run,
    flat_baseline,
    k_sweep,
    write_eval_csv,
)
from .ioutil import open_atomic, write_text_atomic
from .reasoning import BeamConfig, classify_batch, flat_classify, write_results_jsonl
from .rng import derive_seed
from .taxonomy import Taxonomy, parse_taxonomy
from .theory import check_entropy_reduction, cost_flat, cost_hierarchical, standard_grid

_CONFIG_KEYS = {
    "seed",
    "out",
    "taxonomy",
    "enterprises",
    "stopwords",
    "intensities",
    "cases",
    "case_claimed_mean_ape",
    "level_namespaces",
    "doc_embeddings",
    "query_embeddings",
    "adapters",
    "beam",
    "split",
    "train",
    "eval",
}


@dataclass
class RunConfig:
    """Parsed run configuration with all paths resolved."""

    base_dir: Path
    seed: int = 42
    out: Path = Path("out")
    taxonomy: Path | None = None
    enterprises: Path | None = None
    stopwords: Path | None = None
    intensities: Path | None = None
    cases: Path | None = None
    case_claimed_mean_ape: float | None = None
    level_namespaces: dict[int, str] = field(default_factory=dict)
    doc_embeddings: dict[str, Path] = field(default_factory=dict)
    query_embeddings: dict[str, Path] = field(default_factory=dict)
    adapters: dict[str, Path] = field(default_factory=dict)
    beam_k: int = 4
    final_list_size: int = 10
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    train: TrainConfig = field(default_factory=TrainConfig)
    train_namespaces: list[str] = field(default_factory=list)
    eval_ks: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    ablation_dim: int = 64


def _require_keys(record: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise DataError(f"{where}: unknown keys {unknown}")


def _optional_path(record: dict, key: str, base: Path) -> Path | None:
    value = record.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise DataError(f"config key {key!r} must be a non-empty path string")
    return (base / value).resolve() if not os.path.isabs(value) else Path(value)


def _path_map(record: dict, key: str, base: Path) -> dict[str, Path]:
    value = record.get(key, {})
    if not isinstance(value, dict):
        raise DataError(f"config key {key!r} must be an object of namespace to path")
    paths = {}
    for namespace, raw in value.items():
        if not isinstance(raw, str) or not raw:
            raise DataError(f"config key {key}.{namespace} must be a non-empty path string")
        paths[namespace] = (base / raw).resolve() if not os.path.isabs(raw) else Path(raw)
    return paths


def load_config(path: str | os.PathLike) -> RunConfig:
    config_path = Path(path).resolve()
    try:
        with open(config_path, "r", encoding="utf-8") as handle:
            record = json.load(handle)
    except FileNotFoundError:
        raise DataError(f"config file {config_path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{config_path}: malformed JSON ({exc.msg})") from None
    if not isinstance(record, dict):
        raise DataError(f"{config_path}: expected a JSON object")
    _require_keys(record, _CONFIG_KEYS, str(config_path))
    base = config_path.parent

    config = RunConfig(base_dir=base)
    if "seed" in record:
        if not isinstance(record["seed"], int) or isinstance(record["seed"], bool):
            raise DataError("config key 'seed' must be an integer")
        config.seed = record["seed"]
    out = record.get("out", "out")
    if not isinstance(out, str) or not out:
        raise DataError("config key 'out' must be a non-empty path string")
    config.out = (base / out).resolve() if not os.path.isabs(out) else Path(out)

    for key in ("taxonomy", "enterprises", "stopwords", "intensities", "cases"):
        setattr(config, key, _optional_path(record, key, base))
    claimed = record.get("case_claimed_mean_ape")
    if claimed is not None:
        if isinstance(claimed, bool) or not isinstance(claimed, (int, float)):
            raise DataError("config key 'case_claimed_mean_ape' must be a number")
        config.case_claimed_mean_ape = float(claimed)

    namespaces = record.get("level_namespaces", {})
    if not isinstance(namespaces, dict):
        raise DataError("config key 'level_namespaces' must be an object of level to namespace")
    for raw_level, namespace in namespaces.items():
        try:
            level = int(raw_level)
        except ValueError:
            raise DataError(f"level_namespaces key {raw_level!r} is not an integer") from None
        if not isinstance(namespace, str) or not namespace:
            raise DataError(f"level_namespaces.{raw_level} must be a non-empty namespace string")
        config.level_namespaces[level] = namespace

    config.doc_embeddings = _path_map(record, "doc_embeddings", base)
    config.query_embeddings = _path_map(record, "query_embeddings", base)
    config.adapters = _path_map(record, "adapters", base)

    beam = record.get("beam", {})
    if not isinstance(beam, dict):
        raise DataError("config key 'beam' must be an object")
    _require_keys(beam, {"k", "final_list_size"}, "config key 'beam'")
    config.beam_k = beam.get("k", config.beam_k)
    config.final_list_size = beam.get("final_list_size", config.final_list_size)

    split_section = record.get("split", {})
    if not isinstance(split_section, dict):
        raise DataError("config key 'split' must be an object")
    _require_keys(split_section, {"ratios"}, "config key 'split'")
    if "ratios" in split_section:
        ratios = split_section["ratios"]
        if not isinstance(ratios, list) or len(ratios) != 3:
            raise DataError("config key 'split.ratios' must be a list of three numbers")
        config.split_ratios = tuple(float(r) for r in ratios)

    train_section = record.get("train", {})
    if not isinstance(train_section, dict):
        raise DataError("config key 'train' must be an object")
    _require_keys(
        train_section,
        {"learning_rate", "epochs", "batch_size", "scale", "namespaces"},
        "config key 'train'",
    )
    try:
        config.train = TrainConfig(
            learning_rate=train_section.get("learning_rate", TrainConfig.learning_rate),
            epochs=train_section.get("epochs", TrainConfig.epochs),
            batch_size=train_section.get("batch_size", TrainConfig.batch_size),
            scale=train_section.get("scale", TrainConfig.scale),
        )
    except ValueError as exc:
        raise DataError(f"config key 'train': {exc}") from None
    namespaces_list = train_section.get("namespaces", [])
    if not isinstance(namespaces_list, list) or any(
        not isinstance(ns, str) for ns in namespaces_list
    ):
        raise DataError("config key 'train.namespaces' must be a list of namespace strings")
    config.train_namespaces = list(namespaces_list)

    eval_section = record.get("eval", {})
    if not isinstance(eval_section, dict):
        raise DataError("config key 'eval' must be an object")
    _require_keys(eval_section, {"ks", "ablation_dim"}, "config key 'eval'")
    if "ks" in eval_section:
        ks = eval_section["ks"]
        if not isinstance(ks, list) or any(not isinstance(k, int) or k < 1 for k in ks):
            raise DataError("config key 'eval.ks' must be a list of positive integers")
        config.eval_ks = list(ks)
    if "ablation_dim" in eval_section:
        dim = eval_section["ablation_dim"]
        if not isinstance(dim, int) or dim < 1:
            raise DataError("config key 'eval.ablation_dim' must be a positive integer")
        config.ablation_dim = dim

    return config


def _load_taxonomy(config: RunConfig) -> Taxonomy:
    if config.taxonomy is None:
        raise DataError("the configuration does not name a taxonomy file")
    return parse_taxonomy(config.taxonomy)


def _load_enterprises(config: RunConfig) -> list[corpus_mod.EnterpriseRecord]:
    if config.enterprises is None:
        raise DataError("the configuration does not name an enterprises file")
    return corpus_mod.load_enterprises(config.enterprises)


def _load_stores(paths: dict[str, Path], what: str) -> dict[str, EmbeddingStore]:
    stores = {}
    for namespace, path in sorted(paths.items()):
        if not path.exists():
            raise DataError(f"{what} file for namespace {namespace!r} is missing: {path}")
        stores[namespace] = load_embeddings(path, namespace=namespace)
    return stores


def _load_adapters(config: RunConfig, adapters_dir: str | None) -> dict[str, Adapter]:
    adapters: dict[str, Adapter] = {}
    for namespace, path in sorted(config.adapters.items()):
        if not path.exists():
            raise DataError(f"adapter file for namespace {namespace!r} is missing: {path}")
        adapters[namespace] = load_adapter(path)
    if adapters_dir:
        directory = Path(adapters_dir)
        if not directory.is_dir():
            raise DataError(f"adapter directory {directory} does not exist")
        for path in sorted(directory.glob("*.adp")):
            adapters[path.stem] = load_adapter(path)
    return adapters


def _leaf_level_namespace(config: RunConfig, tax: Taxonomy) -> str:
    final_level = tax.levels[-1]
    namespace = config.level_namespaces.get(final_level)
    if namespace is None:
        raise DataError(f"no namespace configured for the final level {final_level}")
    return namespace


def _query_vector_map(
    record_id: str,
    tax: Taxonomy,
    config: RunConfig,
    query_stores: dict[str, EmbeddingStore],
):
    vectors = {}
    for level in tax.levels:
        namespace = config.level_namespaces.get(level)
        if namespace is None:
            raise DataError(f"no namespace configured for level {level}")
        store = query_stores.get(namespace)
        if store is None:
            raise DataError(f"no query embeddings loaded for namespace {namespace!r}")
        vectors[level] = store.vector64(record_id)
    return vectors


def _truths(records) -> dict[str, set[str]]:
    return {
        record.id: set(record.naics_codes) for record in records if record.naics_codes
    }


@click.group()
@click.version_option(package_name="emitree")
def cli() -> None:
    """Hierarchical sector classification and emission estimation."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration JSON.")
def validate(config_path: str) -> None:
    """Check that every configured input parses and fits together."""
    config = load_config(config_path)
    checks: list[str] = []

    tax = _load_taxonomy(config)
    checks.append(f"taxonomy: {len(tax)} nodes over levels {tax.levels}")

    missing_levels = [level for level in tax.levels if level not in config.level_namespaces]
    if missing_levels:
        raise DataError(f"no namespace configured for levels {missing_levels}")
    checks.append(f"level namespaces: {config.level_namespaces}")

    doc_stores = _load_stores(config.doc_embeddings, "document embeddings")
    for level in tax.levels:
        namespace = config.level_namespaces[level]
        store = doc_stores.get(namespace)
        if store is None:
            raise DataError(f"no document embeddings configured for namespace {namespace!r}")
        missing = [
            node.code for node in tax.nodes_at_level(level) if node.code not in store
        ]
        if missing:
            shown = ", ".join(missing[:5])
            raise DataError(
                f"{len(missing)} nodes at level {level} lack embeddings in "
                f"namespace {namespace!r} (first few: {shown})"
            )
    checks.append(f"document embeddings: {sum(len(s) for s in doc_stores.values())} vectors")

    if config.enterprises is not None:
        records = _load_enterprises(config)
        corpus_mod.validate_labels(records, tax)
        checks.append(f"enterprises: {len(records)} records, labels all known")
        query_stores = _load_stores(config.query_embeddings, "query embeddings")
        for namespace, store in query_stores.items():
            missing = [record.id for record in records if record.id not in store]
            if missing:
                shown = ", ".join(missing[:5])
                raise DataError(
                    f"{len(missing)} enterprises lack query embeddings in "
                    f"namespace {namespace!r} (first few: {shown})"
                )
        if query_stores:
            checks.append(f"query embeddings: {len(query_stores)} namespaces")

    if config.stopwords is not None:
        stopwords = corpus_mod.load_stopwords(config.stopwords)
        checks.append(f"stopwords: {len(stopwords)} tokens")
    if config.intensities is not None:
        table = emission_mod.load_intensities(config.intensities)
        checks.append(f"intensities: {len(table)} entries")
    if config.cases is not None:
        cases = emission_mod.load_cases(config.cases)
        checks.append(f"cases: {len(cases)} rows")
    adapters = _load_adapters(config, None)
    for namespace, adapter in adapters.items():
        store = doc_stores.get(namespace)
        if store is not None and adapter.dim != store.dim:
            raise DataError(
                f"adapter {namespace!r} has dimension {adapter.dim}, "
                f"store has {store.dim}"
            )
    if adapters:
        checks.append(f"adapters: {sorted(adapters)}")

    for line in checks:
        click.echo(f"ok: {line}")
    click.echo("validation passed")


@cli.command(name="train")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration JSON.")
@click.option("--seed", type=int, default=None, help="Override the configured root seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
def train_cmd(config_path: str, seed: int | None, out_dir: str | None) -> None:
    """Fit per-namespace adapters on the train split and save them."""
    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out = Path(out_dir)

    tax = _load_taxonomy(config)
    records = _load_enterprises(config)
    corpus_mod.validate_labels(records, tax)
    labeled = [record for record in records if record.naics_codes]
    if not labeled:
        raise DataError("no labeled enterprises to train on")
    assignment = corpus_mod.split(
        [record.id for record in labeled],
        config.split_ratios,
        derive_seed(config.seed, "corpus.split"),
    )

    doc_stores = _load_stores(config.doc_embeddings, "document embeddings")
    query_stores = _load_stores(config.query_embeddings, "query embeddings")
    namespaces = config.train_namespaces or sorted(set(config.level_namespaces.values()))

    histories: dict[str, list[float]] = {}
    adapter_dir = config.out / "adapters"
    for namespace in namespaces:
        levels = [
            level for level, ns in config.level_namespaces.items() if ns == namespace
        ]
        if not levels:
            raise DataError(f"train namespace {namespace!r} is not mapped to any level")
        level = max(levels)
        pairs = corpus_mod.training_pairs(labeled, tax, level, assignment, corpus_mod.TRAIN)
        if not pairs:
            raise DataError(f"no training pairs for namespace {namespace!r} at level {level}")
        doc_store = doc_stores.get(namespace)
        query_store = query_stores.get(namespace)
        if doc_store is None or query_store is None:
            raise DataError(f"namespace {namespace!r} needs both document and query embeddings")
        train_config = TrainConfig(
            learning_rate=config.train.learning_rate,
            epochs=config.train.epochs,
            batch_size=config.train.batch_size,
            scale=config.train.scale,
            seed=derive_seed(config.seed, f"adapter.train:{namespace}"),
        )
        result = train(pairs, query_store, doc_store, train_config)
        save_adapter(result.adapter, adapter_dir / f"{namespace}.adp")
        histories[namespace] = result.history
        click.echo(
            f"trained {namespace}: {len(pairs)} pairs, "
            f"loss {result.history[0]:.6f} -> {result.history[-1]:.6f}"
        )

    with open_atomic(config.out / "train_history.csv") as handle:
        writer = csv.writer(handle)
        writer.writerow(["namespace", "epoch", "loss"])
        for namespace in sorted(histories):
            for epoch, loss in enumerate(histories[namespace], start=1):
                writer.writerow([namespace, epoch, f"{loss:.10g}"])

    from .figures import save_loss_curves

    figure = save_loss_curves(histories, config.out / "train_loss.png")
    click.echo(f"wrote {config.out / 'train_history.csv'}")
    click.echo(f"wrote {figure}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration JSON.")
@click.option("--seed", type=int, default=None, help="Override the configured root seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--mode", type=click.Choice(["flat", "group"]), default="group", show_default=True)
@click.option("--k", type=int, default=None, help="Beam width (group mode).")
@click.option("--topn", type=int, default=None, help="Size of the returned leaf ranking.")
@click.option("--adapters-dir", type=click.Path(), default=None, help="Directory of <namespace>.adp files.")
def classify(
    config_path: str,
    seed: int | None,
    out_dir: str | None,
    mode: str,
    k: int | None,
    topn: int | None,
    adapters_dir: str | None,
) -> None:
    """Rank taxonomy leaves for every enterprise and write results.jsonl."""
    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out = Path(out_dir)
    beam_k = k if k is not None else config.beam_k
    final_list_size = topn if topn is not None else config.final_list_size

    tax = _load_taxonomy(config)
    records = _load_enterprises(config)
    doc_stores = _load_stores(config.doc_embeddings, "document embeddings")
    query_stores = _load_stores(config.query_embeddings, "query embeddings")
    adapters = _load_adapters(config, adapters_dir)

    errors: list[tuple[str, str]] = []
    results = []
    if mode == "group":
        queries = []
        for record in records:
            try:
                queries.append((record.id, _query_vector_map(record.id, tax, config, query_stores)))
            except DataError as exc:
                errors.append((record.id, str(exc)))
        batch = classify_batch(
            queries,
            tax,
            doc_stores,
            adapters,
            BeamConfig(
                k=beam_k,
                level_namespaces=config.level_namespaces,
                final_list_size=final_list_size,
            ),
        )
        results = batch.results
        errors.extend(batch.errors)
    else:
        namespace = _leaf_level_namespace(config, tax)
        store = doc_stores.get(namespace)
        if store is None:
            raise DataError(f"no document embeddings configured for namespace {namespace!r}")
        query_store = query_stores.get(namespace)
        if query_store is None:
            raise DataError(f"no query embeddings configured for namespace {namespace!r}")
        adapter = adapters.get(namespace)
        for record in records:
            try:
                results.append(
                    flat_classify(
                        query_store.vector64(record.id),
                        store,
                        adapter,
                        final_list_size,
                        query_id=record.id,
                    )
                )
            except (DataError, ValueError) as exc:
                errors.append((record.id, str(exc)))

    write_results_jsonl(results, config.out / "results.jsonl")
    with open_atomic(config.out / "classify_errors.jsonl") as handle:
        for record_id, message in errors:
            handle.write(json.dumps({"id": record_id, "error": message}) + "\n")
    total_sims = sum(result.similarity_count for result in results)
    click.echo(
        f"classified {len(results)} of {len(records)} enterprises in {mode} mode "
        f"({total_sims} similarity evaluations, {len(errors)} errors)"
    )
    click.echo(f"wrote {config.out / 'results.jsonl'}")


@cli.command(name="eval")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration JSON.")
@click.option("--seed", type=int, default=None, help="Override the configured root seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--ks", default=None, help="Comma-separated beam widths for the sweep.")
@click.option("--topn", type=int, default=None, help="Size of the ranked list under evaluation.")
@click.option("--adapters-dir", type=click.Path(), default=None, help="Directory of <namespace>.adp files.")
@click.option("--part", type=click.Choice(["all", "train", "validation", "test"]), default="all", show_default=True, help="Which split of the labeled enterprises to evaluate.")
@click.option("--ablation", is_flag=True, help="Also run the stage ablation harness.")
@click.option("--timings", is_flag=True, help="Populate the seconds column in the report.")
def eval_cmd(
    config_path: str,
    seed: int | None,
    out_dir: str | None,
    ks: str | None,
    topn: int | None,
    adapters_dir: str | None,
    part: str,
    ablation: bool,
    timings: bool,
) -> None:
    """Sweep beam widths against the flat baseline and report accuracy."""
    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out = Path(out_dir)
    final_list_size = topn if topn is not None else config.final_list_size
    if ks is not None:
        try:
            config.eval_ks = [int(chunk) for chunk in ks.split(",") if chunk.strip()]
        except ValueError:
            raise click.UsageError(f"--ks must be comma-separated integers, got {ks!r}")
        if not config.eval_ks or any(k < 1 for k in config.eval_ks):
            raise click.UsageError("--ks needs at least one positive integer")

    tax = _load_taxonomy(config)
    records = _load_enterprises(config)
    corpus_mod.validate_labels(records, tax)
    truths = _truths(records)
    labeled = [record for record in records if record.naics_codes]
    if not labeled:
        raise DataError("no labeled enterprises to evaluate")
    if part != "all":
        assignment = corpus_mod.split(
            [record.id for record in labeled],
            config.split_ratios,
            derive_seed(config.seed, "corpus.split"),
        )
        labeled = [record for record in labeled if assignment.by_id[record.id] == part]
        if not labeled:
            raise DataError(f"the {part} split is empty")

    doc_stores = _load_stores(config.doc_embeddings, "document embeddings")
    query_stores = _load_stores(config.query_embeddings, "query embeddings")
    adapters = _load_adapters(config, adapters_dir)

    queries = [
        (record.id, _query_vector_map(record.id, tax, config, query_stores))
        for record in labeled
    ]
    rows: list[SweepRow] = []
    namespace = _leaf_level_namespace(config, tax)
    leaf_store = doc_stores.get(namespace)
    if leaf_store is None:
        raise DataError(f"no document embeddings configured for namespace {namespace!r}")
    leaf_query_store = query_stores.get(namespace)
    if leaf_query_store is None:
        raise DataError(f"no query embeddings configured for namespace {namespace!r}")
    rows.append(
        flat_baseline(
            [(record.id, leaf_query_store.vector64(record.id)) for record in labeled],
            truths,
            leaf_store,
            adapters.get(namespace),
            final_list_size,
        )
    )
    rows.extend(
        k_sweep(
            queries,
            truths,
            tax,
            doc_stores,
            adapters,
            config.level_namespaces,
            config.eval_ks,
            final_list_size,
        )
    )
    write_eval_csv(rows, config.out / "eval_report.csv", timings=timings)
    from .figures import save_accuracy_sweep

    figure = save_accuracy_sweep(rows, config.out / "eval_accuracy.png")
    for row in rows:
        label = row.label if row.k is None else f"{row.label} k={row.k}"
        click.echo(
            f"{label}: acc@1 {row.outcome.acc_at[1]:.2f}%, "
            f"mean sims {row.outcome.mean_similarity_count:.1f}"
        )
    click.echo(f"wrote {config.out / 'eval_report.csv'}")
    click.echo(f"wrote {figure}")

    if ablation:
        if config.stopwords is None:
            raise DataError("the ablation harness needs a stopwords file in the configuration")
        from .synth import hash_encoder

        stopwords = corpus_mod.load_stopwords(config.stopwords)
        encoder = hash_encoder(config.ablation_dim, derive_seed(config.seed, "ablation.encoder"))

        # Internal nodes are represented by their subtree: the node text plus
        # the titles of its direct children, so upper levels share vocabulary
        # with queries that describe leaf activities.
        def class_text(code: str) -> str:
            node = tax.node(code)
            parts = [node.title, node.description]
            parts.extend(child.title for child in tax.children(code))
            return " ".join(parts)

        class_texts = {code: class_text(code) for code in tax.nodes}
        inputs = AblationInputs(
            tax=tax,
            class_texts=class_texts,
            query_texts=[(record.id, record.description) for record in labeled],
            truths=truths,
            embed=encoder,
            dim=config.ablation_dim,
            preprocess_config=corpus_mod.PreprocessConfig(stopwords=stopwords),
            ratios=config.split_ratios,
            split_seed=derive_seed(config.seed, "corpus.split"),
            train_config=TrainConfig(
                learning_rate=config.train.learning_rate,
                epochs=config.train.epochs,
                batch_size=config.train.batch_size,
                scale=config.train.scale,
                seed=derive_seed(config.seed, "adapter.train:ablation"),
            ),
            beam_k=config.beam_k,
            final_list_size=final_list_size,
        )
        ablation_rows = ablation_run(inputs)
        write_eval_csv(ablation_rows, config.out / "eval_ablation.csv", timings=timings)
        for row in ablation_rows:
            click.echo(f"ablation {row.label}: acc@1 {row.outcome.acc_at[1]:.2f}%")
        click.echo(f"wrote {config.out / 'eval_ablation.csv'}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Run configuration JSON.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--results", "results_path", type=click.Path(), default=None, help="Classification results JSONL (defaults to <out>/results.jsonl when present).")
@click.option("--cases", "cases_path", type=click.Path(), default=None, help="Case table CSV to audit (defaults to the configured one).")
@click.option("--claimed-mean", type=float, default=None, help="Published average error the case table claims.")
def estimate(
    config_path: str,
    out_dir: str | None,
    results_path: str | None,
    cases_path: str | None,
    claimed_mean: float | None,
) -> None:
    """Turn classified revenue into emission estimates, or audit a case table."""
    config = load_config(config_path)
    if out_dir is not None:
        config.out = Path(out_dir)
    if cases_path is not None:
        config.cases = Path(cases_path)
    if claimed_mean is not None:
        config.case_claimed_mean_ape = claimed_mean

    did_anything = False
    results_file = Path(results_path) if results_path else config.out / "results.jsonl"
    if results_file.exists():
        did_anything = True
        if config.intensities is None:
            raise DataError("the configuration does not name an intensities file")
        tax = _load_taxonomy(config)
        records = _load_enterprises(config)
        table = emission_mod.load_intensities(config.intensities)
        top_codes: dict[str, str] = {}
        with open(results_file, "r", encoding="utf-8") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{results_file}: line {line_no}: malformed JSON ({exc.msg})") from None
                leaves = record.get("leaves") or []
                if leaves:
                    top_codes[record["id"]] = leaves[0]["code"]
        report = emission_mod.build_report(records, top_codes, table, tax)
        emission_mod.write_report_csv(report, config.out / "emission_report.csv")
        summary = {
            "enterprises": len(records),
            "estimated": len(report.rows),
            "skipped": [{"id": rid, "reason": reason} for rid, reason in report.skipped],
            "fallback_events": report.fallback_events,
            "aggregate_mape": report.aggregate_mape,
        }
        write_text_atomic(
            config.out / "emission_summary.json",
            json.dumps(summary, indent=2, sort_keys=True) + "\n",
        )
        from .figures import save_ape_bars

        figure = save_ape_bars(report, config.out / "emission_ape.png")
        aggregate = report.aggregate_mape
        click.echo(
            f"estimated {len(report.rows)} enterprises "
            f"({report.fallback_events} ancestor fallbacks, {len(report.skipped)} skipped)"
        )
        if aggregate is not None:
            click.echo(f"aggregate error against reported figures: {aggregate:.2f}%")
        click.echo(f"wrote {config.out / 'emission_report.csv'}")
        click.echo(f"wrote {figure}")

    if config.cases is not None:
        did_anything = True
        cases = emission_mod.load_cases(config.cases)
        audit = emission_mod.audit_cases(cases, config.case_claimed_mean_ape)
        emission_mod.write_case_audit_csv(audit, config.out / "case_audit.csv")
        summary = {
            "rows": len(audit.rows),
            "column_mean_ape": audit.column_mean_ape,
            "claimed_mean_ape": audit.claimed_mean_ape,
            "mean_diverges": audit.mean_diverges,
            "inconsistent_rows": [row.case.company for row in audit.inconsistent_rows],
        }
        write_text_atomic(
            config.out / "case_audit.json",
            json.dumps(summary, indent=2, sort_keys=True) + "\n",
        )
        from .figures import save_case_audit

        figure = save_case_audit(audit, config.out / "case_audit.png")
        click.echo(
            f"audited {len(audit.rows)} case rows: column mean {audit.column_mean_ape:.2f}%"
        )
        if audit.claimed_mean_ape is not None:
            relation = "diverges from" if audit.mean_diverges else "matches"
            click.echo(
                f"column mean {relation} the claimed average {audit.claimed_mean_ape:.2f}%"
            )
        click.echo(f"wrote {config.out / 'case_audit.csv'}")
        click.echo(f"wrote {figure}")

    if not did_anything:
        raise click.UsageError(
            "nothing to do: no classification results found and no case table configured"
        )


@cli.command(name="theorem-check")
@click.option("--out", "out_dir", type=click.Path(), default="out", show_default=True, help="Output directory.")
@click.option("--b-max", type=int, default=10, show_default=True, help="Largest branching factor in the grid.")
@click.option("--d-max", type=int, default=4, show_default=True, help="Largest depth in the grid.")
def theorem_check(out_dir: str, b_max: int, d_max: int) -> None:
    """Evaluate the entropy inequality and cost model over the standard grid."""
    if b_max < 2:
        raise click.UsageError("--b-max must be at least 2")
    if d_max < 1:
        raise click.UsageError("--d-max must be at least 1")
    out = Path(out_dir)
    grid = standard_grid(tuple(range(2, b_max + 1)), tuple(range(1, d_max + 1)))
    report = check_entropy_reduction(grid)
    with open_atomic(out / "theorem_grid.csv") as handle:
        writer = csv.writer(handle)
        writer.writerow(["b", "d", "p", "H_G", "H_D", "cost_hier", "cost_flat", "violation"])
        for cell in report.cells:
            model = cell.model
            writer.writerow(
                [
                    model.b,
                    model.d,
                    f"{model.p[0]:.6g}",
                    f"{cell.h_grouped:.12g}",
                    f"{cell.h_flat:.12g}",
                    cost_hierarchical(model.b, model.d, 1),
                    cost_flat(model.b, model.d),
                    int(cell.violation),
                ]
            )
    summary = {
        "cells": len(report.cells),
        "violations": len(report.violations),
        "b_max": b_max,
        "d_max": d_max,
    }
    write_text_atomic(out / "theorem_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    from .figures import save_entropy_report

    figure = save_entropy_report(report.cells, out / "theorem_entropy.png")
    click.echo(f"checked {len(report.cells)} cells: {len(report.violations)} violations")
    click.echo(f"wrote {out / 'theorem_grid.csv'}")
    click.echo(f"wrote {figure}")


def main(argv: list[str] | None = None) -> int:
    """Console entry point with the pinned exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except EngineError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except Exception as exc:  # noqa: BLE001
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
