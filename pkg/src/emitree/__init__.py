"""Hierarchical sector classification and emission estimation.

The package classifies free-text enterprise descriptions into a prefix-coded
industry taxonomy by cosine similarity between query and class embeddings,
searching the tree level by level with a beam instead of scoring every leaf.
A small linear adapter can be fitted on labeled pairs to sharpen the
embedding space. Classified sectors drive a revenue-times-intensity
greenhouse-gas estimate, and a side module checks the information-theoretic
and cost arguments for grouped search on synthetic grids.

Main entry points:

- :func:`parse_taxonomy` / :class:`Taxonomy` load and navigate the tree.
- :func:`load_embeddings` / :class:`EmbeddingStore` handle vector storage.
- :func:`group_reason` and :func:`flat_classify` rank leaves for a query.
- :func:`train` fits an :class:`Adapter`, :func:`mnr_loss` is its objective.
- :func:`build_report` and :func:`mape` turn rankings into emission figures.
- :func:`check_entropy_reduction`, :func:`cost_flat`, and
  :func:`cost_hierarchical` evaluate the search-efficiency claims.
- :mod:`emitree.cli` exposes all of the above as subcommands.
"""

from .adapter import (
    Adapter,
    TrainConfig,
    TrainResult,
    finite_diff_check,
    identity_adapter,
    load_adapter,
    mnr_gradient,
    mnr_loss,
    save_adapter,
    train,
)
from .corpus import (
    EnterpriseRecord,
    PreprocessConfig,
    SplitAssignment,
    augment_random_replace,
    load_enterprises,
    load_stopwords,
    preprocess,
    split,
    training_pairs,
    validate_labels,
)
from .embedding import (
    EmbeddingStore,
    cosine,
    fetch_embeddings,
    flat_mips,
    load_embeddings,
    write_embeddings,
)
from .emission import (
    CaseAudit,
    EmissionReport,
    IntensityTable,
    audit_cases,
    build_report,
    estimate,
    load_cases,
    load_intensities,
    mape,
    resolve_intensity,
)
from .errors import DataError, EngineError, FormatError
from .evaluation import acc_at_k, evaluate, flat_baseline, k_sweep
from .reasoning import (
    BeamConfig,
    ClassificationResult,
    classify_batch,
    flat_classify,
    group_reason,
)
from .rng import Splitmix64, derive_seed
from .taxonomy import ROOT_CODE, Taxonomy, TaxonomyNode, parse_taxonomy, write_taxonomy
from .theory import (
    EntropyModel,
    check_entropy_reduction,
    cost_flat,
    cost_hierarchical,
    entropy_flat,
    entropy_hierarchical,
    entropy_single,
)

__version__ = "0.1.0"

__all__ = [
    "Adapter",
    "BeamConfig",
    "CaseAudit",
    "ClassificationResult",
    "DataError",
    "EmbeddingStore",
    "EmissionReport",
    "EngineError",
    "EnterpriseRecord",
    "EntropyModel",
    "FormatError",
    "IntensityTable",
    "PreprocessConfig",
    "ROOT_CODE",
    "SplitAssignment",
    "Splitmix64",
    "Taxonomy",
    "TaxonomyNode",
    "TrainConfig",
    "TrainResult",
    "acc_at_k",
    "audit_cases",
    "augment_random_replace",
    "build_report",
    "check_entropy_reduction",
    "classify_batch",
    "cosine",
    "cost_flat",
    "cost_hierarchical",
    "derive_seed",
    "entropy_flat",
    "entropy_hierarchical",
    "entropy_single",
    "estimate",
    "evaluate",
    "fetch_embeddings",
    "finite_diff_check",
    "flat_baseline",
    "flat_classify",
    "flat_mips",
    "group_reason",
    "identity_adapter",
    "k_sweep",
    "load_adapter",
    "load_cases",
    "load_embeddings",
    "load_enterprises",
    "load_intensities",
    "load_stopwords",
    "mape",
    "mnr_gradient",
    "mnr_loss",
    "parse_taxonomy",
    "preprocess",
    "resolve_intensity",
    "save_adapter",
    "split",
    "train",
    "training_pairs",
    "validate_labels",
    "write_embeddings",
    "write_taxonomy",
]
