"""Synthetic taxonomies, embeddings, and a tiny deterministic text encoder.

These generators back the desk-scale experiments: uniform and randomly shaped
trees for cost accounting and retrieval-equivalence checks, noisy-copy query
sets for end-to-end adapter runs, and a feature-hashing sentence encoder that
embeds text with no model download (useful for demos and the ablation
harness, not a substitute for a learned encoder).
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .embedding import EmbeddingStore
from .rng import Splitmix64, fnv1a64, mix64
from .taxonomy import Taxonomy, TaxonomyNode, build_taxonomy


def uniform_tree(b: int, d: int) -> Taxonomy:
    """A complete tree: levels ``1..d``, every node with exactly ``b`` children.

    Codes are two digits per level (``b`` at most 99), so prefix parent
    resolution applies directly.
    """
    if not 1 <= b <= 99:
        raise ValueError(f"branching must be in [1, 99], got {b}")
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    nodes: list[TaxonomyNode] = []
    frontier = [""]
    for level in range(1, d + 1):
        next_frontier = []
        for parent in frontier:
            for child in range(1, b + 1):
                code = f"{parent}{child:02d}"
                nodes.append(
                    TaxonomyNode(
                        code=code,
                        level=level,
                        title=f"node {code}",
                        description=f"synthetic node {code} at level {level}",
                    )
                )
                next_frontier.append(code)
        frontier = next_frontier
    return build_taxonomy(nodes)


def leveled_tree(counts: Sequence[int], levels: Sequence[int] | None = None) -> Taxonomy:
    """A tree with a fixed node count per level, parents assigned round-robin.

    ``levels`` defaults to ``1..len(counts)``. Codes are built so that each
    child appends digits to its parent's code, keeping prefix resolution
    valid; every non-top level must fit within 999 children per parent.
    """
    if not counts:
        raise ValueError("counts must not be empty")
    if levels is None:
        levels = list(range(1, len(counts) + 1))
    if len(levels) != len(counts):
        raise ValueError("levels and counts must have equal length")
    nodes: list[TaxonomyNode] = []
    previous: list[str] = []
    for depth, (count, level) in enumerate(zip(counts, levels)):
        if count < 1:
            raise ValueError(f"level {level} must have at least one node")
        current: list[str] = []
        if depth == 0:
            width = max(2, len(str(count + 9)))
            for i in range(count):
                current.append(f"{i + 10:0{width}d}" if count + 9 < 100 else f"{i + 100}")
        else:
            if count < len(previous):
                raise ValueError("each level must be at least as wide as its parent level")
            per_parent = [0] * len(previous)
            for i in range(count):
                per_parent[i % len(previous)] += 1
            if max(per_parent) > 999:
                raise ValueError("a parent would exceed 999 children")
            for parent, child_count in zip(previous, per_parent):
                digits = 1 if max(per_parent) < 10 else (2 if max(per_parent) < 100 else 3)
                for j in range(child_count):
                    current.append(f"{parent}{j + 1:0{digits}d}")
        for code in current:
            nodes.append(
                TaxonomyNode(
                    code=code,
                    level=level,
                    title=f"node {code}",
                    description=f"synthetic node {code} at level {level}",
                )
            )
        previous = current
    return build_taxonomy(nodes)


def random_tree(seed: int, max_branching: int = 6, max_depth: int = 3) -> Taxonomy:
    """A randomly shaped tree with bounded branching and depth.

    Depth is drawn uniformly in ``[1, max_depth]`` and every node's child
    count uniformly in ``[1, max_branching]``; all leaves sit on the final
    level so that every chain has the same declared depth.
    """
    if max_branching < 1 or max_depth < 1:
        raise ValueError("max_branching and max_depth must be >= 1")
    rng = Splitmix64(seed)
    depth = 1 + rng.randbelow(max_depth)
    nodes: list[TaxonomyNode] = []
    frontier = [""]
    for level in range(1, depth + 1):
        next_frontier = []
        for parent in frontier:
            children = 1 + rng.randbelow(max_branching)
            for child in range(1, children + 1):
                code = f"{parent}{child:02d}"
                nodes.append(
                    TaxonomyNode(
                        code=code,
                        level=level,
                        title=f"node {code}",
                        description=f"random node {code}",
                    )
                )
                next_frontier.append(code)
        frontier = next_frontier
    return build_taxonomy(nodes)


def unit_rows(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` random unit vectors as float32 rows."""
    rows = rng.standard_normal((n, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def node_stores(
    tax: Taxonomy, dim: int, seed: int, shared: bool = False
) -> dict[str, EmbeddingStore]:
    """Random unit embeddings for every node.

    With ``shared=False`` each level gets its own ``level<N>`` namespace
    holding that level's nodes; with ``shared=True`` a single ``shared``
    namespace holds every node (so carried-forward leaves stay scoreable at
    deeper levels).
    """
    rng = np.random.default_rng(seed)
    if shared:
        codes = sorted(tax.nodes)
        rows = unit_rows(len(codes), dim, rng)
        return {"shared": EmbeddingStore.from_entries("shared", dim, zip(codes, rows))}
    stores = {}
    for level in tax.levels:
        codes = [node.code for node in tax.nodes_at_level(level)]
        rows = unit_rows(len(codes), dim, rng)
        stores[f"level{level}"] = EmbeddingStore.from_entries(
            f"level{level}", dim, zip(codes, rows)
        )
    return stores


def level_namespace_map(tax: Taxonomy, shared: bool = False) -> dict[int, str]:
    if shared:
        return {level: "shared" for level in tax.levels}
    return {level: f"level{level}" for level in tax.levels}


def noisy_query_set(
    tax: Taxonomy,
    doc_rows: Mapping[str, np.ndarray],
    queries_per_leaf: int,
    noise_sigma: float,
    seed: int,
    dim: int,
) -> tuple[list[tuple[str, np.ndarray]], dict[str, set[str]]]:
    """Queries built as unit-normalized noisy copies of leaf documents."""
    rng = np.random.default_rng(seed)
    queries: list[tuple[str, np.ndarray]] = []
    truths: dict[str, set[str]] = {}
    for leaf in tax.leaves():
        doc = np.asarray(doc_rows[leaf.code], dtype=np.float64)
        for i in range(queries_per_leaf):
            noise = rng.standard_normal(dim)
            vec = doc + noise_sigma * noise
            vec /= np.linalg.norm(vec)
            qid = f"q-{leaf.code}-{i}"
            queries.append((qid, vec.astype(np.float32)))
            truths[qid] = {leaf.code}
    return queries, truths


def misaligned_query_set(
    tax: Taxonomy,
    doc_rows: Mapping[str, np.ndarray],
    queries_per_leaf: int,
    noise_sigma: float,
    seed: int,
    dim: int,
    rotated_dims: int,
) -> tuple[list[tuple[str, np.ndarray]], dict[str, set[str]]]:
    """Queries drawn through a miscalibrated copy of the document encoder.

    Each query is the leaf document passed through a seeded orthogonal
    rotation of a fixed ``rotated_dims``-wide subspace, plus isotropic noise.
    The rotation models a query encoder whose geometry disagrees with the
    document encoder on part of the space: a purely linear distortion, so a
    trained linear adapter can undo what the identity adapter cannot. By
    contrast :func:`noisy_query_set` keeps signal and noise in the same
    directions, which no linear map can separate, so use this set when an
    experiment needs adapter training to show a real gain.
    """
    if not 1 <= rotated_dims <= dim:
        raise ValueError(f"rotated dims must be in [1, {dim}], got {rotated_dims}")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    block, _ = np.linalg.qr(rng.standard_normal((rotated_dims, rotated_dims)))
    mix = np.eye(dim)
    mix[:rotated_dims, :rotated_dims] = block
    encoder = basis @ mix @ basis.T
    queries: list[tuple[str, np.ndarray]] = []
    truths: dict[str, set[str]] = {}
    for leaf in tax.leaves():
        doc = encoder @ np.asarray(doc_rows[leaf.code], dtype=np.float64)
        for i in range(queries_per_leaf):
            noise = rng.standard_normal(dim)
            vec = doc + noise_sigma * noise
            vec /= np.linalg.norm(vec)
            qid = f"q-{leaf.code}-{i}"
            queries.append((qid, vec.astype(np.float32)))
            truths[qid] = {leaf.code}
    return queries, truths


def correlated_class_docs(
    tax: Taxonomy, dim: int, seed: int, common_strength: float = 2.5
) -> dict[str, np.ndarray]:
    """Unit class documents sharing a strong common direction.

    Real sentence embeddings cluster around a shared mean; this reproduces
    that geometry so a linear adapter has something to gain by suppressing
    the common component.
    """
    rng = np.random.default_rng(seed)
    mean = rng.standard_normal(dim)
    mean /= np.linalg.norm(mean)
    docs: dict[str, np.ndarray] = {}
    for code in sorted(tax.nodes):
        specific = rng.standard_normal(dim)
        specific /= np.linalg.norm(specific)
        vec = specific + common_strength * mean
        vec /= np.linalg.norm(vec)
        docs[code] = vec.astype(np.float32)
    return docs


def hash_encoder(dim: int, seed: int = 0) -> Callable[[str], np.ndarray]:
    """A deterministic feature-hashing sentence encoder.

    Each whitespace token is hashed (64-bit FNV-1a mixed with the seed) into
    one of ``dim`` signed buckets; the bucket sums are L2-normalized. Empty
    text maps to a fixed unit vector on the first axis so no output ever has
    zero norm.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    salt = mix64(seed)

    def encode(text: str) -> np.ndarray:
        vec = np.zeros(dim, dtype=np.float64)
        for token in text.split():
            h = mix64(fnv1a64(token.encode("utf-8")) ^ salt)
            bucket = h % dim
            sign = 1.0 if (h >> 63) == 0 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)

    return encode
