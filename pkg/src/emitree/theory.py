"""Entropy and cost model for hierarchical versus flat classification.

The model assumes a uniform tree with branching ``b`` and depth ``d`` and a
per-level accuracy ``p_i``, with the residual error mass spread uniformly
over the remaining classes. Under that model the hierarchical route leaves

    H_G = sum_i entropy_single(p_i, b)

bits of uncertainty, while a flat classifier with the same end-to-end
accuracy ``prod(p_i)`` over ``b**d`` leaves keeps

    H_D = entropy_single(prod(p_i), b**d).

``check_entropy_reduction`` evaluates ``H_G <= H_D`` cell by cell and reports
violations rather than asserting the inequality axiomatically. The cost side
compares similarity evaluations: ``b**d`` for flat scoring versus the beam
recurrence, which collapses to ``b * d`` at beam width 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

_INT64_MAX = 2**63 - 1

EQUALITY_TOLERANCE = 1e-12


def entropy_single(p: float, k: int) -> float:
    """Residual uncertainty (bits) of a ``k``-way decision answered correctly
    with probability ``p``, errors uniform over the other ``k - 1`` classes."""
    if k < 1:
        raise ValueError(f"class count must be >= 1, got {k}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"accuracy must be in (0, 1], got {p}")
    if k == 1:
        if p != 1.0:
            raise ValueError(f"a single-class decision cannot have accuracy {p}")
        return 0.0
    if p == 1.0:
        return 0.0
    return -(p * math.log2(p)) - (1.0 - p) * math.log2((1.0 - p) / (k - 1))


@dataclass(frozen=True)
class EntropyModel:
    """Uniform-tree error model: branching, depth, and per-level accuracies."""

    b: int
    d: int
    p: tuple[float, ...]

    def __post_init__(self):
        if self.b < 2:
            raise ValueError(f"branching must be >= 2, got {self.b}")
        if self.d < 1:
            raise ValueError(f"depth must be >= 1, got {self.d}")
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if len(self.p) != self.d:
            raise ValueError(f"expected {self.d} per-level accuracies, got {len(self.p)}")
        for value in self.p:
            if not 0.0 < value <= 1.0:
                raise ValueError(f"accuracy must be in (0, 1], got {value}")

    @classmethod
    def uniform(cls, b: int, d: int, p: float) -> "EntropyModel":
        return cls(b=b, d=d, p=(p,) * d)

    @property
    def flat_accuracy(self) -> float:
        return math.prod(self.p)


def entropy_hierarchical(model: EntropyModel) -> float:
    """Residual bits after the level-by-level route."""
    return sum(entropy_single(p, model.b) for p in model.p)


def entropy_flat(model: EntropyModel) -> float:
    """Residual bits after one flat decision with the same end-to-end accuracy."""
    return entropy_single(model.flat_accuracy, _checked_power(model.b, model.d))


@dataclass(frozen=True)
class EntropyCell:
    model: EntropyModel
    h_grouped: float
    h_flat: float
    violation: bool

    @property
    def gap(self) -> float:
        return self.h_flat - self.h_grouped


@dataclass
class EntropyReport:
    cells: list[EntropyCell]

    @property
    def violations(self) -> list[EntropyCell]:
        return [cell for cell in self.cells if cell.violation]


def check_entropy_reduction(
    models: Iterable[EntropyModel], tolerance: float = EQUALITY_TOLERANCE
) -> EntropyReport:
    """Evaluate ``H_G <= H_D`` per model; cells beyond ``tolerance`` are flagged."""
    cells = []
    for model in models:
        h_grouped = entropy_hierarchical(model)
        h_flat = entropy_flat(model)
        cells.append(
            EntropyCell(
                model=model,
                h_grouped=h_grouped,
                h_flat=h_flat,
                violation=h_grouped > h_flat + tolerance,
            )
        )
    return EntropyReport(cells=cells)


DEFAULT_GRID_ACCURACIES = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99)


def standard_grid(
    b_values: Sequence[int] = tuple(range(2, 11)),
    d_values: Sequence[int] = tuple(range(1, 5)),
    p_values: Sequence[float] = DEFAULT_GRID_ACCURACIES,
) -> list[EntropyModel]:
    """The default evaluation grid, keeping only cells with ``p >= 1/b``."""
    return [
        EntropyModel.uniform(b, d, p)
        for b in b_values
        for d in d_values
        for p in p_values
        if p >= 1.0 / b
    ]


def _checked_power(b: int, d: int) -> int:
    result = b**d
    if result > _INT64_MAX:
        raise OverflowError(f"{b}**{d} exceeds the 64-bit integer range")
    return result


def cost_flat(b: int, d: int) -> int:
    """Similarity evaluations for flat scoring of all ``b**d`` leaves."""
    if b < 2:
        raise ValueError(f"branching must be >= 2, got {b}")
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    return _checked_power(b, d)


def cost_hierarchical(b: int, d: int, k: int = 1) -> int:
    """Similarity evaluations for beam search over a uniform tree.

    Level 1 scores the root's ``b`` children; every later level scores ``b``
    children for each of the ``min(k, previous candidates)`` retained nodes.
    At ``k = 1`` this is exactly ``b * d``, and for ``k >= b**(d-1)`` it
    counts every internal node's children once.
    """
    if b < 2:
        raise ValueError(f"branching must be >= 2, got {b}")
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    if k < 1:
        raise ValueError(f"beam width must be >= 1, got {k}")
    total = 0
    candidates = b
    for _ in range(d):
        total += candidates
        if total > _INT64_MAX:
            raise OverflowError(f"hierarchical cost for b={b}, d={d}, k={k} exceeds 64-bit range")
        candidates = min(k, candidates) * b
    return total
