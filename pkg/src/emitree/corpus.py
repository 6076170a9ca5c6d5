"""Enterprise corpus handling: records, text cleanup, augmentation, splits.

Splits and augmentation draw exclusively from the pinned splitmix64 stream in
:mod:`emitree.rng`, so a (data, seed) pair produces the same partition and the
same token replacements on every machine.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

from .errors import DataError
from .rng import Splitmix64
from .taxonomy import Taxonomy

TRAIN = "train"
VALIDATION = "validation"
TEST = "test"

Source = Union[str, os.PathLike, IO[str], Iterable[str]]


@dataclass(frozen=True)
class EnterpriseRecord:
    """One enterprise: free-text description plus optional labels and financials.

    ``revenue_busd`` is annual revenue in billions of US dollars and
    ``reported_emissions_mt`` is self-reported greenhouse gas output in
    megatonnes of CO2 equivalent.
    """

    id: str
    name: str
    description: str
    naics_codes: tuple[str, ...] = ()
    revenue_busd: float | None = None
    reported_emissions_mt: float | None = None


def _iter_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
    elif isinstance(source, io.TextIOBase):
        yield from source
    else:
        yield from source


def _optional_number(record: dict, key: str, line_no: int) -> float | None:
    value = record.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"line {line_no}: {key} must be a number")
    value = float(value)
    if value < 0 or value != value:
        raise DataError(f"line {line_no}: {key} must be a finite non-negative number")
    return value


def load_enterprises(source: Source) -> list[EnterpriseRecord]:
    """Parse JSON-lines enterprise records, reporting 1-based line numbers on errors."""
    records: list[EnterpriseRecord] = []
    first_line: dict[str, int] = {}
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: malformed JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise DataError(f"line {line_no}: expected a JSON object")
        for key in ("id", "name", "description"):
            if not isinstance(record.get(key), str) or not record.get(key):
                raise DataError(f"line {line_no}: {key} must be a non-empty string")
        id_ = record["id"]
        if id_ in first_line:
            raise DataError(f"duplicate id {id_!r} on lines {first_line[id_]} and {line_no}")
        first_line[id_] = line_no
        codes = record.get("naics", [])
        if isinstance(codes, str):
            codes = [codes]
        if not isinstance(codes, list) or any(not isinstance(c, str) or not c for c in codes):
            raise DataError(f"line {line_no}: naics must be a code string or a list of them")
        records.append(
            EnterpriseRecord(
                id=id_,
                name=record["name"],
                description=record["description"],
                naics_codes=tuple(codes),
                revenue_busd=_optional_number(record, "revenue_busd", line_no),
                reported_emissions_mt=_optional_number(record, "reported_emissions_mt", line_no),
            )
        )
    return records


def validate_labels(records: Sequence[EnterpriseRecord], tax: Taxonomy) -> None:
    """Fail when any record carries a label the taxonomy does not define."""
    problems = [
        f"{record.id}: unknown label {code!r}"
        for record in records
        for code in record.naics_codes
        if code not in tax
    ]
    if problems:
        raise DataError("unknown taxonomy labels: " + "; ".join(problems))


@dataclass(frozen=True)
class PreprocessConfig:
    """Text cleanup settings; the stopword list always comes from a file."""

    stopwords: frozenset[str] = frozenset()


def load_stopwords(path: str | os.PathLike) -> frozenset[str]:
    """Read a plain-text stopword file, one lowercase token per line."""
    words = set()
    with open(path, "r", encoding="utf-8") as handle:
        for raw in handle:
            word = raw.strip().lower()
            if word:
                words.add(word)
    return frozenset(words)


def preprocess(text: str, config: PreprocessConfig | None = None) -> str:
    """Lowercase, map punctuation to spaces, collapse whitespace, drop stopwords.

    Applying the function twice gives the same result as applying it once.
    The output may be empty when every token is a stopword.
    """
    stopwords = config.stopwords if config is not None else frozenset()
    lowered = text.lower()
    cleaned = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return " ".join(token for token in cleaned.split() if token not in stopwords)


def preprocess_many(
    texts: Iterable[str], config: PreprocessConfig | None = None
) -> tuple[list[str], int]:
    """Preprocess a batch, returning the outputs and how many came out empty."""
    outputs = [preprocess(text, config) for text in texts]
    return outputs, sum(1 for text in outputs if not text)


def augment_random_replace(text: str, p: float, vocabulary: Sequence[str], seed: int) -> str:
    """Replace each whitespace token with probability ``p`` by a vocabulary draw.

    Draw order is fixed: one uniform per token (in token order), then one
    index draw only for tokens being replaced. ``p=0`` returns the input
    unchanged; any other ``p`` re-joins tokens with single spaces.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"replacement probability must be in [0, 1], got {p}")
    if p == 0.0:
        return text
    if len(vocabulary) == 0:
        raise ValueError("replacement vocabulary is empty")
    rng = Splitmix64(seed)
    tokens = text.split()
    out: list[str] = []
    for token in tokens:
        if rng.uniform() < p:
            out.append(vocabulary[rng.randbelow(len(vocabulary))])
        else:
            out.append(token)
    return " ".join(out)


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic partition of ids into train, validation, and test."""

    by_id: Mapping[str, str]
    seed: int
    ratios: tuple[float, float, float]

    def ids_for(self, part: str) -> list[str]:
        if part not in (TRAIN, VALIDATION, TEST):
            raise ValueError(f"unknown split part {part!r}")
        return sorted(id_ for id_, assigned in self.by_id.items() if assigned == part)

    def counts(self) -> dict[str, int]:
        counts = {TRAIN: 0, VALIDATION: 0, TEST: 0}
        for part in self.by_id.values():
            counts[part] += 1
        return counts


def split(ids: Sequence[str], ratios: tuple[float, float, float], seed: int) -> SplitAssignment:
    """Partition ids deterministically.

    Ids are sorted, shuffled with a splitmix64 Fisher-Yates pass seeded by
    ``seed``, and cut at floor boundaries: validation and test take
    ``floor(ratio * n)`` ids each and the remainder goes to train. A single
    id therefore always lands in train.
    """
    if len(ids) == 0:
        raise DataError("cannot split an empty id list")
    if len(set(ids)) != len(ids):
        raise DataError("duplicate ids in split input")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")
    ordered = sorted(ids)
    rng = Splitmix64(seed)
    rng.shuffle(ordered)
    n = len(ordered)
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    by_id: dict[str, str] = {}
    for position, id_ in enumerate(ordered):
        if position < n_train:
            by_id[id_] = TRAIN
        elif position < n_train + n_val:
            by_id[id_] = VALIDATION
        else:
            by_id[id_] = TEST
    return SplitAssignment(by_id=by_id, seed=seed, ratios=tuple(ratios))


def training_pairs(
    records: Sequence[EnterpriseRecord],
    tax: Taxonomy,
    level: int,
    assignment: SplitAssignment | None = None,
    part: str = TRAIN,
) -> list[tuple[str, str]]:
    """(enterprise id, class code) pairs at ``level``, derived from the labels.

    Each label contributes the ancestor of the labeled node at the requested
    level (or the node itself when it already sits there). Labels with no
    ancestor at that level are skipped.
    """
    pairs: list[tuple[str, str]] = []
    for record in records:
        if assignment is not None and assignment.by_id.get(record.id) != part:
            continue
        for code in record.naics_codes:
            ancestor = tax.ancestor_at_level(code, level)
            if ancestor is not None:
                pairs.append((record.id, ancestor))
    return pairs
