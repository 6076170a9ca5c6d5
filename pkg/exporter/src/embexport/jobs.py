"""Export jobs: a texts file in, an embedding file out.

The input is JSON lines, one ``{"id": "...", "text": "..."}`` object per
line, ids unique, order preserved end to end. Texts are encoded in batches
(a convenience for transformer models; the hash encoder is batch-size
independent by construction), optionally unit-normalized, and written in
either embedding format. Empty texts are legal but presumed accidental, so
the job warns and embeds them as-is.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .encoders import DEFAULT_MODEL, resolve_encoder
from .errors import ExportError
from .formats import FORMAT_BINARY, FORMATS, write_embedding_file


@dataclass(frozen=True)
class ExportJob:
    """Everything one export run needs, validated up front."""

    texts_path: str
    output_path: str
    model: str = DEFAULT_MODEL
    format: str = FORMAT_BINARY
    batch_size: int = 32
    normalize: bool = True

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ExportError(f"unknown embedding format {self.format!r}")
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ExportSummary:
    count: int
    dim: int
    empty_texts: int
    output_path: str
    format: str


def load_texts(path: str | os.PathLike) -> list[tuple[str, str]]:
    """Parse a texts file into (id, text) pairs, keeping file order."""
    entries: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {line_no}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise ExportError(f"line {line_no}: expected an object, got {type(record).__name__}")
            id_ = record.get("id")
            text = record.get("text")
            if not isinstance(id_, str) or not id_:
                raise ExportError(f"line {line_no}: 'id' must be a non-empty string")
            if not isinstance(text, str):
                raise ExportError(f"line {line_no}: 'text' must be a string")
            if id_ in seen:
                raise ExportError(f"line {line_no}: duplicate id {id_!r}")
            seen.add(id_)
            entries.append((id_, text))
    return entries


def _batched(texts: Sequence[str], size: int):
    for start in range(0, len(texts), size):
        yield texts[start : start + size]


def run_export(job: ExportJob) -> ExportSummary:
    """Encode every text in the job and write the embedding file."""
    entries = load_texts(job.texts_path)
    if not entries:
        raise ExportError(f"texts file {job.texts_path!r} has no records")
    encoder = resolve_encoder(job.model)
    texts = [text for _, text in entries]
    empty = sum(1 for text in texts if not text.strip())
    if empty:
        warnings.warn(f"{empty} empty texts embedded as-is", stacklevel=2)
    blocks = [encoder.encode(batch) for batch in _batched(texts, job.batch_size)]
    matrix = np.vstack(blocks).astype(np.float32)
    if matrix.shape != (len(entries), encoder.dim):
        raise ExportError(
            f"encoder returned shape {matrix.shape}, expected {(len(entries), encoder.dim)}"
        )
    if job.normalize:
        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        if np.any(norms == 0.0):
            bad = entries[int(np.argmin(norms))][0]
            raise ExportError(f"cannot normalize zero vector for id {bad!r}")
        matrix = (matrix / norms[:, np.newaxis]).astype(np.float32)
    write_embedding_file(
        job.output_path,
        list(zip((id_ for id_, _ in entries), matrix)),
        dim=encoder.dim,
        format=job.format,
    )
    return ExportSummary(
        count=len(entries),
        dim=encoder.dim,
        empty_texts=empty,
        output_path=str(job.output_path),
        format=job.format,
    )
