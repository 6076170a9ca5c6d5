"""Text encoders behind the export and serve commands.

Two families share one interface (a ``dim`` attribute and an
``encode(texts) -> float32 matrix`` method):

- ``hash:<dim>`` builds a dependency-free feature-hashing encoder: each
  lowercased alphanumeric token flips one signed bucket of the output
  vector, and the result is unit-normalized. It downloads nothing, encodes
  a text the same way at any batch size, and is meant for deterministic
  desk-scale runs and tests, not as a substitute for a learned model.
- any other identifier is loaded as a pretrained sentence-transformer
  (requires the ``sentence-transformers`` package and reachable weights);
  inference runs in evaluation mode, so a fixed model and fixed inputs
  yield a fixed output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ExportError, ModelLoadError

HASH_MODEL_PREFIX = "hash:"
DEFAULT_MODEL = "hash:256"

_TOKENS = re.compile(r"[a-z0-9]+")
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a64(token: str) -> int:
    value = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        value = ((value ^ byte) * _FNV_PRIME) & _MASK64
    return value


@dataclass(frozen=True)
class HashEncoder:
    """Signed feature hashing into ``dim`` buckets, unit-normalized.

    A text with no alphanumeric tokens cannot hash anywhere, so it becomes
    the first basis vector: the encoder never returns a zero vector, which
    keeps every exported file loadable by cosine-based consumers.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ExportError(f"hash encoder dimension must be >= 1, got {self.dim}")

    @property
    def name(self) -> str:
        return f"{HASH_MODEL_PREFIX}{self.dim}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        matrix = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _TOKENS.findall(text.lower())
            if not tokens:
                matrix[row, 0] = 1.0
                continue
            for token in tokens:
                digest = _fnv1a64(token)
                sign = 1.0 if digest & (1 << 63) else -1.0
                matrix[row, digest % self.dim] += sign
            norm = float(np.linalg.norm(matrix[row]))
            if norm == 0.0:
                # opposite-signed tokens can cancel exactly; fall back like
                # the tokenless case so the vector stays usable
                matrix[row] = 0.0
                matrix[row, 0] = 1.0
            else:
                matrix[row] /= norm
        return matrix.astype(np.float32)


class SentenceTransformerEncoder:
    """A pretrained sentence-transformer model, loaded once and frozen."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelLoadError(
                f"model {model_id!r} needs the sentence-transformers package; "
                f"install the 'transformers' extra"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load sentence-transformer {model_id!r}: {exc}") from exc
        self.name = model_id

    @property
    def dim(self) -> int:
        return int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(
            list(texts),
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float32)


def resolve_encoder(model_id: str):
    """Build the encoder named by a model identifier string."""
    if model_id.startswith(HASH_MODEL_PREFIX):
        raw = model_id[len(HASH_MODEL_PREFIX) :]
        try:
            dim = int(raw)
        except ValueError:
            raise ExportError(
                f"hash encoder dimension must be an integer, got {raw!r}"
            ) from None
        return HashEncoder(dim=dim)
    return SentenceTransformerEncoder(model_id)
