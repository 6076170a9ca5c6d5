"""Batch sentence-embedding exporter and HTTP inference server.

The package turns a JSONL texts file (``{"id", "text"}`` per line) into an
embedding file any cosine-retrieval consumer can load: the binary EMB1
layout or JSON lines, one vector per id in input order. Encoders are
pluggable through a model identifier string: ``hash:<dim>`` selects the
built-in deterministic feature-hashing encoder, anything else loads a
pretrained sentence-transformer. The same encoders can be served over HTTP
via the ``/embed`` wire protocol.
"""

from .encoders import DEFAULT_MODEL, HashEncoder, SentenceTransformerEncoder, resolve_encoder
from .errors import ExportError, ModelLoadError
from .formats import (
    EMB_MAGIC,
    EMB_VERSION,
    FORMAT_BINARY,
    FORMAT_JSONL,
    FORMATS,
    write_embedding_file,
)
from .jobs import ExportJob, ExportSummary, load_texts, run_export
from .server import create_app, serve

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "EMB_MAGIC",
    "EMB_VERSION",
    "ExportError",
    "ExportJob",
    "ExportSummary",
    "FORMATS",
    "FORMAT_BINARY",
    "FORMAT_JSONL",
    "HashEncoder",
    "ModelLoadError",
    "SentenceTransformerEncoder",
    "create_app",
    "load_texts",
    "resolve_encoder",
    "run_export",
    "serve",
    "write_embedding_file",
]
