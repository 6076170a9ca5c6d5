"""Writers for the two embedding file formats consumers load.

emb-binary ("EMB1"), little-endian: magic ``EMB1``, version byte 1, u32
dimension, u64 record count, then per record a u16 id byte length, the
UTF-8 id bytes, and ``dim`` float32 components. emb-jsonl: one
``{"id": ..., "vector": [...]}`` object per line, dimension fixed by the
first line. Files are written atomically (temporary file then rename), so
a crashed export never leaves a half-written file behind.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ExportError

EMB_MAGIC = b"EMB1"
EMB_VERSION = 1

FORMAT_BINARY = "emb-binary"
FORMAT_JSONL = "emb-jsonl"
FORMATS = (FORMAT_BINARY, FORMAT_JSONL)

_HEADER = struct.Struct("<4sBIQ")
_ID_LEN = struct.Struct("<H")
_MAX_ID_BYTES = 0xFFFF


def _checked(entries: Sequence[tuple[str, np.ndarray]], dim: int) -> Iterator[tuple[bytes, np.ndarray]]:
    for index, (id_, vector) in enumerate(entries):
        raw = id_.encode("utf-8")
        if not raw:
            raise ExportError(f"record {index} has an empty id")
        if len(raw) > _MAX_ID_BYTES:
            raise ExportError(f"id of record {index} exceeds {_MAX_ID_BYTES} bytes")
        row = np.asarray(vector, dtype=np.float32)
        if row.ndim != 1 or row.size != dim:
            raise ExportError(
                f"record {index} ({id_!r}) has {row.size} components, expected {dim}"
            )
        if not np.all(np.isfinite(row)):
            raise ExportError(f"record {index} ({id_!r}) has non-finite components")
        yield raw, row


def write_embedding_file(
    path: str | os.PathLike,
    entries: Sequence[tuple[str, np.ndarray]],
    dim: int,
    format: str = FORMAT_BINARY,
) -> None:
    """Write (id, vector) pairs in order, validating ids and dimensions."""
    if format not in FORMATS:
        raise ExportError(f"unknown embedding format {format!r}")
    if dim < 1:
        raise ExportError(f"dimension must be >= 1, got {dim}")
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        mode="wb", dir=target.parent, prefix=f".{target.name}.", delete=False
    )
    try:
        with handle:
            if format == FORMAT_BINARY:
                handle.write(_HEADER.pack(EMB_MAGIC, EMB_VERSION, dim, len(entries)))
                for raw_id, row in _checked(entries, dim):
                    handle.write(_ID_LEN.pack(len(raw_id)))
                    handle.write(raw_id)
                    handle.write(row.astype("<f4").tobytes())
            else:
                for (id_, _), (_, row) in zip(entries, _checked(entries, dim)):
                    record = {"id": id_, "vector": [float(value) for value in row]}
                    handle.write((json.dumps(record) + "\n").encode("utf-8"))
        os.replace(handle.name, target)
    except BaseException:
        os.unlink(handle.name)
        raise
