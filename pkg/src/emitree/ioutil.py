"""Atomic file writing helpers.

Every report or artifact this package produces is written to a temporary
file in the destination directory and then renamed into place, so readers
never observe a half-written file and interrupted runs leave no partial
output under the final name.
"""

from __future__ import annotations

import contextlib
import os
import tempfile
from typing import IO, Iterator


@contextlib.contextmanager
def open_atomic(path: str | os.PathLike, mode: str = "w") -> Iterator[IO]:
    """Open a temporary file that replaces ``path`` on a clean exit."""
    if mode not in ("w", "wb"):
        raise ValueError(f"open_atomic supports 'w' and 'wb', got {mode!r}")
    final = os.fspath(path)
    directory = os.path.dirname(final) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    handle = os.fdopen(fd, mode, encoding="utf-8" if mode == "w" else None, newline="" if mode == "w" else None)
    try:
        yield handle
        handle.flush()
        os.fsync(handle.fileno())
        handle.close()
        os.replace(tmp_path, final)
    except BaseException:
        handle.close()
        with contextlib.suppress(OSError):
            os.unlink(tmp_path)
        raise


def write_bytes_atomic(path: str | os.PathLike, data: bytes) -> None:
    with open_atomic(path, "wb") as handle:
        handle.write(data)


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    with open_atomic(path, "w") as handle:
        handle.write(text)
