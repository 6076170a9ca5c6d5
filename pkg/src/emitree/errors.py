"""Exception types shared across the package.

The command line maps these onto exit codes: bad flags or arguments exit 1,
``DataError`` (anything wrong with input data or files) exits 2, and every
other failure exits 3.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for failures raised by this package."""


class DataError(EngineError):
    """Invalid input data: taxonomies, corpora, tables, or vector files."""


class FormatError(DataError):
    """Malformed file container (bad magic, version, or truncation)."""
