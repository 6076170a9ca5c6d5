"""Error taxonomy for the exporter.

``ExportError`` marks every failure a caller can fix: bad input files, bad
job parameters, and models that cannot be loaded. Anything else escaping the
library is an unexpected runtime failure.
"""


class ExportError(Exception):
    """Invalid input data, job parameters, or model identifier."""


class ModelLoadError(ExportError):
    """The requested encoder model could not be constructed."""
