"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: usage errors -> 1, data errors -> 2,
model errors -> 3.
"""


class PropspanError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(PropspanError):
    """A corpus, label, embedding or sidecar file violates its format."""


class AlignmentError(PropspanError):
    """Two token-aligned resources disagree about token counts or keys."""


class ModelError(PropspanError):
    """Model configuration, dimensions or serialized bytes are invalid."""


class MissingEmbeddingError(PropspanError):
    """An embedding lookup failed under the strict out-of-vocabulary policy."""


class CoverageError(PropspanError):
    """Predictions do not cover the gold spans one-to-one."""
