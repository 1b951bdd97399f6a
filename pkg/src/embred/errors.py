"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError exits 2, every other
EmbredError exits 1.
"""


class EmbredError(Exception):
    """Base class for all toolkit errors."""


class FormatError(EmbredError):
    """A file does not parse under its declared on-disk format."""


class DataError(EmbredError):
    """Parsed content violates a data invariant (range, duplicate, NaN)."""


class AlignmentError(EmbredError):
    """Feature/outcome alignment produced an empty intersection."""


class ConfigError(EmbredError):
    """Invalid configuration or parameters."""


class ShapeError(EmbredError):
    """Matrix shape does not match the model or table contract."""


class NumericsError(EmbredError):
    """Non-finite values encountered during optimization."""


class UndefinedMetricError(EmbredError):
    """A metric is undefined for the given inputs (e.g. constant vector)."""


class DegenerateSampleError(EmbredError):
    """A bootstrap replicate could not draw a usable sample."""


class IncompleteGridError(EmbredError):
    """A sweep grid is missing cells required for a report."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        preview = ", ".join(repr(m) for m in self.missing[:8])
        if len(self.missing) > 8:
            preview += f", ... ({len(self.missing)} total)"
        super().__init__(f"grid is missing cells: {preview}")


class ExtractError(EmbredError):
    """Embedding extraction failed (model/tokenizer mismatch)."""
