"""Exception types shared across the package.

Plain ValueError covers argument/domain errors; the subclasses below exist so
the CLI can map failures onto its documented exit codes (2 input error,
3 degenerate data, 4 unsupported combination).
"""


class DegenerateDataError(ValueError):
    """Data cannot support density estimation (e.g. a constant response)."""


class UnsupportedCriterionError(ValueError):
    """Requested criterion/response combination is not supported."""


class ModelFormatError(ValueError):
    """A persisted model file is malformed, truncated, or wrong version."""
