"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition (shape mismatch,
    out-of-range parameter, non-finite data)."""


class NiftiError(Exception):
    """Base class for NIfTI read/write failures."""


class NiftiFormatError(NiftiError):
    """The file is not a NIfTI-1 stream (bad magic, bad header size)."""


class UnsupportedDatatypeError(NiftiError):
    """The file uses a datatype code this reader does not handle."""


class CorruptFileError(NiftiError):
    """Header parsed but the data section is truncated or inconsistent."""


class InfeasibleMaskError(InvalidInputError):
    """The fully sampled central block already exceeds the retention budget
    implied by the acceleration factor.

    `max_feasible_accel` is the largest acceleration for which the requested
    center fraction still fits the budget.
    """

    def __init__(self, message, max_feasible_accel):
        super().__init__(message)
        self.max_feasible_accel = max_feasible_accel


class UndefinedMetricError(Exception):
    """A metric has no defined value for these inputs (e.g. an empty
    label set for a surface distance). Raised instead of returning NaN."""
