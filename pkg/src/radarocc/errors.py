"""Exception types shared across the package."""

from __future__ import annotations


class RadarOccError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RadarOccError, ValueError):
    """An argument violates a documented precondition."""


class RegionOutOfBoundsError(InvalidArgumentError):
    """A requested evaluation region does not fit inside the grid."""

    def __init__(self, n: int, detail: str):
        super().__init__(f"region n={n} out of bounds: {detail}")
        self.n = n


class ParseError(RadarOccError):
    """A file on disk does not match the expected layout."""

    def __init__(self, path, expected: str, actual: str):
        super().__init__(f"{path}: expected {expected}, got {actual}")
        self.path = path
        self.expected = expected
        self.actual = actual


class InsufficientDataError(RadarOccError):
    """Not enough samples to satisfy the request."""


class ExtrapolationError(RadarOccError):
    """A timestamp falls outside the supported trajectory interval."""


class GenerationError(RadarOccError):
    """Scene generation failed to satisfy placement constraints."""


class StateError(RadarOccError):
    """An object is not in a usable state (e.g. untrained checkpoint)."""


class TrainingAbort(RadarOccError):
    """Training stopped due to a non-finite loss."""

    def __init__(self, epoch: int, detail: str):
        super().__init__(f"training aborted at epoch {epoch}: {detail}")
        self.epoch = epoch
