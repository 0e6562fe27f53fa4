"""Exception hierarchy shared by the library and the command line."""


class FrechetError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FrechetError, ValueError):
    """Malformed or invalid input data or arguments."""


class DimensionError(InputError):
    """Objects of different grid sizes or dimensions were combined."""


class DegenerateError(FrechetError):
    """A statistic is undefined because a variance estimate vanishes.

    ``group`` holds the 1-based group index when the failure is groupwise.
    """

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class ResamplingError(DegenerateError):
    """Too many bootstrap or permutation replicates were degenerate."""
