"""Exception types raised by the shrinkage toolkit."""

from typing import Optional


class ShrinkageError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ShrinkageError, ValueError):
    """A numeric argument lies outside the domain of a function or distribution."""


class SingularityError(DomainError):
    """Evaluation requested at a pole of a density (theta = 0 for the DL marginal)."""


class ValidationError(ShrinkageError, ValueError):
    """Invalid configuration, scenario or input data."""


class InputParseError(ValidationError):
    """Malformed input file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        """
        Initialize the parse error.

        Args:
            message: Description of the problem
            line_number: 1-based line in the input file (header is line 1)
        """
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DegenerateStateError(ShrinkageError, RuntimeError):
    """A sampler state can no longer be updated (e.g. every giG draw underflowed)."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class DegenerateClusteringError(ShrinkageError):
    """Two-cluster k-means requested on values that are all identical."""
