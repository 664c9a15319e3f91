"""Exception types raised across the package."""


class SchattenLabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SchattenLabError, ValueError):
    """Non-finite or otherwise malformed numerical input."""


class InvalidIndexError(SchattenLabError, ValueError):
    """A Schatten exponent outside its admissible range."""


class UnsupportedIndexError(InvalidIndexError):
    """An exponent that is valid in general but not for this operation (p > 1)."""


class ShapeMismatchError(SchattenLabError, ValueError):
    pass


class SeparationError(SchattenLabError, ValueError):
    """Row and column nodes of a divided difference are not disjoint enough."""


class DegenerateOffsetError(SchattenLabError, ValueError):
    """f(eps) == f(0), so the periodic construction carries no information."""


class ResolutionError(SchattenLabError, ValueError):
    """Requested dyadic resolution is outside what the wavelet cache supports."""


class OutOfDomainError(SchattenLabError, ValueError):
    pass


class AliasingError(SchattenLabError, ValueError):
    """Sampled signal carries energy outside the resolved Littlewood-Paley bands."""


class ParseError(SchattenLabError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
