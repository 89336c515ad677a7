"""Exception types shared across the package."""


class AutommError(ValueError):
    """Base class for all package-specific errors."""


class DomainError(AutommError):
    """An elementary function was evaluated outside its domain."""


class ShapeError(AutommError):
    """Tensor shapes are incompatible for the requested operation."""


class UnboundVariable(AutommError):
    """A graph variable has no binding."""


class UnsupportedDegree(AutommError):
    """Requested polynomial degree is outside the supported range."""


class DegreeMismatch(AutommError):
    """Two directional polynomials have different degrees or trust regions."""


class UnboundedTrust(AutommError):
    """An operation needed a bounded trust region but got an infinite one."""


class DegenerateInput(AutommError):
    """Input is degenerate (e.g. the zero polynomial)."""


class UnknownProblem(AutommError):
    """No problem generator with the requested name."""


class BadMagic(AutommError):
    """An IDX file has an unexpected magic number."""


class TruncatedFile(AutommError):
    """An IDX file ended before the declared payload."""


class ConfigError(AutommError):
    """A benchmark configuration file is malformed."""
