"""Exception hierarchy shared by the solver modules."""


class KolgaussError(Exception):
    """Base class for all package errors."""


class DomainError(KolgaussError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigError(KolgaussError, ValueError):
    """Inconsistent model, grid or run configuration."""


class BankFormatError(KolgaussError):
    """A bank file is malformed, truncated or fails its checksum."""


class NumericError(KolgaussError, ArithmeticError):
    """Non-finite values appeared during a computation."""
