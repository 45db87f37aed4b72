"""Exception hierarchy shared by all modules."""


class DyadErgmError(Exception):
    """Base class for every error raised by :mod:`dyadergm`."""


class DomainError(DyadErgmError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class UnsupportedVariantError(DyadErgmError, ValueError):
    """The requested operation is not defined for this model variant."""


class NonexistentMLEError(DomainError):
    """An operation needs an MLE, but the census lies on its hull boundary."""


class ConvergenceError(DyadErgmError, RuntimeError):
    """Newton iteration failed to reach tolerance.

    Attributes
    ----------
    last_iterate : tuple of float
        The natural parameters at the final iteration.
    residual : float
        Max-norm residual at ``last_iterate``.
    """

    def __init__(self, message, last_iterate, residual):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class ParseError(DyadErgmError, ValueError):
    """Malformed input file; ``lineno`` is 1-based (0 if not line-specific)."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        where = f"{self.path}:{lineno}" if lineno else self.path
        super().__init__(f"{where}: {message}")
