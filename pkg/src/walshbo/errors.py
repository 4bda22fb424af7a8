"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration: bad dimensions, orders, grids, or config files."""


class DimensionMismatchError(ValueError):
    """Operands disagree on the binary-space dimension or feature length."""


class SingularModelError(RuntimeError):
    """A symmetric factorization failed even after jitter escalation."""


class NonSubmodularError(ValueError):
    """A quadratic handed to the cut solver has a positive pairwise term."""


class ExhaustedSpaceError(RuntimeError):
    """Every point of the search space has already been evaluated."""


class InvalidPointError(ValueError):
    """A binary point decodes to a code outside the benchmark's alphabet."""


class TableLoadError(ValueError):
    """A tabular objective file is malformed, incomplete, or duplicated."""


class RunAbortedError(RuntimeError):
    """An objective evaluation failed mid-run; partial history is attached."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
