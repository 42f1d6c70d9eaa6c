"""Exception types shared across the pipeline.

Each class carries the process exit code the CLI reports for it.
"""


class DosnesError(Exception):
    exit_code = 1
    kind = "error"


class InputError(DosnesError, ValueError):
    """Malformed or inconsistent input data or configuration."""

    exit_code = 2
    kind = "input"


class NormalizationError(DosnesError):
    """Doubly stochastic normalization failed or was impossible."""

    exit_code = 3
    kind = "normalization"

    def __init__(self, message, report=None, affinity=None):
        super().__init__(message)
        self.report = report
        self.affinity = affinity


class DivergenceError(DosnesError, FloatingPointError):
    """The optimizer produced a non-finite objective."""

    exit_code = 4
    kind = "divergence"

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
