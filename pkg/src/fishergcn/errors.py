"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors (ValueError and argument
parsing) exit 1, DataError exits 2, NumericalError and subclasses exit 3.
"""


class DataError(Exception):
    """Malformed or inconsistent input data (container files, labels, edges)."""


class ConfigError(DataError):
    """Dataset cannot satisfy the requested configuration (e.g. split sizes)."""


class NumericalError(Exception):
    """A numerical precondition failed (domain errors, degenerate matrices)."""


class SolverError(NumericalError):
    """Eigensolver failed to converge within its iteration cap."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


class TrainingError(NumericalError):
    """Training diverged (non-finite loss)."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch
