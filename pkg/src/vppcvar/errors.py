"""Exception hierarchy.

Errors are grouped by the CLI exit code they map to: configuration problems,
data problems, and solver problems.
"""


class VppError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(VppError, ValueError):
    exit_code = 2


class DataError(VppError, ValueError):
    exit_code = 3


class SolverError(VppError, RuntimeError):
    exit_code = 4


# fleet / dispatch
class InvalidFleet(ConfigError):
    pass


class InfeasibleTarget(DataError):
    """DA forecast outside [0, total DA capacity]."""


class InfeasibleDeviation(DataError):
    """RT deviation outside [-total down capacity, total up capacity]."""


class OutOfBox(DataError):
    """A (forecast, realization) pair outside the feasible box of the cost surface."""


# LP backend
class NumericalFailure(SolverError):
    pass


class TooLarge(SolverError):
    pass


# training / benchmarks / evaluation
class InfeasibleSample(DataError):
    def __init__(self, day, slot, y):
        super().__init__(f"sample (day={day}, slot={slot}) with y={y!r} kW admits no feasible forecast")
        self.day = day
        self.slot = slot
        self.y = y


class EmptyInput(DataError):
    pass


class EmptyTestSet(DataError):
    pass


class SingularDesign(DataError):
    pass


class KTooLarge(DataError):
    pass


# data ingestion
class ParseError(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class MissingValue(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class MissingArtifact(DataError):
    pass


class NonConvergence(RuntimeWarning):
    """Issued when the subgradient backend's gap estimate exceeds its tolerance."""
