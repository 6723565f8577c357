"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical failures (including CFL refusals) exit 2, I/O problems exit 3.
"""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration input."""


class DomainError(SimulationError):
    """Evaluation requested outside the closed configuration domain."""


class ValidationError(SimulationError):
    """Model, kernel, or input data violates a structural hypothesis."""


class CflError(SimulationError):
    """Time step rejected by the stability gate; state was not mutated."""


class NumericalError(SimulationError):
    """NaN/Inf or a negativity beyond rounding scale appeared mid-run."""


class OracleError(SimulationError):
    """A reference oracle was used outside its domain of validity."""
