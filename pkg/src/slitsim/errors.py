"""Exception hierarchy shared by the simulation modules and the CLI."""


class SimulationError(Exception):
    """Base class for all errors raised by slitsim."""

    exit_code = 1


class ConfigError(SimulationError, ValueError):
    """Malformed or physically invalid configuration."""

    exit_code = 2


class NumericGuardError(SimulationError, ArithmeticError):
    """A numerical safeguard tripped (node proximity, step underflow, ...)."""

    exit_code = 3


class UnsatisfiableWindowError(NumericGuardError):
    """A detection time window admits no quadrature node."""


class InsufficientStructureError(SimulationError):
    """A profile has too few fringes for fringe metrics."""

    exit_code = 3


class StatisticalBudgetError(SimulationError):
    """Too many trajectories were flagged, or sampling ran out of budget."""

    exit_code = 4
