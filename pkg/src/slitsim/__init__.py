"""Wave-packet and Bohmian simulation of the cold-neon double-slit experiment."""

__version__ = "0.1.0"

from .errors import (ConfigError, InsufficientStructureError, NumericGuardError, SimulationError,
                     StatisticalBudgetError, UnsatisfiableWindowError)
from .model import ExperimentConfig, default_shimizu_config, load_config

__all__ = [
    "ConfigError", "ExperimentConfig", "InsufficientStructureError", "NumericGuardError",
    "SimulationError", "StatisticalBudgetError", "UnsatisfiableWindowError",
    "default_shimizu_config", "load_config", "__version__",
]
