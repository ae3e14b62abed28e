"""Islanded offshore energy-hub simulator: wind farm, electrolyzers, fuel cells, BESS, H2 tank."""

from .engine import DesignSpec, EventSpec, RunResult, Scenario, run, run_contingency, run_year
from .errors import ConfigError, DomainError, InvariantViolation
from .pms import ControlConfig

__all__ = [
    "ConfigError", "ControlConfig", "DesignSpec", "DomainError", "EventSpec", "InvariantViolation",
    "RunResult", "Scenario", "run", "run_contingency", "run_year",
]
__version__ = "0.1.0"
