"""Four-way intersection simulator comparing fixed-cycle lights with V2V
brake-or-pass reservation."""

from .config import ConfigError, format_scenario, load_scenario, parse_scenario
from .dynamics import VehicleParams, VehicleState
from .engine import InvariantViolation, ScenarioConfig, SimResult, Simulation, run
from .geometry import Axis, Direction, IntersectionGeometry
from .metrics import DelayRecord, cdf, exceedance_fraction, median, quantile, summarize

__all__ = [
    "Axis", "ConfigError", "DelayRecord", "Direction", "IntersectionGeometry",
    "InvariantViolation", "ScenarioConfig", "SimResult", "Simulation", "VehicleParams",
    "VehicleState", "cdf", "exceedance_fraction", "format_scenario", "load_scenario",
    "median", "parse_scenario", "quantile", "run", "summarize",
]
