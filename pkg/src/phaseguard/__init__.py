"""Fault-protection simulator for multi-phase traction inverters."""

from .circuit import CircuitParams, Gate, PlantState
from .config import ScenarioConfig, ScenarioError, load_scenario, scenario_from_dict
from .engine import SimulationDiverged, Trace, energy_audit, run_scenario, simulate
from .faults import FaultEvent
from .metrics import MetricsReport, compute_metrics

__all__ = [
    "CircuitParams",
    "FaultEvent",
    "Gate",
    "MetricsReport",
    "PlantState",
    "ScenarioConfig",
    "ScenarioError",
    "SimulationDiverged",
    "Trace",
    "compute_metrics",
    "energy_audit",
    "load_scenario",
    "run_scenario",
    "scenario_from_dict",
    "simulate",
]

__version__ = "0.1.0"
