"""Deterministic discrete-event simulator of an LTE-V sidelink mode-4 stack
for vehicle platooning: correlated shadowing channel, sensing-based SPS,
layered delay/throughput accounting, and platooning-length evaluation."""

from .config import ScenarioConfig, default_scenario, parse_scenario, render_scenario
from .engine import ScenarioRun, run_scenario
from .metrics import MetricsStore, layer_profile, pdr, platoon_length

__all__ = [
    "ScenarioConfig",
    "default_scenario",
    "parse_scenario",
    "render_scenario",
    "ScenarioRun",
    "run_scenario",
    "MetricsStore",
    "pdr",
    "platoon_length",
    "layer_profile",
]

__version__ = "0.1.0"
