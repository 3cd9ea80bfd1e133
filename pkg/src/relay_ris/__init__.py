"""Power minimization for a multi-user downlink helped by a DF relay and an RIS."""

from .channel_model import ChannelSet, Geometry, build_geometry, draw_realization, sample_channels
from .config import SystemConfig
from .phase_search import SearchSettings, coordinate_descent, evaluate_phases
from .pipeline import SCENARIOS, solve_relay_only, solve_relay_ris, solve_ris_only, solve_scenario
from .rate_model import BeamformerSolution, PhaseConfig, SolveReport

__version__ = "0.1.0"

__all__ = [
    "BeamformerSolution", "ChannelSet", "Geometry", "PhaseConfig", "SCENARIOS", "SearchSettings",
    "SolveReport", "SystemConfig", "build_geometry", "coordinate_descent", "draw_realization",
    "evaluate_phases", "sample_channels", "solve_relay_only", "solve_relay_ris", "solve_ris_only",
    "solve_scenario",
]
