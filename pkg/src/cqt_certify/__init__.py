"""Device independent certification of controlled quantum teleportation."""
from .errors import ConfigError, CqtError, InvalidStateError, SolverConvergenceError
from .linalg import DensityMatrix, PureState, partial_trace
from .nonlocality import Objective, SettingsTriple, optimize_settings
from .povm import Backend, DiscriminationInstance, SolveResult, solve_discrimination
from .states import Channel, make_ghz, noisy_ghz
from .teleport import FidelityReport, ecp_report

__all__ = [
    "Backend",
    "Channel",
    "ConfigError",
    "CqtError",
    "DensityMatrix",
    "DiscriminationInstance",
    "FidelityReport",
    "InvalidStateError",
    "Objective",
    "PureState",
    "SettingsTriple",
    "SolveResult",
    "SolverConvergenceError",
    "ecp_report",
    "make_ghz",
    "noisy_ghz",
    "optimize_settings",
    "partial_trace",
    "solve_discrimination",
]
