"""Fuel-optimal powered-descent guidance by ADMM with direct projections onto
the nonconvex thrust sets, alongside a losslessly convexified baseline."""

from .admm import SolveResult, SolverParams
from .analysis import FeasibilityReport, Tolerances, check_feasibility, compare, fuel_consumed, search_optimal_tf
from .config import ScenarioConfig, ScenarioError, default_scenario, load_scenario, retime
from .model import Trajectory
from .solvers import solve_exproj, solve_lcvx

__version__ = "0.1.0"

__all__ = [
    "FeasibilityReport",
    "ScenarioConfig",
    "ScenarioError",
    "SolveResult",
    "SolverParams",
    "Tolerances",
    "Trajectory",
    "check_feasibility",
    "compare",
    "default_scenario",
    "fuel_consumed",
    "load_scenario",
    "retime",
    "search_optimal_tf",
    "solve_exproj",
    "solve_lcvx",
]
