"""Solver-independent audits, fuel accounting, flight-time search and comparisons.

Every check here works from the physical trajectory ``(r, v, m, T)`` alone, so
the same audit applies to either solver and to trajectories read back from
disk.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .admm import SolveResult
from .config import ScenarioConfig, retime
from .model import Trajectory, discretize
from .solvers import SOLVERS

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoFeasibleError(RuntimeError):
    """No solve inside the flight-time bracket passed the audit."""


@dataclass(frozen=True)
class Tolerances:
    """Audit tolerances in physical units; ``thrust=None`` means ``1e-3 * rho1``."""

    thrust: float | None = None
    pointing: float = 1e-6
    position: float = 1e-2
    velocity: float = 1e-2
    mass: float = 1e-6
    dynamics: float = 1e-6

    def resolve(self, cfg: ScenarioConfig) -> "Tolerances":
        if self.thrust is not None:
            return self
        return Tolerances(1e-3 * cfg.rho1, self.pointing, self.position, self.velocity,
                          self.mass, self.dynamics)


@dataclass(frozen=True)
class FeasibilityReport:
    max_upper_thrust_violation: float
    max_lower_thrust_violation: float
    max_pointing_violation: float
    terminal_position_error: float
    terminal_velocity_error: float
    mass_floor_violation: float
    dynamics_defect: float
    feasible: bool
    tolerances: Tolerances = field(default_factory=Tolerances)

    def violations(self) -> dict[str, tuple[float, float]]:
        """Map of check name to ``(value, tolerance)``."""
        tol = self.tolerances
        return {
            "upper_thrust": (self.max_upper_thrust_violation, tol.thrust),
            "lower_thrust": (self.max_lower_thrust_violation, tol.thrust),
            "pointing": (self.max_pointing_violation, tol.pointing),
            "terminal_position": (self.terminal_position_error, tol.position),
            "terminal_velocity": (self.terminal_velocity_error, tol.velocity),
            "mass_floor": (self.mass_floor_violation, tol.mass),
            "dynamics": (self.dynamics_defect, tol.dynamics),
        }

    def failed(self) -> list[str]:
        return [k for k, (val, lim) in self.violations().items() if not val <= lim]

    def to_dict(self) -> dict:
        return asdict(self)


def dynamics_defect(traj: Trajectory, cfg: ScenarioConfig) -> float:
    """Worst one-step position mismatch (m) when re-applying ``T_i / m_i``."""
    dyn = discretize(cfg)
    x = np.hstack([traj.r, traj.v])
    acc = traj.T / traj.m[:-1, None]
    pred = x[:-1] @ dyn.A.T + acc @ dyn.B.T + dyn.c
    return float(np.max(np.linalg.norm(pred[:, :3] - traj.r[1:], axis=1), initial=0.0))


def check_feasibility(traj: Trajectory, cfg: ScenarioConfig,
                      tol: Tolerances | None = None) -> FeasibilityReport:
    """Audit ``traj`` against the original thrust, pointing, terminal and mass constraints."""
    if traj.N != cfg.N or traj.r.shape != (cfg.N + 1, 3) or traj.T.shape != (cfg.N, 3):
        raise ValueError(f"trajectory has {traj.N} steps but the scenario needs {cfg.N}")
    tol = (tol or Tolerances()).resolve(cfg)
    mag = traj.thrust
    upper = float(np.max(mag - cfg.rho2, initial=0.0))
    lower = float(np.max(cfg.rho1 - mag, initial=0.0))
    # direction is meaningless for a (numerically) zero thrust vector
    tilt = traj.tilt[mag > tol.thrust]
    pointing = float(np.max(tilt - cfg.theta_tp, initial=0.0))
    mass = float(max(cfg.m_dry - float(np.min(traj.m)), 0.0))
    report = dict(
        max_upper_thrust_violation=max(upper, 0.0),
        max_lower_thrust_violation=max(lower, 0.0),
        max_pointing_violation=max(pointing, 0.0),
        terminal_position_error=float(np.linalg.norm(traj.r[-1])),
        terminal_velocity_error=float(np.linalg.norm(traj.v[-1])),
        mass_floor_violation=mass,
        dynamics_defect=dynamics_defect(traj, cfg),
    )
    draft = FeasibilityReport(**report, feasible=False, tolerances=tol)
    return FeasibilityReport(**report, feasible=not draft.failed(), tolerances=tol)


def fuel_consumed(traj: Trajectory) -> float:
    return float(traj.m[0] - traj.m[-1])


# --------------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepRow:
    tf: float
    solver: str
    status: str
    converged: bool
    fuel: float
    feasible: bool
    iterations: int
    report: FeasibilityReport


@dataclass(frozen=True)
class TfSearch:
    """Outcome of :func:`search_optimal_tf`.

    ``tf_grid`` is the best point of the uniform grid, ``tf_star`` the refined
    optimum (equal to ``tf_grid`` when refinement is off or cannot improve).
    """

    tf_star: float
    fuel: float
    tf_grid: float
    rows: list[SweepRow]
    refinements: list[SweepRow]


def _solve_row(args: tuple[ScenarioConfig, float, float, str, Tolerances | None]) -> SweepRow:
    cfg, tf, dt, solver, tol = args
    case = retime(cfg, tf, dt)
    result = SOLVERS[solver](case)
    report = check_feasibility(result.trajectory, case, tol)
    return SweepRow(tf, solver, result.status, result.converged, result.fuel,
                    report.feasible, result.iterations, report)


def tf_grid(t_lo: float, t_hi: float, dt: float) -> np.ndarray:
    if t_lo > t_hi:
        raise ValueError(f"empty bracket: t_lo={t_lo} > t_hi={t_hi}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(math.floor((t_hi - t_lo) / dt + 1e-9))
    return t_lo + dt * np.arange(n + 1)


def sweep(cfg: ScenarioConfig, t_lo: float, t_hi: float, *, solvers: Sequence[str] = ("exproj",),
          dt: float | None = None, tol: Tolerances | None = None,
          workers: int | None = None) -> list[SweepRow]:
    """Solve and audit on the grid ``t_lo, t_lo + dt, ..., <= t_hi``.

    Rows come back ordered by flight time, then by the order of ``solvers``,
    whatever the number of worker processes.
    """
    unknown = [s for s in solvers if s not in SOLVERS]
    if unknown:
        raise ValueError(f"unknown solver(s): {', '.join(unknown)}")
    step = cfg.dt if dt is None else dt
    jobs = [(cfg, float(tf), step, s, tol) for tf in tf_grid(t_lo, t_hi, step) for s in solvers]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_row, jobs))
    return [_solve_row(job) for job in jobs]


def _usable(row: SweepRow) -> bool:
    return row.converged and row.feasible


def _score(row: SweepRow) -> float:
    return row.fuel if _usable(row) else math.inf


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))`` of the best probe."""
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def search_optimal_tf(cfg: ScenarioConfig, t_lo: float, t_hi: float, *, dt: float | None = None,
                      tol: Tolerances | None = None, refine: bool = True,
                      refine_tol: float = 0.05, workers: int | None = None,
                      rows: Sequence[SweepRow] | None = None) -> TfSearch:
    """Fuel-optimal flight time for the nonconvex solver.

    The grid minimum over converged, audited-feasible solves is refined by
    golden-section search on ``[tf - dt, tf + dt]`` clipped to the bracket.
    Infeasible probes count as infinite fuel. Pass ``rows`` from an earlier
    :func:`sweep` to skip re-solving the grid.
    """
    step = cfg.dt if dt is None else dt
    if rows is None:
        rows = sweep(cfg, t_lo, t_hi, solvers=("exproj",), dt=step, tol=tol, workers=workers)
    else:
        tf_grid(t_lo, t_hi, step)
    rows = [r for r in rows if r.solver == "exproj"]
    feasible = [r for r in rows if _usable(r)]
    if not feasible:
        raise NoFeasibleError(f"no feasible solve for tf in [{t_lo}, {t_hi}]")
    best = min(feasible, key=lambda r: (r.fuel, r.tf))
    refinements: list[SweepRow] = []
    tf_star, fuel = best.tf, best.fuel
    a, b = max(t_lo, best.tf - step), min(t_hi, best.tf + step)
    if refine and b - a > refine_tol:
        cache: dict[float, SweepRow] = {}

        def probe(tf: float) -> float:
            if tf not in cache:
                cache[tf] = _solve_row((cfg, tf, step, "exproj", tol))
                refinements.append(cache[tf])
            return _score(cache[tf])

        x, fx = golden_section(probe, a, b, refine_tol)
        if fx < fuel:
            tf_star, fuel = x, fx
    log.info("tf* = %.3f s (grid %.3f s), fuel %.3f kg", tf_star, best.tf, fuel)
    return TfSearch(tf_star, fuel, best.tf, rows, refinements)


# ---------------------------------------------------------------------- comparison

_SCENARIO_KEYS = ("r_init", "v_init", "g", "m_wet", "m_dry", "rho1", "rho2", "alpha",
                  "theta_tp", "tf", "dt")


@dataclass(frozen=True)
class SolverSummary:
    solver: str
    status: str
    converged: bool
    fuel: float
    terminal_position: list[float]
    terminal_velocity: list[float]
    terminal_position_error: float
    terminal_velocity_error: float
    max_thrust: float
    min_thrust: float
    feasible: bool
    report: FeasibilityReport


@dataclass(frozen=True)
class Comparison:
    a: SolverSummary
    b: SolverSummary
    fuel_delta: float
    terminal_position_delta: float
    terminal_velocity_delta: float
    max_thrust_delta: float
    min_thrust_delta: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        """Plain-text side-by-side rows: terminal position, terminal velocity, fuel."""
        def vec(v: list[float]) -> str:
            return "[" + ", ".join(f"{x:.3e}" for x in v) + "]"

        rows = [
            ("", self.a.solver, self.b.solver),
            ("r(tf) [m]", vec(self.a.terminal_position), vec(self.b.terminal_position)),
            ("v(tf) [m/s]", vec(self.a.terminal_velocity), vec(self.b.terminal_velocity)),
            ("fuel [kg]", f"{self.a.fuel:.2f}", f"{self.b.fuel:.2f}"),
            ("max |T| [N]", f"{self.a.max_thrust:.1f}", f"{self.b.max_thrust:.1f}"),
            ("min |T| [N]", f"{self.a.min_thrust:.1f}", f"{self.b.min_thrust:.1f}"),
            ("feasible", str(self.a.feasible), str(self.b.feasible)),
        ]
        w = [max(len(r[i]) for r in rows) for i in range(3)]
        return "\n".join(f"{r[0]:<{w[0]}}  {r[1]:>{w[1]}}  {r[2]:>{w[2]}}" for r in rows)


def same_scenario(a: ScenarioConfig, b: ScenarioConfig) -> bool:
    da, db = a.to_dict(), b.to_dict()
    return all(np.allclose(da[k], db[k], rtol=1e-12, atol=0.0) for k in _SCENARIO_KEYS)


def summarize(result: SolveResult, cfg: ScenarioConfig, tol: Tolerances | None = None) -> SolverSummary:
    traj = result.trajectory
    report = check_feasibility(traj, cfg, tol)
    mag = traj.thrust
    return SolverSummary(
        solver=result.label, status=result.status, converged=result.converged,
        fuel=fuel_consumed(traj),
        terminal_position=traj.r[-1].tolist(), terminal_velocity=traj.v[-1].tolist(),
        terminal_position_error=report.terminal_position_error,
        terminal_velocity_error=report.terminal_velocity_error,
        max_thrust=float(mag.max()), min_thrust=float(mag.min()),
        feasible=report.feasible, report=report)


def compare(a: SolveResult, b: SolveResult, cfg: ScenarioConfig | None = None,
            tol: Tolerances | None = None) -> Comparison:
    """Side-by-side record of two solves of the same scenario (deltas are ``a - b``)."""
    cfg_a = cfg or a.cfg
    cfg_b = cfg or b.cfg
    if cfg_a is None or cfg_b is None:
        raise ValueError("results carry no scenario; pass cfg explicitly")
    if not same_scenario(cfg_a, cfg_b):
        raise ValueError("results come from different scenarios")
    sa, sb = summarize(a, cfg_a, tol), summarize(b, cfg_b, tol)
    return Comparison(
        a=sa, b=sb,
        fuel_delta=sa.fuel - sb.fuel,
        terminal_position_delta=sa.terminal_position_error - sb.terminal_position_error,
        terminal_velocity_delta=sa.terminal_velocity_error - sb.terminal_velocity_error,
        max_thrust_delta=sa.max_thrust - sb.max_thrust,
        min_thrust_delta=sa.min_thrust - sb.min_thrust,
    )
