"""ADMM over ``(y, w, y_s)`` with a cached KKT factorization.

Each iteration solves the equality-constrained quadratic in ``y`` through one
back-substitution with the factored KKT matrix, projects ``C y - q~ + y_s``
blockwise onto the constraint sets, and accumulates the scaled dual.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import ScenarioConfig
from .model import ProblemMatrices, Trajectory, unpack

log = logging.getLogger(__name__)


class KktError(RuntimeError):
    """The KKT matrix is singular (rank-deficient G or degenerate scaling)."""


@dataclass(frozen=True)
class SplitState:
    y: np.ndarray
    w: np.ndarray
    y_s: np.ndarray
    iter: int = 0
    primal_res: float = np.inf
    dual_res: float = np.inf


@dataclass
class KktFactor:
    K: sp.csc_matrix
    lu: spla.SuperLU
    n: int
    m: int
    penalty_rho: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)


@dataclass(frozen=True)
class Projector:
    """Blockwise projection of ``v = C y - q~ + y_s`` onto the split sets.

    ``w1`` maps the ``(N, 4)`` array of ``[u_i, sigma_i]`` rows, ``w2`` the
    band block (skipped when the matrices carry none); the inequality block is
    always clipped at zero.
    """

    label: str
    w1: Callable[[np.ndarray], np.ndarray]
    w2: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class SolverParams:
    """Iteration controls.

    ``stage_iters``, ``penalty_growth`` and ``max_penalty`` only matter to
    :func:`solve_staged`; :func:`solve` runs one fixed penalty.
    """

    penalty_rho: float = 0.01
    max_iters: int = 80000
    eps_primal: float = 1e-7
    eps_dual: float = 1e-7
    stall_window: int = 3000
    stall_tol: float = 1e-3
    stage_iters: int = 20000
    penalty_growth: float = 10.0
    max_penalty: float = 10.0
    record_history: bool = False

    @classmethod
    def from_config(cls, cfg, **overrides) -> "SolverParams":
        base = dict(penalty_rho=cfg.penalty_rho, max_iters=cfg.max_iters,
                    eps_primal=cfg.eps_primal, eps_dual=cfg.eps_dual,
                    max_penalty=max(cfg.max_penalty, cfg.penalty_rho))
        base.update(overrides)
        return cls(**base)


@dataclass
class SolveResult:
    trajectory: Trajectory
    converged: bool
    status: str
    iterations: int
    primal_res: float
    dual_res: float
    objective: float
    fuel: float
    label: str
    state: SplitState
    penalty_rho: float = 0.0
    solve_time: float = 0.0
    history: list[tuple[float, float]] = field(default_factory=list)
    cfg: ScenarioConfig | None = field(default=None, repr=False)

    def summary(self) -> dict:
        traj = self.trajectory
        return {
            "solver": self.label,
            "status": self.status,
            "converged": self.converged,
            "iterations": self.iterations,
            "penalty_rho": self.penalty_rho,
            "primal_res": self.primal_res,
            "dual_res": self.dual_res,
            "objective": self.objective,
            "fuel": self.fuel,
            "tf": float(traj.t[-1]),
            "N": traj.N,
            "final_position": traj.r[-1].tolist(),
            "final_velocity": traj.v[-1].tolist(),
            "final_mass": float(traj.m[-1]),
            "max_thrust": float(traj.thrust.max()),
            "min_thrust": float(traj.thrust.min()),
            "solve_time": self.solve_time,
        }


def factor_kkt(mat: ProblemMatrices, penalty_rho: float) -> KktFactor:
    if penalty_rho <= 0:
        raise ValueError("penalty_rho must be positive")
    n, m = mat.layout.size, mat.G.shape[0]
    top = penalty_rho * (mat.C.T @ mat.C) + 2.0 * mat.H
    K = sp.bmat([[top, mat.G.T], [mat.G, None]], format="csc")
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise KktError(f"KKT factorization failed: {exc}") from exc
    diag = np.abs(lu.U.diagonal())
    if not np.all(np.isfinite(diag)) or diag.min() <= 1e-13 * diag.max():
        raise KktError("KKT matrix is numerically singular")
    return KktFactor(K, lu, n, m, penalty_rho)


def update_primal(f: KktFactor, mat: ProblemMatrices, w: np.ndarray, y_s: np.ndarray) -> np.ndarray:
    rhs = np.concatenate([f.penalty_rho * (mat.C.T @ (mat.q_tilde + w - y_s)) - mat.h, mat.b])
    return f.solve(rhs)[: f.n]


def update_splitting(y: np.ndarray, y_s: np.ndarray, mat: ProblemMatrices,
                     projector: Projector) -> np.ndarray:
    v = mat.C @ y - mat.q_tilde + y_s
    n1, n2, _ = mat.sizes
    w = np.empty_like(v)
    w[:n1] = projector.w1(v[:n1].reshape(-1, 4)).reshape(-1)
    if n2:
        if projector.w2 is None:
            raise ValueError(f"projector {projector.label!r} has no band projection")
        w[n1:n1 + n2] = projector.w2(v[n1:n1 + n2])
    np.maximum(v[n1 + n2:], 0.0, out=w[n1 + n2:])
    return w


def update_dual(y: np.ndarray, w: np.ndarray, mat: ProblemMatrices, y_s: np.ndarray) -> np.ndarray:
    return y_s + mat.C @ y - mat.q_tilde - w


def residuals(state: SplitState, prev_w: np.ndarray, mat: ProblemMatrices,
              penalty_rho: float) -> tuple[float, float]:
    primal = float(np.max(np.abs(mat.C @ state.y - mat.q_tilde - state.w), initial=0.0))
    dual = penalty_rho * float(np.max(np.abs(mat.C.T @ (state.w - prev_w)), initial=0.0))
    return primal, dual


def solve(mat: ProblemMatrices, projector: Projector, params: SolverParams | None = None, *,
          warm_start: SplitState | None = None, factor: KktFactor | None = None,
          callback: Callable[[SplitState], None] | None = None) -> SolveResult:
    """Run ADMM until both residuals meet tolerance, stall, or hit ``max_iters``.

    Cold starts use ``w = 0, y_s = 0`` so the first primal update lands on
    ``G y = b``. The returned iterate is the one with the smallest
    tolerance-normalized residual.
    """
    params = params or SolverParams.from_config(mat.cfg)
    t_start = time.perf_counter()
    if factor is None or factor.penalty_rho != params.penalty_rho:
        factor = factor_kkt(mat, params.penalty_rho)
    n_w = mat.C.shape[0]
    if warm_start is not None:
        w, y_s = np.array(warm_start.w, dtype=float), np.array(warm_start.y_s, dtype=float)
        if w.shape != (n_w,):
            raise ValueError("warm start does not match the problem layout")
    else:
        w, y_s = np.zeros(n_w), np.zeros(n_w)

    rho = params.penalty_rho
    history: list[tuple[float, float]] = []
    best_score = np.inf
    best: SplitState | None = None
    ref_score, ref_iter = np.inf, 0
    status = "max_iters"
    state = SplitState(np.zeros(mat.layout.size), w, y_s)
    for it in range(1, params.max_iters + 1):
        y = update_primal(factor, mat, w, y_s)
        w_prev = w
        w = update_splitting(y, y_s, mat, projector)
        y_s = update_dual(y, w, mat, y_s)
        r = mat.C @ y - mat.q_tilde - w
        primal = float(np.max(np.abs(r), initial=0.0))
        dual = rho * float(np.max(np.abs(mat.C.T @ (w - w_prev)), initial=0.0))
        state = SplitState(y, w, y_s, it, primal, dual)
        if params.record_history:
            history.append((primal, dual))
        if callback is not None:
            callback(state)
        score = max(primal / params.eps_primal, dual / params.eps_dual)
        if score < best_score:
            best_score, best = score, state
        if primal <= params.eps_primal and dual <= params.eps_dual:
            status = "converged"
            best = state
            break
        # stalled: the normalized residual has not dropped by a factor
        # (1 - stall_tol) within the last stall_window iterations
        if score < ref_score * (1.0 - params.stall_tol):
            ref_score, ref_iter = score, it
        elif it - ref_iter >= params.stall_window:
            status = "stalled"
            break
    assert best is not None
    elapsed = time.perf_counter() - t_start
    log.debug("%s: %s after %d iterations (primal %.2e, dual %.2e, %.2fs)", projector.label,
              status, state.iter, best.primal_res, best.dual_res, elapsed)
    traj = unpack(best.y, mat.cfg)
    return SolveResult(
        trajectory=traj,
        converged=status == "converged",
        status=status,
        iterations=state.iter,
        primal_res=best.primal_res,
        dual_res=best.dual_res,
        objective=mat.objective(best.y),
        fuel=float(mat.cfg.m_wet - traj.m[-1]),
        label=projector.label,
        state=best,
        penalty_rho=rho,
        solve_time=elapsed,
        history=history,
        cfg=mat.cfg,
    )


def solve_staged(mat: ProblemMatrices, projector: Projector, params: SolverParams | None = None, *,
                 warm_start: SplitState | None = None,
                 callback: Callable[[SplitState], None] | None = None) -> SolveResult:
    """:func:`solve` with a penalty ladder.

    Each stage runs at a fixed penalty with its own cached factorization. A
    stage that stalls or spends ``stage_iters`` without converging hands its
    best iterate to the next stage at ``penalty_growth`` times the penalty
    (scaled duals rescaled accordingly), up to ``max_penalty``. The last stage
    may use whatever remains of ``max_iters``.
    """
    params = params or SolverParams.from_config(mat.cfg)
    rho = params.penalty_rho
    state = warm_start
    total, elapsed = 0, 0.0
    history: list[tuple[float, float]] = []
    while True:
        next_rho = rho * params.penalty_growth
        last = next_rho > params.max_penalty * (1 + 1e-12)
        budget = params.max_iters - total
        if not last:
            budget = min(params.stage_iters, budget)
        result = solve(mat, projector, replace(params, penalty_rho=rho, max_iters=budget),
                       warm_start=state, callback=callback)
        total += result.iterations
        elapsed += result.solve_time
        history += result.history
        if result.converged or last or total >= params.max_iters:
            break
        log.info("%s: %s at penalty %g after %d iterations; raising penalty to %g",
                 projector.label, result.status, rho, total, next_rho)
        best = result.state
        state = replace(best, y_s=best.y_s * (rho / next_rho))
        rho = next_rho
    result.iterations = total
    result.solve_time = elapsed
    result.history = history
    return result
