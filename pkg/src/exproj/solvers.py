"""Problem frontends: direct nonconvex projections and the convexified baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
import scipy.sparse as sp

from . import admm, kernels
from .config import ScenarioConfig
from .model import ProblemMatrices, Scaling, assemble


def exproj_projector(mat: ProblemMatrices, backend: str | None = None) -> admm.Projector:
    """Cone surface on ``(u_i, sigma_i)``, exponential band on ``(sigma_i, z_i)``."""
    k = kernels.get_backend(backend)
    cfg = mat.cfg
    shift = mat.bw2[0] if len(mat.bw2) else 0.0
    lo0 = mat.lower_bound * math.exp(-mat.z0) - shift
    hi0 = mat.upper_bound * math.exp(-mat.z0) - shift
    band = partial(k.band_batch, lo0=lo0, hi0=hi0, rho1=mat.lower_bound, rho2=mat.upper_bound,
                   tol=cfg.nr_tol, max_iters=cfg.nr_max_iters)
    return admm.Projector("exproj", k.surface_batch, band)


def lcvx_projector(backend: str | None = None) -> admm.Projector:
    return admm.Projector("lcvx", kernels.get_backend(backend).cone_batch)


def solve_exproj(cfg: ScenarioConfig, params: admm.SolverParams | None = None, *,
                 backend: str | None = None, **kwargs) -> admm.SolveResult:
    mat = assemble(cfg)
    return admm.solve_staged(mat, exproj_projector(mat, backend), params, **kwargs)


@dataclass(frozen=True)
class LcvxReference:
    """Reference log-mass ``log(m_wet - alpha rho2 t)`` sampled at step starts.

    ``lower``/``upper`` hold ``rho e^{-z_ref}`` in m/s^2, so the linearized
    bounds read ``coef * (1 - (z - z_ref))``.
    """

    t: np.ndarray
    z_ref: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def build_lcvx_reference(cfg: ScenarioConfig) -> LcvxReference:
    t = cfg.dt * np.arange(cfg.N)
    burn = cfg.alpha * cfg.rho2 * cfg.tf
    if burn >= cfg.m_wet:
        raise ValueError(
            f"reference mass becomes nonpositive: alpha*rho2*tf = {burn:.6g} >= m_wet = {cfg.m_wet}")
    z_ref = np.log(cfg.m_wet - cfg.alpha * cfg.rho2 * t)
    return LcvxReference(t, z_ref, cfg.rho1 * np.exp(-z_ref), cfg.rho2 * np.exp(-z_ref))


def lcvx_matrices(cfg: ScenarioConfig, ref: LcvxReference | None = None) -> ProblemMatrices:
    """Convex baseline: no band block; linearized thrust bounds appended to ``P``.

    The cost is ``alpha * sum(sigma_i) dt + gamma ||x_N||^2``, i.e. the
    integral of ``sigma`` scaled by the mass-flow constant so the terminal
    weight means the same as in the nonconvex problem.
    """
    ref = build_lcvx_reference(cfg) if ref is None else ref
    base = assemble(cfg)
    sc: Scaling = base.scaling
    lay = base.layout
    N, n = lay.N, lay.size
    zr = ref.z_ref - sc.log_mass
    a1 = ref.lower / sc.accel
    a2 = ref.upper / sc.accel
    rows, cols, vals = [], [], []
    q = np.zeros(2 * N)
    for i in range(N):
        for k, (coef, sign) in enumerate(((a1[i], 1.0), (a2[i], -1.0))):
            r = 2 * i + k
            rows.append(r); cols.append(lay.sigma(i)); vals.append(sign)
            rhs = sign * coef * (1.0 + zr[i])
            if i == 0:
                rhs -= sign * coef * base.z0
            else:
                rows.append(r); cols.append(lay.z(i)); vals.append(sign * coef)
            q[r] = rhs
    bounds = sp.csc_matrix((vals, (rows, cols)), shape=(2 * N, n))
    P = sp.vstack([base.P, bounds]).tocsc()
    h = base.H.diagonal() * 0.0
    dtau = cfg.dt / sc.time
    h[[lay.sigma(i) for i in range(N)]] = sc.mass_rate(cfg.alpha) * dtau
    return base.with_inequalities(P, np.concatenate([base.q, q]), band=False, h=h)


def solve_lcvx(cfg: ScenarioConfig, params: admm.SolverParams | None = None, *,
               backend: str | None = None, **kwargs) -> admm.SolveResult:
    mat = lcvx_matrices(cfg)
    return admm.solve_staged(mat, lcvx_projector(backend), params, **kwargs)


SOLVERS = {"exproj": solve_exproj, "lcvx": solve_lcvx}
