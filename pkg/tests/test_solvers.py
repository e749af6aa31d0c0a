from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from _oracles import cvxpy_lcvx_objective
from exproj.config import retime
from exproj.solvers import SOLVERS, build_lcvx_reference, lcvx_matrices, solve_exproj, solve_lcvx

REFERENCE_FUEL = {"exproj": 200.66, "lcvx": 201.00}


def test_registry():
    assert SOLVERS == {"exproj": solve_exproj, "lcvx": solve_lcvx}


def test_exproj_at_optimal_time(exproj_star, cfg):
    res = exproj_star
    assert res.converged and res.label == "exproj"
    assert res.fuel == pytest.approx(REFERENCE_FUEL["exproj"], rel=0.02)
    mag = res.trajectory.thrust
    assert mag.min() >= cfg.rho1 * (1 - 1e-3) and mag.max() <= cfg.rho2 * (1 + 1e-3)
    # on the cone surface the slack equals the control magnitude
    np.testing.assert_allclose(np.linalg.norm(res.trajectory.u, axis=1), res.trajectory.sigma, rtol=1e-5)


def test_lcvx_at_optimal_time(lcvx_star, exproj_star):
    assert lcvx_star.converged and lcvx_star.label == "lcvx"
    assert lcvx_star.fuel == pytest.approx(REFERENCE_FUEL["lcvx"], rel=0.02)
    assert exproj_star.fuel <= lcvx_star.fuel


def test_fuel_accounting_identity(exproj_star, cfg):
    traj = exproj_star.trajectory
    burned = np.sum(cfg.alpha * cfg.dt * traj.sigma * traj.m[:-1])
    assert cfg.m_wet - traj.m[-1] == pytest.approx(burned, rel=0.01)


def test_reference_mass_profile(cfg):
    ref = build_lcvx_reference(cfg)
    assert ref.z_ref[0] == pytest.approx(math.log(cfg.m_wet))
    t = cfg.dt * np.arange(cfg.N)
    np.testing.assert_allclose(np.exp(ref.z_ref), cfg.m_wet - cfg.alpha * cfg.rho2 * t)
    np.testing.assert_allclose(ref.upper / ref.lower, cfg.rho2 / cfg.rho1)


def test_reference_rejects_burnout(cfg):
    with pytest.raises(ValueError, match="nonpositive"):
        build_lcvx_reference(retime(cfg, 250.0, 1.0))


def test_lcvx_matrices_shape(cfg):
    mat = lcvx_matrices(cfg)
    N = cfg.N
    assert mat.sizes == (4 * N, 0, (N + 1) + 2 * N)
    # cost charges alpha dt per unit slack, nothing on z_N
    assert mat.h[mat.layout.z(N)] == 0.0
    assert np.count_nonzero(mat.h) == N


def test_lcvx_bounds_at_reference_mass(cfg):
    """With z equal to the reference the rows reduce to rho e^-z_ref <= sigma."""
    mat = lcvx_matrices(cfg)
    ref = build_lcvx_reference(cfg)
    sc, lay = mat.scaling, mat.layout
    n1, n2, n_ineq = mat.sizes
    rows = mat.P[cfg.N + 1:]
    q = mat.q[cfg.N + 1:]
    y = np.zeros(lay.size)
    for i in range(1, cfg.N):
        y[lay.z(i)] = ref.z_ref[i] - sc.log_mass
    slack = rows @ y - q
    # with sigma = 0: lower row reads -a1 e^-... <= 0, the upper row is satisfied
    np.testing.assert_allclose(slack[0::2], -ref.lower / sc.accel, rtol=1e-12)
    np.testing.assert_allclose(slack[1::2], ref.upper / sc.accel, rtol=1e-12)


def test_lcvx_matches_convex_reference(hop_cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ref, _ = cvxpy_lcvx_objective(hop_cfg)
    res = solve_lcvx(hop_cfg)
    assert res.converged
    assert res.objective == pytest.approx(ref, rel=1e-4)


def test_exproj_small_hop_respects_bounds(hop_cfg):
    res = solve_exproj(hop_cfg)
    assert res.converged
    mag = res.trajectory.thrust
    assert np.all(mag >= hop_cfg.rho1 * (1 - 1e-6)) and np.all(mag <= hop_cfg.rho2 * (1 + 1e-6))
    tilt = res.trajectory.tilt
    assert np.all(tilt <= hop_cfg.theta_tp + 1e-6)


def test_summary_fields(exproj_star):
    s = exproj_star.summary()
    for key in ("solver", "status", "converged", "iterations", "primal_res", "dual_res",
                "objective", "fuel", "final_position", "final_velocity"):
        assert key in s
    assert s["N"] == 47 and s["tf"] == pytest.approx(46.96)
