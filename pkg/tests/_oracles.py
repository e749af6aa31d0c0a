"""Independent reference computations used by the tests.

Nothing here calls the package's projection or assembly code: projections are
checked against dense sampling and the convex baseline against a cvxpy model
written directly in physical variables.
"""

from __future__ import annotations

import math

import numpy as np

from exproj.config import ScenarioConfig

E1 = np.array([1.0, 0.0, 0.0])


def brute_cone_surface(u: np.ndarray, s: float, n_dirs: int = 4000) -> float:
    """Squared distance from ``(u, s)`` to the cone surface by direction sampling.

    For a fixed unit direction ``d`` the nearest surface point is
    ``k (d, 1)`` with ``k = max((u.d + s) / 2, 0)``, so sampling ``d`` densely
    and refining around the best one gives the global minimum.
    """
    rng = np.random.default_rng(1)
    dirs = rng.normal(size=(n_dirs, 3))
    nu = np.linalg.norm(u)
    extra = [E1] if nu == 0 else [u / nu, -u / nu, E1]
    dirs = np.vstack([dirs / np.linalg.norm(dirs, axis=1, keepdims=True), *extra])

    def dist(d):
        k = np.maximum((d @ u + s) / 2.0, 0.0)
        return np.sum((u - k[:, None] * d) ** 2, axis=1) + (s - k) ** 2

    return float(dist(dirs).min())


def brute_cone(u: np.ndarray, s: float) -> float:
    """Squared distance to the convex cone ``||u|| <= s`` on a 2-D grid of ``(a, k)``.

    The nearest cone point lies in the plane spanned by ``u`` and the axis, so
    it is ``(a u/||u||, k)`` with ``0 <= a <= k``.
    """
    nu = float(np.linalg.norm(u))
    if nu <= s:
        return 0.0
    hi = max(nu, abs(s)) + 1.0
    best = math.inf
    lo_k, hi_k = 0.0, hi
    for _ in range(5):
        k = np.linspace(lo_k, hi_k, 801)
        a = np.minimum(np.clip(nu, 0, None), k)  # for fixed k the best a is min(nu, k)
        d = (nu - a) ** 2 + (s - k) ** 2
        j = int(np.argmin(d))
        best = min(best, float(d[j]))
        span = (hi_k - lo_k) / 800 * 4
        lo_k, hi_k = max(0.0, k[j] - span), k[j] + span
    return best


def brute_band(z: float, s: float, rho1: float, rho2: float) -> float:
    """Squared distance to ``rho1 e^-z <= s <= rho2 e^-z`` by refined sampling of both curves."""
    lower, upper = rho1 * math.exp(-z), rho2 * math.exp(-z)
    if lower <= s <= upper:
        return 0.0
    rho = rho1 if s < lower else rho2
    span = abs(s - rho * math.exp(-z)) + 1e-12
    lo, hi = z - span - 1.0, z + span + 1.0
    best = math.inf
    for _ in range(8):
        t = np.linspace(lo, hi, 2001)
        d = (t - z) ** 2 + (rho * np.exp(-t) - s) ** 2
        j = int(np.argmin(d))
        best = min(best, float(d[j]))
        step = (hi - lo) / 2000
        lo, hi = t[j] - 3 * step, t[j] + 3 * step
    return best


def random_small_scenario(rng: np.random.Generator) -> ScenarioConfig:
    """A short hop with N in 3..5 and comfortable thrust margins."""
    N = int(rng.integers(3, 6))
    dt = float(rng.uniform(0.8, 1.5))
    m_wet = float(rng.uniform(1000.0, 2000.0))
    rho2 = m_wet * float(rng.uniform(8.0, 12.0))
    return ScenarioConfig(
        r_init=np.array([rng.uniform(2.0, 10.0), *rng.uniform(-1.5, 1.5, 2)]),
        v_init=rng.uniform(-1.0, 1.0, 3),
        g=np.array([-3.71, 0.0, 0.0]),
        m_wet=m_wet, m_dry=0.8 * m_wet,
        rho1=0.25 * rho2, rho2=rho2,
        alpha=5e-4,
        theta_tp=math.radians(float(rng.uniform(60.0, 90.0))),
        tf=N * dt, dt=dt,
        gamma=float(10 ** rng.uniform(1.0, 3.0)),
    )


def cvxpy_lcvx_objective(cfg: ScenarioConfig) -> tuple[float, dict]:
    """Convexified problem in SI variables; returns the objective in solver units.

    The cost ``alpha dt sum(sigma) + gamma (|r_N|^2 / L^2 + |v_N|^2 / V^2)``
    uses reference length ``L = |r_init|`` and velocity ``V = L / T0`` with
    ``T0 = sqrt(L m_wet / rho2)``.
    """
    import cvxpy as cp

    N = int(round(cfg.tf / cfg.dt))
    dt = cfg.dt
    g = np.asarray(cfg.g)
    L = max(float(np.linalg.norm(cfg.r_init)), 1.0)
    T0 = math.sqrt(L * cfg.m_wet / cfg.rho2)
    V = L / T0
    u = cp.Variable((N, 3))
    s = cp.Variable(N)
    r = cp.Variable((N + 1, 3))
    v = cp.Variable((N + 1, 3))
    z = cp.Variable(N + 1)
    cons = [r[0] == cfg.r_init, v[0] == cfg.v_init, z[0] == math.log(cfg.m_wet),
            z[N] >= math.log(cfg.m_dry)]
    for i in range(N):
        cons += [
            r[i + 1] == r[i] + dt * v[i] + 0.5 * dt**2 * (u[i] + g),
            v[i + 1] == v[i] + dt * (u[i] + g),
            z[i + 1] == z[i] - cfg.alpha * dt * s[i],
            cp.norm(u[i]) <= s[i],
            u[i, 0] >= math.cos(cfg.theta_tp) * s[i],
        ]
        zr = math.log(cfg.m_wet - cfg.alpha * cfg.rho2 * i * dt)
        cons += [
            s[i] >= cfg.rho1 * math.exp(-zr) * (1 - (z[i] - zr)),
            s[i] <= cfg.rho2 * math.exp(-zr) * (1 - (z[i] - zr)),
        ]
    obj = cfg.alpha * dt * cp.sum(s) + cfg.gamma * (cp.sum_squares(r[N]) / L**2
                                                   + cp.sum_squares(v[N]) / V**2)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solve failed: {prob.status}")
    return float(prob.value), {"u": u.value, "s": s.value, "r": r.value, "v": v.value, "z": z.value}
