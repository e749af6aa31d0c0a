"""Discretized landing problem: dynamics, stacked variable layout and matrices.

The decision vector is ``y = [y_0, ..., y_{N-1}]`` with
``y_i = [u_i (3), x_{i+1} (6), sigma_i, z_{i+1}]`` where ``x = [r, v]``.
Everything inside ``y`` is nondimensional (see :class:`Scaling`); the
:class:`Trajectory` returned by :func:`unpack` is in SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .config import ScenarioConfig

BLOCK = 11
U, X, SIGMA, Z = slice(0, 3), slice(3, 9), 9, 10


@dataclass(frozen=True)
class Scaling:
    """Reference units: length, time and mass.

    Length is the initial range, mass the wet mass, and time is chosen so the
    full-throttle acceleration ``rho2 / m_wet`` is one. This keeps ``u`` and
    ``sigma`` of order one for every flight time.
    """

    length: float
    time: float
    mass: float

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "Scaling":
        length = max(float(np.linalg.norm(cfg.r_init)), 1.0)
        return cls(length, math.sqrt(length * cfg.m_wet / cfg.rho2), cfg.m_wet)

    @property
    def accel(self) -> float:
        return self.length / self.time**2

    @property
    def velocity(self) -> float:
        return self.length / self.time

    @property
    def log_mass(self) -> float:
        return math.log(self.mass)

    def thrust_bound(self, rho: float) -> float:
        """Thrust limit in N mapped to nondimensional ``sigma * e^z`` units."""
        return rho / (self.mass * self.accel)

    def mass_rate(self, alpha: float) -> float:
        return alpha * self.accel * self.time


@dataclass(frozen=True)
class DiscreteDynamics:
    """Exact zero-order-hold model of the double integrator and log-mass."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    mass_step: float
    N: int
    dt: float

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u + self.c


def zoh(dt: float, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    eye = np.eye(3)
    A = np.block([[eye, dt * eye], [np.zeros((3, 3)), eye]])
    B = np.vstack([0.5 * dt**2 * eye, dt * eye])
    c = np.concatenate([0.5 * dt**2 * g, dt * g])
    return A, B, c


def discretize(cfg: ScenarioConfig) -> DiscreteDynamics:
    n = round(cfg.tf / cfg.dt)
    if abs(n * cfg.dt - cfg.tf) > 1e-9 * cfg.dt * max(n, 1):
        raise ValueError(f"tf={cfg.tf} is not an integer multiple of dt={cfg.dt}")
    A, B, c = zoh(cfg.dt, np.asarray(cfg.g, dtype=float))
    return DiscreteDynamics(A, B, c, cfg.alpha * cfg.dt, int(n), cfg.dt)


@dataclass(frozen=True)
class Layout:
    """Positions of each step's entries inside ``y``."""

    N: int

    @property
    def size(self) -> int:
        return BLOCK * self.N

    def u(self, i: int) -> np.ndarray:
        return BLOCK * i + np.arange(3)

    def x(self, i: int) -> np.ndarray:
        """State ``x_i`` for ``i`` in 1..N (``x_0`` is data, not a variable)."""
        if not 1 <= i <= self.N:
            raise IndexError(i)
        return BLOCK * (i - 1) + 3 + np.arange(6)

    def sigma(self, i: int) -> int:
        return BLOCK * i + SIGMA

    def z(self, i: int) -> int:
        """Log-mass ``z_i`` for ``i`` in 1..N."""
        if not 1 <= i <= self.N:
            raise IndexError(i)
        return BLOCK * (i - 1) + Z

    def blocks(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y).reshape(self.N, BLOCK)


@dataclass(frozen=True)
class ProblemMatrices:
    """Stacked data of the splitting problem.

    ``C = [Dw1; Dw2; P]`` and ``q_tilde = [0; bw2; q]``. The band block may be
    empty (the convex baseline handles thrust bounds as rows of ``P``).
    """

    cfg: ScenarioConfig
    scaling: Scaling
    layout: Layout
    H: sp.csc_matrix
    h: np.ndarray
    G: sp.csc_matrix
    b: np.ndarray
    P: sp.csc_matrix
    q: np.ndarray
    Dw1: sp.csc_matrix
    Dw2: sp.csc_matrix
    bw2: np.ndarray
    z0: float
    x0: np.ndarray
    lower_bound: float
    upper_bound: float
    cos_tp: float
    C: sp.csc_matrix = field(init=False)
    q_tilde: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        C = sp.vstack([self.Dw1, self.Dw2, self.P]).tocsc()
        q_tilde = np.concatenate([np.zeros(self.Dw1.shape[0]), self.bw2, self.q])
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "q_tilde", q_tilde)

    @property
    def N(self) -> int:
        return self.layout.N

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.Dw1.shape[0], self.Dw2.shape[0], self.P.shape[0]

    def objective(self, y: np.ndarray) -> float:
        return float(y @ (self.H @ y) + self.h @ y)

    def with_inequalities(self, P: sp.spmatrix, q: np.ndarray, *, band: bool,
                          h: np.ndarray | None = None) -> "ProblemMatrices":
        """Copy with replaced inequality rows, optional band block and cost."""
        n = self.layout.size
        Dw2, bw2 = (self.Dw2, self.bw2) if band else (sp.csc_matrix((0, n)), np.zeros(0))
        return replace(self, P=sp.csc_matrix(P), q=np.asarray(q, dtype=float), Dw2=Dw2,
                       bw2=bw2, h=self.h if h is None else np.asarray(h, dtype=float))


def assemble(cfg: ScenarioConfig, dyn: DiscreteDynamics | None = None) -> ProblemMatrices:
    """Build the nondimensional problem data for ``cfg``.

    ``dyn`` (SI units) only fixes the horizon; the matrices themselves are
    built from the scaled model.
    """
    dyn = discretize(cfg) if dyn is None else dyn
    N = dyn.N
    sc = Scaling.from_config(cfg)
    lay = Layout(N)
    n = lay.size
    dtau = dyn.dt / sc.time
    A, B, c = zoh(dtau, np.asarray(cfg.g) / sc.accel)
    mass_step = sc.mass_rate(cfg.alpha) * dtau
    x0 = np.concatenate([cfg.r_init / sc.length, cfg.v_init / sc.velocity])
    z0 = 0.0

    # Dynamics: x_{i+1} - A x_i - B u_i = c ; z_{i+1} - z_i + mass_step sigma_i = 0
    rows, cols, vals = [], [], []
    b = np.zeros(7 * N)
    for i in range(N):
        r0 = 7 * i
        xi1, ui = lay.x(i + 1), lay.u(i)
        for k in range(6):
            rows.append(r0 + k); cols.append(xi1[k]); vals.append(1.0)
            for j in range(3):
                if B[k, j] != 0.0:
                    rows.append(r0 + k); cols.append(ui[j]); vals.append(-B[k, j])
            if i == 0:
                b[r0 + k] = c[k] + A[k] @ x0
            else:
                xi = lay.x(i)
                for j in range(6):
                    if A[k, j] != 0.0:
                        rows.append(r0 + k); cols.append(xi[j]); vals.append(-A[k, j])
                b[r0 + k] = c[k]
        rz = r0 + 6
        rows += [rz, rz]; cols += [lay.z(i + 1), lay.sigma(i)]; vals += [1.0, mass_step]
        if i == 0:
            b[rz] = z0
        else:
            rows.append(rz); cols.append(lay.z(i)); vals.append(-1.0)
    G = sp.csc_matrix((vals, (rows, cols)), shape=(7 * N, n))

    # Cost: -z_N + gamma ||x_N||^2
    H = sp.lil_matrix((n, n))
    for k in lay.x(N):
        H[k, k] = cfg.gamma
    h = np.zeros(n)
    h[lay.z(N)] = -1.0

    # Dw1 y = [u_0, sigma_0, ..., u_{N-1}, sigma_{N-1}]
    d1_cols = np.concatenate([np.r_[lay.u(i), lay.sigma(i)] for i in range(N)])
    Dw1 = sp.csc_matrix((np.ones(4 * N), (np.arange(4 * N), d1_cols)), shape=(4 * N, n))
    # Dw2 y = [sigma_0, sigma_1, z_1, ..., sigma_{N-1}, z_{N-1}]
    d2_cols = [lay.sigma(0)]
    for i in range(1, N):
        d2_cols += [lay.sigma(i), lay.z(i)]
    Dw2 = sp.csc_matrix((np.ones(2 * N - 1), (np.arange(2 * N - 1), d2_cols)),
                        shape=(2 * N - 1, n))
    bw2 = np.zeros(2 * N - 1)
    bw2[0] = z0

    P, q = pointing_and_floor(cfg, sc, lay)
    return ProblemMatrices(
        cfg=cfg, scaling=sc, layout=lay, H=H.tocsc(), h=h, G=G, b=b, P=P, q=q,
        Dw1=Dw1, Dw2=Dw2, bw2=bw2, z0=z0, x0=x0,
        lower_bound=sc.thrust_bound(cfg.rho1), upper_bound=sc.thrust_bound(cfg.rho2),
        cos_tp=math.cos(cfg.theta_tp),
    )


def pointing_and_floor(cfg: ScenarioConfig, sc: Scaling, lay: Layout) -> tuple[sp.csc_matrix, np.ndarray]:
    """Rows ``e1'u_i - cos(theta) sigma_i >= 0`` and ``z_N >= log(m_dry)``."""
    N, n = lay.N, lay.size
    cos_tp = math.cos(cfg.theta_tp)
    rows, cols, vals = [], [], []
    for i in range(N):
        rows.append(i); cols.append(lay.u(i)[0]); vals.append(1.0)
        if cos_tp != 0.0:
            rows.append(i); cols.append(lay.sigma(i)); vals.append(-cos_tp)
    rows.append(N); cols.append(lay.z(N)); vals.append(1.0)
    P = sp.csc_matrix((vals, (rows, cols)), shape=(N + 1, n))
    q = np.zeros(N + 1)
    q[N] = math.log(cfg.m_dry) - sc.log_mass
    return P, q


@dataclass(frozen=True)
class Trajectory:
    """Per-step trajectory in SI units; ``z`` is the natural log of mass in kg."""

    t: np.ndarray
    r: np.ndarray
    v: np.ndarray
    m: np.ndarray
    z: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    T: np.ndarray

    @property
    def N(self) -> int:
        return len(self.sigma)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def thrust(self) -> np.ndarray:
        return np.linalg.norm(self.T, axis=1)

    @property
    def tilt(self) -> np.ndarray:
        """Angle between each thrust vector and the vertical axis (rad)."""
        mag = self.thrust
        cosang = np.divide(self.T[:, 0], mag, out=np.ones_like(mag), where=mag > 0)
        return np.arccos(np.clip(cosang, -1.0, 1.0))

    @classmethod
    def from_controls(cls, cfg: ScenarioConfig, T: np.ndarray) -> "Trajectory":
        """Forward-simulate thrust commands (N) with the step-start mass."""
        dyn = discretize(cfg)
        T = np.asarray(T, dtype=float).reshape(dyn.N, 3)
        x = np.zeros((dyn.N + 1, 6))
        z = np.zeros(dyn.N + 1)
        x[0] = np.concatenate([cfg.r_init, cfg.v_init])
        z[0] = math.log(cfg.m_wet)
        u = np.zeros((dyn.N, 3))
        sigma = np.zeros(dyn.N)
        for i in range(dyn.N):
            m = math.exp(z[i])
            u[i] = T[i] / m
            sigma[i] = np.linalg.norm(u[i])
            x[i + 1] = dyn.step(x[i], u[i])
            z[i + 1] = z[i] - dyn.mass_step * sigma[i]
        m = cfg.m_wet * np.exp(z - z[0])  # exact m_wet while no fuel is burned
        return cls(t=dyn.dt * np.arange(dyn.N + 1), r=x[:, :3], v=x[:, 3:],
                   m=m, z=z, u=u, sigma=sigma, T=T)


def unpack(y: np.ndarray, cfg: ScenarioConfig) -> Trajectory:
    """Convert a stacked nondimensional ``y`` into an SI trajectory."""
    y = np.asarray(y, dtype=float)
    N = cfg.N
    if y.shape != (BLOCK * N,):
        raise ValueError(f"expected y of length {BLOCK * N}, got {y.shape}")
    sc = Scaling.from_config(cfg)
    blk = y.reshape(N, BLOCK)
    u = blk[:, U] * sc.accel
    sigma = blk[:, SIGMA] * sc.accel
    r = np.vstack([cfg.r_init, blk[:, 3:6] * sc.length])
    v = np.vstack([cfg.v_init, blk[:, 6:9] * sc.velocity])
    z = np.concatenate([[math.log(cfg.m_wet)], blk[:, Z] + sc.log_mass])
    m = cfg.m_wet * np.exp(z - z[0])  # exact m_wet while no fuel is burned
    T = m[:-1, None] * u
    return Trajectory(t=cfg.dt * np.arange(N + 1), r=r, v=v, m=m, z=z, u=u, sigma=sigma, T=T)


def pack(traj: Trajectory, cfg: ScenarioConfig) -> np.ndarray:
    """Inverse of :func:`unpack`."""
    sc = Scaling.from_config(cfg)
    if traj.N != cfg.N:
        raise ValueError(f"trajectory has {traj.N} steps, config expects {cfg.N}")
    blk = np.empty((traj.N, BLOCK))
    blk[:, U] = traj.u / sc.accel
    blk[:, 3:6] = traj.r[1:] / sc.length
    blk[:, 6:9] = traj.v[1:] / sc.velocity
    blk[:, SIGMA] = traj.sigma / sc.accel
    blk[:, Z] = traj.z[1:] - sc.log_mass
    return blk.reshape(-1)
