"""Projections onto the constraint sets of the splitting scheme.

Scalar functions operate on one point and are the readable reference. The
``*_batch`` functions are the vectorized pure-numpy path used by the solver
when the compiled kernels are unavailable; :mod:`exproj.kernels` picks one.

Nearest points on the exponential curves ``sigma = rho * exp(-t)`` come from
the stationarity condition of the squared distance,

    f(t) = e^t (t - z) - rho^2 e^-t + rho sigma = 0,

solved by a bracketed Newton iteration. For points above the upper curve the
squared distance can have two local minima, so the bracket is split at the
inflection points of the distance and the closest candidate wins.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])


class NewtonError(RuntimeError):
    """Newton-Raphson did not reach the residual tolerance."""


class ConePoint(NamedTuple):
    u: np.ndarray
    sigma: float


class BandPoint(NamedTuple):
    z: float
    sigma: float


def project_cone_surface(p: ConePoint) -> ConePoint:
    """Nearest point on ``{(u, s): ||u|| = s}``; the apex maps along ``e1``."""
    u = np.asarray(p.u, dtype=float)
    s = float(p.sigma)
    nu = float(np.linalg.norm(u))
    if s == nu:
        return ConePoint(u.copy(), s)
    if s <= -nu:
        return ConePoint(np.zeros_like(u), 0.0)
    k = 0.5 * (nu + s)
    direction = u / nu if nu > 0.0 else E1
    return ConePoint(k * direction, k)


def project_cone(p: ConePoint) -> ConePoint:
    """Nearest point of the convex cone ``{(u, s): ||u|| <= s}``."""
    u = np.asarray(p.u, dtype=float)
    s = float(p.sigma)
    nu = float(np.linalg.norm(u))
    if nu <= s:
        return ConePoint(u.copy(), s)
    if s <= -nu:
        return ConePoint(np.zeros_like(u), 0.0)
    k = 0.5 * (nu + s)
    return ConePoint(k * u / nu, k)


def project_interval(sigma: float, lo: float, hi: float) -> float:
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    return min(max(sigma, lo), hi)


def project_nonneg(v: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def exp_root_residual(t: float, z: float, sigma: float, rho: float) -> float:
    et = math.exp(t)
    return et * (t - z) - rho * rho / et + rho * sigma


def _exp_root_slope(t: float, z: float, rho: float) -> float:
    et = math.exp(t)
    return et * (1.0 + t - z) + rho * rho / et


def newton_exp_root(z: float, sigma: float, rho: float, tol: float = 1e-12,
                    max_iters: int = 20, bracket: tuple[float, float] | None = None,
                    t0: float | None = None, full_output: bool = False):
    """Root of ``e^t (t - z) - rho^2 e^-t + rho sigma`` near the curve point.

    Newton steps from ``t0`` (default ``z``) are kept inside a bracket with
    ``f(a) <= 0 <= f(b)``; a step leaving it is replaced by bisection. Raises
    :class:`NewtonError` if ``tol`` is not met in ``max_iters`` steps.
    With ``full_output`` returns ``(t, iterations)``.
    """
    if rho <= 0.0 or tol <= 0.0:
        raise ValueError("rho and tol must be positive")
    if bracket is None:
        bracket = curve_bracket(z, sigma, rho)
    a, b = bracket
    t = z if t0 is None else t0
    t = min(max(t, a), b)
    it = 0
    while True:
        ft = exp_root_residual(t, z, sigma, rho)
        if abs(ft) <= tol:
            break
        if it >= max_iters:
            raise NewtonError(
                f"no convergence in {max_iters} steps (z={z}, sigma={sigma}, rho={rho}, |f|={abs(ft):.3e})")
        if ft < 0.0:
            a = t
        else:
            b = t
        d = _exp_root_slope(t, z, rho)
        it += 1
        if d > 0.0 and abs(ft / d) <= 2.0 * math.ulp(max(abs(t), 1.0)):
            # Newton step below resolution: residual is rounding noise
            t -= ft / d
            break
        tn = t - ft / d if d > 0.0 else 0.5 * (a + b)
        if not a < tn < b:
            tn = 0.5 * (a + b)
        if b - a <= 4.0 * math.ulp(max(abs(a), abs(b), 1.0)):
            t = tn
            break
        t = tn
    return (t, it) if full_output else t


def curve_bracket(z: float, sigma: float, rho: float) -> tuple[float, float]:
    """Interval of ``t`` that must contain the foot of the perpendicular."""
    gap = sigma - rho * math.exp(-z)
    if gap > 0.0:
        return max(z - gap, math.log(rho / sigma)), z
    hi = z - gap
    if sigma > 0.0:
        hi = min(hi, math.log(rho / sigma))
    return z, hi


def _concave_window(sigma: float, rho: float) -> tuple[float, float] | None:
    # d2/dt2 of the squared distance is 2(1 + 2s^2 - sigma s), s = rho e^-t
    disc = sigma * sigma - 8.0
    if sigma <= 0.0 or disc <= 0.0:
        return None
    root = math.sqrt(disc)
    s_hi, s_lo = 0.25 * (sigma + root), 0.25 * (sigma - root)
    return math.log(rho / s_hi), math.log(rho / s_lo)


def _sqdist(t: float, z: float, sigma: float, rho: float) -> float:
    return (t - z) ** 2 + (rho * math.exp(-t) - sigma) ** 2


def nearest_on_curve(z: float, sigma: float, rho: float, tol: float = 1e-12,
                     max_iters: int = 20) -> tuple[float, int]:
    """Global nearest point ``(t, rho e^-t)`` of the curve; returns ``(t, iters)``."""
    s0 = rho * math.exp(-z)
    if sigma == s0:
        return z, 0
    lo, hi = curve_bracket(z, sigma, rho)
    pieces = [(lo, hi)]
    window = _concave_window(sigma, rho)
    if window is not None and window[0] < hi and window[1] > lo:
        pieces = [(lo, min(hi, window[0])), (max(lo, window[1]), hi)]
    tangent = z - s0 * (sigma - s0) / (1.0 + s0 * s0)
    best = (math.inf, z, 0)
    for a, b in pieces:
        if a > b:
            continue
        candidates = [(a, 0), (b, 0)]
        fa = exp_root_residual(a, z, sigma, rho)
        fb = exp_root_residual(b, z, sigma, rho)
        if fa <= 0.0 <= fb and a < b:
            t0 = min(max(tangent, a), b)
            candidates.append(newton_exp_root(z, sigma, rho, tol, max_iters, (a, b), t0, True))
        for t, it in candidates:
            d = _sqdist(t, z, sigma, rho)
            if d < best[0]:
                best = (d, t, it)
    return best[1], best[2]


def project_exp_band(p: BandPoint, rho1: float, rho2: float, tol: float = 1e-12,
                     max_iters: int = 20) -> BandPoint:
    """Nearest point of ``{(z, s): rho1 e^-z <= s <= rho2 e^-z}``."""
    if not 0.0 < rho1 < rho2:
        raise ValueError("need 0 < rho1 < rho2")
    z, s = float(p.z), float(p.sigma)
    lower, upper = rho1 * math.exp(-z), rho2 * math.exp(-z)
    if lower <= s <= upper:
        return BandPoint(z, s)
    rho = rho1 if s < lower else rho2
    t, _ = nearest_on_curve(z, s, rho, tol, max_iters)
    return BandPoint(t, rho * math.exp(-t))


# ---------------------------------------------------------------- batch path

def surface_batch(v: np.ndarray) -> np.ndarray:
    """Row-wise :func:`project_cone_surface` of an ``(n, 4)`` array ``[u, s]``."""
    v = np.asarray(v, dtype=float).reshape(-1, 4)
    u, s = v[:, :3], v[:, 3]
    nu = np.linalg.norm(u, axis=1)
    k = 0.5 * (nu + s)
    safe = np.where(nu > 0.0, nu, 1.0)
    direction = np.where((nu > 0.0)[:, None], u / safe[:, None], E1)
    out = np.empty_like(v)
    out[:, :3] = k[:, None] * direction
    out[:, 3] = k
    on = s == nu
    out[on] = v[on]
    out[s <= -nu] = 0.0
    return out


def cone_batch(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1, 4)
    u, s = v[:, :3], v[:, 3]
    nu = np.linalg.norm(u, axis=1)
    k = 0.5 * (nu + s)
    out = np.empty_like(v)
    out[:, :3] = (k / np.where(nu > 0.0, nu, 1.0))[:, None] * u
    out[:, 3] = k
    inside = nu <= s
    out[inside] = v[inside]
    out[s <= -nu] = 0.0
    return out


def _vec_residual(t, z, s, rho):
    et = np.exp(t)
    return et * (t - z) - rho * rho / et + rho * s


def _vec_newton(z, s, rho, a, b, t, tol, max_iters):
    """Bracketed Newton on arrays; every bracket must satisfy f(a) <= 0 <= f(b)."""
    iters = np.zeros(t.shape, dtype=np.int64)
    active = np.ones(t.shape, dtype=bool)
    stalled = np.zeros(t.shape, dtype=bool)
    for _ in range(max_iters + 1):
        ft = _vec_residual(t, z, s, rho)
        active &= np.abs(ft) > tol
        active &= (b - a) > 4.0 * np.spacing(np.maximum(np.maximum(abs(a), abs(b)), 1.0))
        active &= ~stalled
        if not active.any():
            return t, iters
        neg = ft < 0.0
        a = np.where(active & neg, t, a)
        b = np.where(active & ~neg, t, b)
        et = np.exp(t)
        d = et * (1.0 + t - z) + rho * rho / et
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ft / d
            tn = t - step
        stalled = active & (d > 0.0) & (np.abs(step) <= 2.0 * np.spacing(np.maximum(np.abs(t), 1.0)))
        bad = ~stalled & ((d <= 0.0) | ~(tn > a) | ~(tn < b))
        tn = np.where(bad, 0.5 * (a + b), tn)
        t = np.where(active, tn, t)
        iters += active
    ft = _vec_residual(t, z, s, rho)
    failed = active & ~stalled & (np.abs(ft) > tol)
    if failed.any():
        k = int(np.flatnonzero(failed)[0])
        raise NewtonError(f"no convergence in {max_iters} steps (z={z[k]}, sigma={s[k]}, rho={rho[k]})")
    return t, iters


def nearest_on_curve_batch(z, s, rho, tol=1e-12, max_iters=20):
    """Vectorized :func:`nearest_on_curve`; returns ``(t, iterations)``."""
    z, s, rho = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, s, rho)))
    s0 = rho * np.exp(-z)
    gap = s - s0
    above = gap > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(rho / s)
    lo = np.where(above, np.maximum(z - gap, np.where(s > 0, logr, -np.inf)), z)
    hi = np.where(above, z, z - gap)
    hi = np.where(~above & (s > 0.0), np.minimum(hi, logr), hi)
    disc = s * s - 8.0
    root = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = np.log(rho / (0.25 * (s + root)))
        w1 = np.log(rho / (0.25 * (s - root)))
    split = (disc > 0.0) & (w0 < hi) & (w1 > lo)
    a1, b1 = lo, np.where(split, np.minimum(hi, w0), hi)
    a2, b2 = np.where(split, np.maximum(lo, w1), hi), hi
    tangent = z - s0 * gap / (1.0 + s0 * s0)

    best_t = z.copy()
    best_d = np.full(z.shape, np.inf)
    best_it = np.zeros(z.shape, dtype=np.int64)

    def offer(t, it, mask):
        nonlocal best_t, best_d, best_it
        d = (t - z) ** 2 + (rho * np.exp(-t) - s) ** 2
        take = mask & (d < best_d)
        best_t = np.where(take, t, best_t)
        best_d = np.where(take, d, best_d)
        best_it = np.where(take, it, best_it)

    zero = np.zeros(z.shape, dtype=np.int64)
    for a, b in ((a1, b1), (a2, b2)):
        valid = a <= b
        offer(a, zero, valid)
        offer(b, zero, valid)
        fa = _vec_residual(a, z, s, rho)
        fb = _vec_residual(b, z, s, rho)
        ok = valid & (a < b) & (fa <= 0.0) & (fb >= 0.0)
        if ok.any():
            idx = np.flatnonzero(ok)
            t0 = np.clip(tangent[idx], a[idx], b[idx])
            t, it = _vec_newton(z[idx], s[idx], rho[idx], a[idx], b[idx], t0, tol, max_iters)
            tt = best_t.copy()
            tt[idx] = t
            ii = zero.copy()
            ii[idx] = it
            offer(tt, ii, ok)
    on = gap == 0.0
    best_t = np.where(on, z, best_t)
    best_it = np.where(on, 0, best_it)
    return best_t, best_it


def band_batch(v: np.ndarray, lo0: float, hi0: float, rho1: float, rho2: float,
               tol: float = 1e-12, max_iters: int = 20) -> np.ndarray:
    """Project ``[s_0, s_1, z_1, ..., s_{n}, z_{n}]``.

    Slot 0 is clamped to ``[lo0, hi0]``; each following ``(s, z)`` pair is
    projected onto the exponential band.
    """
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[0] = min(max(v[0], lo0), hi0)
    s, z = v[1::2], v[2::2]
    lower, upper = rho1 * np.exp(-z), rho2 * np.exp(-z)
    below, over = s < lower, s > upper
    outside = below | over
    if outside.any():
        idx = np.flatnonzero(outside)
        rho = np.where(below[idx], rho1, rho2)
        t, _ = nearest_on_curve_batch(z[idx], s[idx], rho, tol, max_iters)
        out[1 + 2 * idx] = rho * np.exp(-t)
        out[2 + 2 * idx] = t
    return out
