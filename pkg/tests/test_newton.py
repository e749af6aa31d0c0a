from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exproj.projections import NewtonError, curve_bracket, exp_root_residual, nearest_on_curve, newton_exp_root


def test_residual_vanishes_on_curve():
    # a point already on the curve is its own foot
    for z in (-1.0, 0.0, 2.0):
        assert exp_root_residual(z, z, 0.7 * math.exp(-z), 0.7) == pytest.approx(0.0, abs=1e-15)


def test_bracket_contains_sign_change():
    for z, s, rho in [(0.0, 2.0, 1.0), (0.0, 0.0, 0.25), (-0.1, 0.9, 1.0), (1.0, -1.0, 0.25)]:
        a, b = curve_bracket(z, s, rho)
        assert a <= b
        assert exp_root_residual(a, z, s, rho) <= 0.0 <= exp_root_residual(b, z, s, rho)


@settings(max_examples=300, deadline=None)
@given(z=st.floats(-3.0, 3.0), s=st.floats(-3.0, 5.0), rho=st.sampled_from([0.25, 1.0, 3.0]))
def test_newton_meets_tolerance(z, s, rho):
    if s == rho * math.exp(-z):
        return
    t, it = newton_exp_root(z, s, rho, tol=1e-12, max_iters=20, full_output=True)
    a, b = curve_bracket(z, s, rho)
    assert a - 1e-12 <= t <= b + 1e-12
    assert it <= 20
    f = exp_root_residual(t, z, s, rho)
    scale = max(1.0, math.exp(t) * (1 + abs(t - z)))
    assert abs(f) <= max(1e-12, 8 * 2.2e-16 * scale)


def test_typical_instances_converge_fast():
    for z, s in [(-0.05, 1.3), (-0.1, 0.2), (-0.15, 1.05), (-0.01, 0.0)]:
        rho = 1.0 if s > math.exp(-z) else 0.25
        t, it = nearest_on_curve(z, s, rho)
        assert abs(exp_root_residual(t, z, s, rho)) <= 1e-12
        assert it <= 6


def test_iteration_cap_raises():
    with pytest.raises(NewtonError):
        newton_exp_root(0.0, 3.0, 1.0, tol=1e-300, max_iters=1, t0=-1.0)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        newton_exp_root(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        newton_exp_root(0.0, 1.0, 1.0, tol=0.0)
