from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from exproj import kernels
from exproj.projections import BandPoint, ConePoint, project_cone, project_cone_surface, project_exp_band

BACKENDS = sorted(kernels.BACKENDS)
compiled_only = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


@pytest.fixture
def cone_input(rng):
    v = rng.normal(size=(500, 4))
    v[:20, :3] = 0.0  # apex direction
    v[20:40, 3] = np.linalg.norm(v[20:40, :3], axis=1)  # already on the surface
    return v


def band_input(rng, n=500):
    v = np.empty(2 * n + 1)
    v[0] = rng.uniform(-1, 2)
    v[1::2] = rng.uniform(-1.0, 4.0, n)
    v[2::2] = rng.uniform(-2.0, 1.0, n)
    return v


@pytest.mark.parametrize("name", BACKENDS)
def test_surface_batch_matches_scalar(name, cone_input):
    out = kernels.get_backend(name).surface_batch(cone_input)
    for row, got in zip(cone_input, out):
        p = project_cone_surface(ConePoint(row[:3], row[3]))
        np.testing.assert_allclose(got, [*p.u, p.sigma], rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("name", BACKENDS)
def test_cone_batch_matches_scalar(name, cone_input):
    out = kernels.get_backend(name).cone_batch(cone_input)
    for row, got in zip(cone_input, out):
        p = project_cone(ConePoint(row[:3], row[3]))
        np.testing.assert_allclose(got, [*p.u, p.sigma], rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("name", BACKENDS)
def test_band_batch_matches_scalar(name, rng):
    v = band_input(rng)
    out = kernels.get_backend(name).band_batch(v, 0.25, 1.0, 0.25, 1.0)
    assert out[0] == min(max(v[0], 0.25), 1.0)
    for k in range(len(v) // 2):
        s, z = v[1 + 2 * k], v[2 + 2 * k]
        p = project_exp_band(BandPoint(z, s), 0.25, 1.0)
        np.testing.assert_allclose([out[2 + 2 * k], out[1 + 2 * k]], [p.z, p.sigma], rtol=1e-12, atol=1e-13)


@compiled_only
def test_backends_agree(rng, cone_input):
    py, cc = kernels.get_backend("python"), kernels.get_backend("compiled")
    v = band_input(rng, 2000)
    np.testing.assert_allclose(cc.band_batch(v, 0.2, 1.0, 0.25, 1.0), py.band_batch(v, 0.2, 1.0, 0.25, 1.0),
                               rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(cc.surface_batch(cone_input), py.surface_batch(cone_input), rtol=1e-14)
    t1, i1 = cc.nearest_on_curve_batch(v[2::2], v[1::2], 1.0)
    t2, i2 = py.nearest_on_curve_batch(v[2::2], v[1::2], 1.0)
    np.testing.assert_allclose(t1, t2, rtol=1e-12, atol=1e-13)
    assert i1.max() <= 20 and i2.max() <= 20


@pytest.mark.parametrize("name", BACKENDS)
def test_band_batch_does_not_modify_input(name, rng):
    v = band_input(rng, 20)
    before = v.copy()
    kernels.get_backend(name).band_batch(v, 0.25, 1.0, 0.25, 1.0)
    np.testing.assert_array_equal(v, before)


def test_unknown_backend():
    with pytest.raises(ValueError, match="unknown"):
        kernels.get_backend("fortran")


def test_environment_forces_fallback():
    env = {**os.environ, "EXPROJ_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import exproj.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@compiled_only
def test_solver_results_match_across_backends(hop_cfg):
    from exproj.solvers import solve_exproj

    a = solve_exproj(hop_cfg, backend="python")
    b = solve_exproj(hop_cfg, backend="compiled")
    assert a.iterations == b.iterations
    np.testing.assert_allclose(a.state.y, b.state.y, rtol=1e-9, atol=1e-11)
