from __future__ import annotations

import math

import numpy as np
import pytest

from exproj.config import ScenarioConfig, default_scenario, retime
from exproj.solvers import solve_exproj, solve_lcvx

TF_STAR = 46.96


@pytest.fixture(scope="session")
def cfg():
    return default_scenario(TF_STAR)


@pytest.fixture(scope="session")
def small_cfg(cfg):
    """Five-step version of the Mars scenario; cheap to assemble and factor."""
    return retime(cfg, 5.0, 1.0)


@pytest.fixture(scope="session")
def hop_cfg():
    """A 6 m, four-step hop that both solvers finish in well under a second."""
    return ScenarioConfig(
        r_init=np.array([6.0, 0.5, -0.5]), v_init=np.array([-0.5, 0.2, 0.0]),
        g=np.array([-3.71, 0.0, 0.0]), m_wet=1500.0, m_dry=1200.0,
        rho1=3750.0, rho2=15000.0, alpha=5e-4, theta_tp=math.radians(80.0),
        tf=4.0, dt=1.0, gamma=100.0)


@pytest.fixture(scope="session")
def exproj_star(cfg):
    return solve_exproj(cfg)


@pytest.fixture(scope="session")
def lcvx_star(cfg):
    return solve_lcvx(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
