"""Scenario parameters and scenario-file parsing."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np


class ScenarioError(ValueError):
    """Invalid or incomplete scenario description."""


VECTOR_KEYS = ("r_init", "v_init", "g")
REQUIRED_KEYS = (
    "r_init", "v_init", "g", "m_wet", "m_dry", "rho1", "rho2", "alpha", "theta_tp", "tf",
)
INT_KEYS = ("max_iters", "nr_max_iters")


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical scenario plus solver knobs, all in SI units.

    ``theta_tp`` is in radians. ``tf`` must be an integer multiple of ``dt``;
    use :func:`retime` to pick a flight time off the nominal grid.
    """

    r_init: np.ndarray
    v_init: np.ndarray
    g: np.ndarray
    m_wet: float
    m_dry: float
    rho1: float
    rho2: float
    alpha: float
    theta_tp: float
    tf: float
    dt: float = 1.0
    gamma: float = 1e5
    penalty_rho: float = 0.01
    max_penalty: float = 10.0
    max_iters: int = 80000
    eps_primal: float = 1e-7
    eps_dual: float = 1e-7
    nr_tol: float = 1e-12
    nr_max_iters: int = 20
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        for key in VECTOR_KEYS:
            vec = np.array(getattr(self, key), dtype=float).reshape(-1)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise ScenarioError(f"{key} must be a finite 3-vector")
            vec.setflags(write=False)
            object.__setattr__(self, key, vec)
        self.validate()

    def validate(self) -> None:
        def check(ok: bool, key: str, msg: str) -> None:
            if not ok:
                raise ScenarioError(f"{key} {msg}")

        check(self.rho1 > 0, "rho1", "must be positive")
        check(self.rho2 > self.rho1, "rho2", "must exceed rho1")
        check(self.m_dry > 0, "m_dry", "must be positive")
        check(self.m_wet > self.m_dry, "m_wet", "must exceed m_dry")
        check(self.alpha > 0, "alpha", "must be positive")
        check(0 < self.theta_tp <= math.pi / 2 + 1e-12, "theta_tp", "must lie in (0, pi/2]")
        check(self.dt > 0, "dt", "must be positive")
        check(self.tf > 0, "tf", "must be positive")
        check(self.gamma > 0, "gamma", "must be positive")
        check(self.penalty_rho > 0, "penalty_rho", "must be positive")
        check(self.max_penalty > 0, "max_penalty", "must be positive")
        check(self.max_iters >= 1, "max_iters", "must be at least 1")
        check(self.eps_primal > 0 and self.eps_dual > 0, "eps_primal", "tolerances must be positive")
        check(self.nr_tol > 0, "nr_tol", "must be positive")
        check(self.nr_max_iters >= 1, "nr_max_iters", "must be at least 1")
        n = round(self.tf / self.dt)
        check(n >= 2, "tf", "must span at least two steps of dt")
        check(abs(n * self.dt - self.tf) <= 1e-9 * self.dt * max(n, 1), "tf",
              f"must be an integer multiple of dt (tf={self.tf}, dt={self.dt})")

    @property
    def N(self) -> int:
        return int(round(self.tf / self.dt))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("extra")
        for key in VECTOR_KEYS:
            out[key] = [float(x) for x in out[key]]
        return out


def retime(cfg: ScenarioConfig, tf: float, dt: float | None = None) -> ScenarioConfig:
    """Return ``cfg`` with flight time ``tf``.

    The step is snapped to ``tf / round(tf / dt)`` so the horizon stays an
    integer number of steps; ``dt`` defaults to the config's current step.
    """
    nominal = cfg.dt if dt is None else dt
    n = max(2, int(round(tf / nominal)))
    return replace(cfg, tf=float(tf), dt=float(tf) / n)


def _parse_value(key: str, raw: str) -> Any:
    text = raw.strip()
    if key in VECTOR_KEYS:
        parts = [p for p in text.strip("[]()").replace(",", " ").split() if p]
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ScenarioError(f"{key}: cannot parse vector {raw!r}") from exc
    deg = False
    if text.lower().endswith("deg"):
        deg, text = True, text[:-3].strip()
    try:
        value = float(text)
    except ValueError as exc:
        raise ScenarioError(f"{key}: cannot parse number {raw!r}") from exc
    return math.radians(value) if deg else value


def _parse_key_value(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split(sep, 1))
        out[key] = _parse_value(key, raw)
    return out


def scenario_from_mapping(data: Mapping[str, Any]) -> ScenarioConfig:
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ScenarioError(f"missing required key(s): {', '.join(missing)}")
    known = {f for f in ScenarioConfig.__dataclass_fields__ if f != "extra"}
    kwargs: dict[str, Any] = {}
    extra: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            extra[key] = value
        elif key in INT_KEYS:
            kwargs[key] = int(value)
        elif key in VECTOR_KEYS:
            kwargs[key] = value
        else:
            kwargs[key] = float(value)
    return ScenarioConfig(**kwargs, extra=extra)


def _read_mapping(source: str | Path) -> dict[str, Any]:
    text = str(source)
    if isinstance(source, Path) or ("\n" not in text and Path(text).is_file()):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {source}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON scenario: {exc}") from exc
        if "theta_tp" in data and isinstance(data["theta_tp"], str):
            data["theta_tp"] = _parse_value("theta_tp", data["theta_tp"])
        return data
    return _parse_key_value(text)


def nominal_step(source: str | Path) -> float:
    """The step ``dt`` as written in a scenario, before snapping (1 s if absent)."""
    dt = float(_read_mapping(source).get("dt", 1.0))
    if not dt > 0:
        raise ScenarioError(f"dt: must be positive, got {dt}")
    return dt


def load_scenario(source: str | Path, *, snap_dt: bool = True) -> ScenarioConfig:
    """Parse a scenario from a path or from configuration text.

    Both ``key = value`` text and JSON are accepted. Vectors are written as
    comma- or space-separated triples; scalars may carry a ``deg`` suffix.
    With ``snap_dt`` the step is adjusted so that ``tf`` is a whole number of
    steps.
    """
    data = _read_mapping(source)
    if snap_dt and "tf" in data:
        dt = float(data.get("dt", 1.0))
        n = max(2, int(round(float(data["tf"]) / dt)))
        data = {**data, "dt": float(data["tf"]) / n}
    return scenario_from_mapping(data)


def default_scenario(tf: float = 46.96) -> ScenarioConfig:
    """The Mars landing scenario shipped with the package, retimed to ``tf``."""
    path = Path(__file__).with_name("data") / "mars.cfg"
    return retime(load_scenario(path), tf, dt=1.0)
