"""Command-line entry point.

Subcommands::

    exproj solve   [--solver exproj|lcvx|both] [--tf S] [--out DIR] ...
    exproj compare [--tf S] [--out DIR] ...
    exproj sweep   --t-lo S --t-hi S [--solver ...] [--out DIR] ...
    exproj check   TRAJECTORY.csv [--tf S] ...

Exit codes: 0 converged and feasible, 2 converged but the audit fails,
3 not converged, 1 bad input or any other error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analysis, kernels
from .admm import KktError, SolveResult
from .analysis import NoFeasibleError, Tolerances
from .config import ScenarioConfig, ScenarioError, load_scenario, nominal_step, retime
from .export import read_trajectory_csv, to_jsonable, write_json, write_rows_csv, write_trajectory_csv
from .projections import NewtonError
from .solvers import SOLVERS

log = logging.getLogger("exproj")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 0, 1, 2, 3
DEFAULT_SCENARIO = Path(__file__).with_name("data") / "mars.cfg"
TOL_FLAGS = ("thrust", "pointing", "position", "velocity", "mass", "dynamics")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with "infeasible"
    def error(self, message: str):
        raise UsageError(message)


@dataclass(frozen=True)
class RunManifest:
    """Everything one invocation needs; solvers are deterministic, so no seed."""

    subcommand: str
    scenario: str
    solver: str = "exproj"
    out: str | None = None
    tf: float | None = None
    dt: float | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    overrides: dict[str, float] = field(default_factory=dict)
    backend: str | None = None
    t_lo: float | None = None
    t_hi: float | None = None
    workers: int | None = None
    refine: bool = True
    trajectory: str | None = None

    @property
    def solvers(self) -> tuple[str, ...]:
        return tuple(SOLVERS) if self.solver == "both" else (self.solver,)

    def tol(self) -> Tolerances:
        return Tolerances(**self.tolerances)

    def scenario_config(self) -> ScenarioConfig:
        path = Path(self.scenario)
        if not path.is_file():
            raise FileNotFoundError(f"scenario file not found: {path}")
        cfg = load_scenario(path)
        if self.overrides:
            cfg = dataclasses.replace(cfg, **self.overrides)
        # --tf/--dt snap the step to a whole number of steps
        return retime(cfg, self.tf if self.tf is not None else cfg.tf, self.nominal_dt())

    def nominal_dt(self) -> float:
        """``--dt`` if given, else the step written in the scenario file."""
        return self.dt if self.dt is not None else nominal_step(Path(self.scenario))


def exit_code(converged: bool, feasible: bool) -> int:
    if not converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def _worst(codes: Sequence[int]) -> int:
    rank = {EXIT_OK: 0, EXIT_INFEASIBLE: 1, EXIT_NOT_CONVERGED: 2, EXIT_ERROR: 3}
    return max(codes, key=rank.__getitem__, default=EXIT_OK)


def _out_dir(m: RunManifest) -> Path | None:
    if m.out is None:
        return None
    out = Path(m.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(m, out / "manifest.json")
    return out


def _result_record(result: SolveResult, cfg: ScenarioConfig) -> dict:
    record = result.summary()
    record["scenario"] = cfg.to_dict()
    record["backend"] = kernels.BACKEND
    return record


def _write_solution(out: Path | None, result: SolveResult, cfg: ScenarioConfig,
                    report: analysis.FeasibilityReport) -> None:
    if out is None:
        return
    write_trajectory_csv(result.trajectory, out / f"{result.label}_trajectory.csv")
    write_json(_result_record(result, cfg), out / f"{result.label}_result.json")
    write_json(report, out / f"{result.label}_report.json")


def _solve(m: RunManifest, cfg: ScenarioConfig, name: str) -> SolveResult:
    return SOLVERS[name](cfg, backend=m.backend)


def cmd_solve(m: RunManifest) -> int:
    cfg = m.scenario_config()
    out = _out_dir(m)
    codes = []
    for name in m.solvers:
        result = _solve(m, cfg, name)
        report = analysis.check_feasibility(result.trajectory, cfg, m.tol())
        _write_solution(out, result, cfg, report)
        code = exit_code(result.converged, report.feasible)
        codes.append(code)
        failed = ", ".join(report.failed()) or "none"
        print(f"{name}: tf={cfg.tf:.3f} s  N={cfg.N}  status={result.status}  "
              f"iters={result.iterations}  fuel={result.fuel:.3f} kg  "
              f"|T| in [{result.trajectory.thrust.min():.1f}, {result.trajectory.thrust.max():.1f}] N  "
              f"failed checks: {failed}  ({result.solve_time:.2f} s)")
    return _worst(codes)


def cmd_compare(m: RunManifest) -> int:
    cfg = m.scenario_config()
    out = _out_dir(m)
    a, b = (_solve(m, cfg, name) for name in ("exproj", "lcvx"))
    cmp = analysis.compare(a, b, cfg, m.tol())
    print(f"tf = {cfg.tf:.3f} s, N = {cfg.N}")
    print(cmp.table())
    print(f"fuel difference (exproj - lcvx): {cmp.fuel_delta:+.3f} kg")
    if out is not None:
        for result, summary in ((a, cmp.a), (b, cmp.b)):
            _write_solution(out, result, cfg, summary.report)
        write_json(cmp, out / "comparison.json")
        rows = []
        for s in (cmp.a, cmp.b):
            rec = to_jsonable(s)
            report = rec.pop("report")
            rec.pop("terminal_position"), rec.pop("terminal_velocity")
            rows.append({**rec, **{k: v for k, v in report.items() if k not in ("feasible", "tolerances")}})
        write_rows_csv(rows, out / "comparison.csv")
    return EXIT_OK if a.converged and b.converged else EXIT_NOT_CONVERGED


def cmd_sweep(m: RunManifest) -> int:
    if m.t_lo is None or m.t_hi is None:
        raise UsageError("sweep needs --t-lo and --t-hi")
    if m.t_lo > m.t_hi:
        raise UsageError(f"--t-lo ({m.t_lo}) must not exceed --t-hi ({m.t_hi})")
    cfg = m.scenario_config()
    step = m.nominal_dt()
    out = _out_dir(m)
    rows = analysis.sweep(cfg, m.t_lo, m.t_hi, solvers=m.solvers, dt=step, tol=m.tol(),
                          workers=m.workers)
    table = [{"tf": r.tf, "solver": r.solver, "status": r.status, "converged": r.converged,
              "fuel": r.fuel, "feasible": r.feasible, "iterations": r.iterations,
              **{k: v for k, v in dataclasses.asdict(r.report).items()
                 if k not in ("feasible", "tolerances")}} for r in rows]
    for r in rows:
        print(f"{r.tf:8.3f}  {r.solver:<6}  {r.status:<9}  fuel={r.fuel:9.3f}  feasible={r.feasible}")
    code = EXIT_OK
    search = None
    if "exproj" in m.solvers:
        try:
            search = analysis.search_optimal_tf(cfg, m.t_lo, m.t_hi, dt=step, tol=m.tol(),
                                                refine=m.refine, rows=rows)
            print(f"tf* = {search.tf_star:.3f} s (grid {search.tf_grid:.3f} s), "
                  f"fuel {search.fuel:.3f} kg")
        except NoFeasibleError as exc:
            print(f"no feasible flight time: {exc}", file=sys.stderr)
            code = EXIT_INFEASIBLE
    if out is not None:
        write_rows_csv(table, out / "sweep.csv")
        if search is not None:
            write_json({"tf_star": search.tf_star, "fuel": search.fuel, "tf_grid": search.tf_grid,
                        "refinements": [{"tf": r.tf, "fuel": r.fuel, "feasible": r.feasible,
                                         "converged": r.converged} for r in search.refinements]},
                       out / "tf_star.json")
    return code


def cmd_check(m: RunManifest) -> int:
    if m.trajectory is None:
        raise UsageError("check needs a trajectory CSV")
    path = Path(m.trajectory)
    if not path.is_file():
        raise FileNotFoundError(f"trajectory file not found: {path}")
    traj = read_trajectory_csv(path)
    tf = m.tf if m.tf is not None else float(traj.t[-1])
    base = m.scenario_config()
    cfg = dataclasses.replace(base, tf=tf, dt=tf / traj.N)
    report = analysis.check_feasibility(traj, cfg, m.tol())
    for key, (value, limit) in report.violations().items():
        mark = "ok" if value <= limit else "FAIL"
        print(f"{key:<18} {value:12.4e}  (tol {limit:.1e})  {mark}")
    print(f"fuel: {analysis.fuel_consumed(traj):.3f} kg  feasible: {report.feasible}")
    out = _out_dir(m)
    if out is not None:
        write_json(report, out / "report.json")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "sweep": cmd_sweep, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", default=str(DEFAULT_SCENARIO),
                        help="scenario file (key = value or JSON); defaults to the bundled Mars case")
    common.add_argument("--tf", type=float, help="time of flight (s)")
    common.add_argument("--dt", type=float, help="nominal step (s), snapped so tf is a whole number of steps")
    common.add_argument("--out", help="directory for CSV/JSON artifacts")
    common.add_argument("--max-iters", type=int, help="total ADMM iteration budget")
    common.add_argument("--penalty-rho", type=float, help="initial ADMM penalty")
    common.add_argument("--gamma", type=float, help="terminal-state weight")
    common.add_argument("--backend", choices=sorted(kernels.BACKENDS), help="projection kernels")
    for name in TOL_FLAGS:
        common.add_argument(f"--tol-{name}", type=float, metavar="X", help=f"audit tolerance: {name}")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="exproj", description="Powered-descent guidance by ADMM with direct "
                     "nonconvex projections, with a convexified baseline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("solve", parents=[common], help="solve one flight time")
    p.add_argument("--solver", choices=("exproj", "lcvx", "both"), default="exproj")
    sub.add_parser("compare", parents=[common], help="solve with both methods and tabulate")
    p = sub.add_parser("sweep", parents=[common], help="scan flight times and locate tf*")
    p.add_argument("--solver", choices=("exproj", "lcvx", "both"), default="exproj")
    p.add_argument("--t-lo", type=float, required=True)
    p.add_argument("--t-hi", type=float, required=True)
    p.add_argument("--workers", type=int, help="solve grid points in parallel processes")
    p.add_argument("--no-refine", action="store_true", help="skip golden-section refinement")
    p = sub.add_parser("check", parents=[common], help="audit a trajectory CSV")
    p.add_argument("trajectory")
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    overrides = {key: getattr(args, key) for key in ("max_iters", "penalty_rho", "gamma")
                 if getattr(args, key) is not None}
    tolerances = {name: getattr(args, f"tol_{name}") for name in TOL_FLAGS
                  if getattr(args, f"tol_{name}") is not None}
    return RunManifest(
        subcommand=args.command, scenario=args.scenario, solver=getattr(args, "solver", "both"),
        out=args.out, tf=args.tf, dt=args.dt, tolerances=tolerances, overrides=overrides,
        backend=args.backend, t_lo=getattr(args, "t_lo", None), t_hi=getattr(args, "t_hi", None),
        workers=getattr(args, "workers", None), refine=not getattr(args, "no_refine", False),
        trajectory=getattr(args, "trajectory", None))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        manifest = manifest_from_args(args)
        return COMMANDS[manifest.subcommand](manifest)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    except (FileNotFoundError, ScenarioError, ValueError, KktError, NewtonError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
