"""Compare the compiled and pure-Python projection kernels.

Times each batch operator on random inputs shaped like one ADMM splitting
step, then one full ExProj solve per backend.

    python3 benchmarks/bench_kernels.py [--n 47] [--repeat 200] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from exproj import kernels
from exproj.config import default_scenario
from exproj.solvers import solve_exproj


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def band_input(rng: np.random.Generator, n: int) -> np.ndarray:
    """Band vector ``[s0, s1, z1, ...]`` with most points outside the band."""
    z = rng.uniform(-0.2, 0.0, n)
    s = rng.uniform(0.0, 1.6, n)
    v = np.empty(2 * n + 1)
    v[0] = rng.uniform(0.0, 1.0)
    v[1::2], v[2::2] = s, z
    return v


def run(n: int, repeat: int, solve: bool) -> list[dict]:
    rng = np.random.default_rng(0)
    cone_in = rng.normal(size=(n, 4))
    band_in = band_input(rng, n)
    rows = []
    backends = [b for b in ("python", "compiled") if b in kernels.BACKENDS]
    for name in backends:
        k = kernels.get_backend(name)
        ops = {
            "surface_batch": lambda: k.surface_batch(cone_in),
            "cone_batch": lambda: k.cone_batch(cone_in),
            "band_batch": lambda: k.band_batch(band_in, 0.2, 1.0, 0.25, 1.0, 1e-12, 20),
        }
        for op, fn in ops.items():
            rows.append({"backend": name, "case": op, "n": n, "seconds": best_of(fn, repeat)})
        if solve:
            cfg = default_scenario()
            t0 = time.perf_counter()
            res = solve_exproj(cfg, backend=name)
            rows.append({"backend": name, "case": f"solve_exproj ({res.iterations} it)",
                         "n": cfg.N, "seconds": time.perf_counter() - t0})
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=47, help="steps per batch")
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--no-solve", action="store_true", help="skip the full-solve timing")
    parser.add_argument("--csv", help="also write the table here")
    args = parser.parse_args(argv)
    rows = run(args.n, args.repeat, not args.no_solve)
    base = {r["case"].split(" (")[0]: r["seconds"] for r in rows if r["backend"] == "python"}
    print(f"{'backend':<9} {'case':<28} {'n':>5} {'time':>12} {'speedup':>8}")
    for r in rows:
        ref = base.get(r["case"].split(" (")[0])
        speed = f"{ref / r['seconds']:.1f}x" if ref else ""
        print(f"{r['backend']:<9} {r['case']:<28} {r['n']:>5} {r['seconds'] * 1e6:10.1f}us {speed:>8}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
