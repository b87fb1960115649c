"""Compare the numba-compiled kernels with the interpreted numpy path.

Each backend runs in its own interpreter because ``BSFV_NUMBA`` is read at
import time::

    python benchmarks/bench_kernels.py            # both backends, side by side
    python benchmarks/bench_kernels.py --quick    # smaller problems
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    fn()  # warm-up (includes JIT compilation on the numba path)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run_cases(quick, repeat):
    from bsfv import _accel
    from bsfv.mesh import build_uniform
    from bsfv.model import default_market, european_call
    from bsfv.stepper import StepConfig, TimeGrid, march, thomas_solve

    rng = np.random.default_rng(0)
    n = 2_000 if quick else 20_000
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    main, rhs = 3.0 + rng.uniform(0, 1, n), rng.standard_normal(n)

    model = european_call(default_market())
    sizes = [(100, 100), (1199, 100)] if quick else [(100, 100), (400, 100), (1199, 400)]
    cases = {f"thomas n={n}": best_of(lambda: thomas_solve(sub, main, sup, rhs), repeat)}
    for N, M in sizes:
        mesh, grid = build_uniform(N, 300.0), TimeGrid.uniform(1.0, M)
        cfg = StepConfig(0.5, "fitted")
        cases[f"march N={N} M={M}"] = best_of(lambda: march(None, mesh, model, grid, cfg, store_all=False), repeat)
    return _accel.backend_name(), cases


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        backend, cases = run_cases(args.quick, args.repeat)
        print(json.dumps({"backend": backend, "cases": cases}))
        return

    results = {}
    for flag in ("1", "0"):
        cmd = [sys.executable, __file__, "--child", "--repeat", str(args.repeat)] + (["--quick"] if args.quick else [])
        out = subprocess.run(cmd, env=dict(os.environ, BSFV_NUMBA=flag), capture_output=True, text=True, check=True)
        data = json.loads(out.stdout.strip().splitlines()[-1])
        results[data["backend"]] = data["cases"]

    fast = results.get("numba", {})
    slow = results["python"]
    print(f"{'case':<26}{'numba [ms]':>12}{'python [ms]':>13}{'speed-up':>10}")
    for name, t_py in slow.items():
        t_nb = fast.get(name)
        if t_nb is None:
            print(f"{name:<26}{'n/a':>12}{1e3 * t_py:>13.2f}{'':>10}")
        else:
            print(f"{name:<26}{1e3 * t_nb:>12.2f}{1e3 * t_py:>13.2f}{t_py / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
