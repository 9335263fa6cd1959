"""Time the compiled kernels against the pure-Python reference.

Runs the demo-scale workloads through both backends by rebinding the
kernel functions, so the numbers measure exactly what backend selection
changes. Invoke as a script:

    python3 benchmarks/bench_kernels.py
"""
import math
import time

import numpy as np

import impulsedde._kernels as kern
from impulsedde._kernels import reference
from impulsedde import IntegratorConfig, integrate_ivp, picard_periodic
from impulsedde.heat import HeatConfig, build_heat_problem, heat_grid, initial_history

try:
    from impulsedde._kernels import _speedups
except ImportError:
    _speedups = None


def _bind(impl):
    kern.linear_scan = impl.linear_scan
    kern.affine_ivp_scan = impl.affine_ivp_scan


def _time(fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    cfg = HeatConfig()
    problem = build_heat_problem(cfg)
    _, h, r_eff, _ = heat_grid(cfg)
    icfg = IntegratorConfig(h)
    phi = initial_history(cfg)

    workloads = [
        ("integrate 10 periods, n = 16",
         lambda: integrate_ivp(problem, phi, 10 * 2 * math.pi, icfg)),
        ("picard to 1e-8, n = 16",
         lambda: picard_periodic(problem, None, 1e-8, 200, icfg)),
    ]

    impls = [("python", reference)]
    if _speedups is not None:
        impls.append(("compiled", _speedups))

    print("%-32s" % "workload"
          + "".join("%12s" % name for name, _ in impls)
          + ("%10s" % "speedup" if len(impls) == 2 else ""))
    for label, fn in workloads:
        row = "%-32s" % label
        times = []
        for _, impl in impls:
            _bind(impl)
            times.append(_time(fn))
            row += "%11.3fs" % times[-1]
        if len(times) == 2:
            row += "%9.1fx" % (times[0] / times[1])
        print(row)
    _bind(_speedups if _speedups is not None else reference)


if __name__ == "__main__":
    main()
