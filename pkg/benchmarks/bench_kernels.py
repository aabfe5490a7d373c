"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py [--grid N] [--repeat K]``.
Every kernel is called with identical inputs on both backends; the script
reports the best wall time of each and the largest output difference.
"""
import argparse
import math
import time

import numpy as np

from hardphase.eos import HARD_PHASE
from hardphase.kernels import available_backends
from hardphase.linear_operator import assemble_quadratic_form
from hardphase.steady_state import StarConfig, solve_steady_state, taylor_start


def best_time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(grid_size, steps):
    prof = solve_steady_state(HARD_PHASE, 12.0, StarConfig(grid_size=grid_size))
    r, rmid, drdx, drdx_mid = prof.grid.arrays()
    y1, m1 = taylor_start(HARD_PHASE, 12.0, r[1])
    asm = assemble_quadratic_form(prof)
    d, e, _ = asm.scaled()
    sigma = float(d.min()) - 2.0 * float(np.abs(e).max())
    b = np.linspace(1.0, 2.0, d.size)
    minv = 1.0 / asm.mass
    z0 = np.ones(asm.size)
    dt = 1e-4

    def tov(k):
        def run():
            ybar = np.full(r.size, np.nan)
            mass = np.full(r.size, np.nan)
            ybar[0], mass[0], ybar[1], mass[1] = 12.0, 0.0, y1, m1
            k.tov_rk4(r, rmid, drdx, drdx_mid, prof.grid.h, 1.0, 1.0, ybar, mass)
            return np.concatenate([ybar, mass])
        return run

    def sturm(k):
        def run():
            mid = 0.5 * (sigma + float(d.max()))
            return np.array([k.sturm_count(d, e, mid)[0]], dtype=float)
        return run

    def solve(k):
        def run():
            out = np.empty_like(b)
            k.shifted_solve(d, e, sigma, b, out)
            return out
        return run

    def leap(k):
        def run():
            z = z0.copy()
            v = np.zeros_like(z)
            zs = np.empty((2, z.size))
            vs = np.empty((2, z.size))
            k.leapfrog(asm.diag, asm.offdiag, minv, z, v, dt, steps, steps, zs, vs)
            return zs[-1]
        return run

    return {"tov_rk4": tov, "sturm_count": sturm, "shifted_solve": solve,
            f"leapfrog x{steps}": leap}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=4096)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--steps", type=int, default=200)
    args = parser.parse_args()
    backends = available_backends()
    print(f"grid={args.grid} repeat={args.repeat} backends={sorted(backends)}")
    print(f"{'kernel':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max diff':>12}")
    for name, make in cases(args.grid, args.steps).items():
        t_py, out_py = best_time(make(backends["python"]), args.repeat)
        if "compiled" in backends:
            t_c, out_c = best_time(make(backends["compiled"]), args.repeat)
            diff = float(np.max(np.abs(out_py - out_c)))
            print(f"{name:<18}{t_py:>12.4g}{t_c:>14.4g}{t_py / t_c:>10.1f}{diff:>12.3g}")
        else:
            print(f"{name:<18}{t_py:>12.4g}{'n/a':>14}{'':>10}{'':>12}")


if __name__ == "__main__":
    main()
