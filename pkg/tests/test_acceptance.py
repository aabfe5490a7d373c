"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints one ``CRITERION n: PASS|FAIL`` line. The file also runs
as a script: ``python3 tests/test_acceptance.py``.
"""
import filecmp
import math
import os
import shutil
import sys
import tempfile
import time

import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from hardphase.cli import run as cli_run
from hardphase.eos import HARD_PHASE
from hardphase.evolution import evolve_linear, growth_rate_fit
from hardphase.family_analysis import ASYMPTOTIC_KEYS, asymptotic_ladder, scaling_defect, \
    MasslessConfig
from hardphase.linear_operator import (assemble_divergence_form, assemble_quadratic_form,
                                       elimination_identity)
from hardphase.phase_plane import Z, decay_fit, dulac_divergence, integrate_unstable_manifold
from hardphase.spectrum import (Classification, critical_redshift, escape_time,
                                instability_certificate, smallest_eigenpair)
from hardphase.steady_state import StarConfig, diagnostics, solve_steady_state

N = 4096


def _star(kappa, n=N):
    return solve_steady_state(HARD_PHASE, kappa, StarConfig(grid_size=n))


def criterion_1():
    lines = []
    ok = True
    for kappa in (0.01, 0.1, 1.0, 5.0, 12.0):
        t0 = time.perf_counter()
        prof = _star(kappa)
        d = diagnostics(prof)
        elapsed = time.perf_counter() - t0
        good = (abs(prof.ybar[-1]) <= 1e-12 and d.tov_residual <= 1e-6
                and d.max_compactness < 8 / 9 and d.monotone_increment <= 1e-10
                and elapsed <= 5.0)
        ok &= good
        lines.append(f"k={kappa:g}: |ybar(R)|={abs(prof.ybar[-1]):.1e} tov={d.tov_residual:.1e} "
                     f"2m/r={d.max_compactness:.3f} mono={d.monotone_increment:.1e} "
                     f"t={elapsed:.2f}s")
    return ok, "; ".join(lines)


def criterion_2():
    lines = []
    ok = True
    for kappa in (0.5, 1.0, 2.0, 3.0):
        fine = scaling_defect(kappa, MasslessConfig(grid_size=N))
        coarse = scaling_defect(kappa, MasslessConfig(grid_size=N // 2))
        ratio = coarse.defect / fine.defect
        good = fine.total <= 1e-6 and 3.5 < ratio < 4.5
        ok &= good
        lines.append(f"k={kappa:g}: defect={fine.total:.2e} ratio={ratio:.2f}")
    return ok, "; ".join(lines)


def criterion_3():
    reports, trend = asymptotic_ladder(HARD_PHASE, (8.0, 10.0, 12.0, 14.0), 0.1, 0.2,
                                       StarConfig(grid_size=N))
    keys = ("rho", "p", "mass", "mu_slope", "metric")
    ok = all(trend[k] for k in keys)
    lines = [f"{k}: " + ",".join(f"{r.deviations[k]:.4g}" for r in reports)
             + (" decreasing" if trend[k] else " NOT decreasing") for k in keys]
    return ok, "; ".join(lines)


def criterion_4():
    traj = integrate_unstable_manifold(eps=1e-8, tau_max=30.0)
    rate, freq = decay_fit(traj)
    k = traj.entry_index()
    dulac = float(np.max(dulac_divergence(traj.w1[1:], traj.w2[1:])))
    dist = float(traj.distance_to_sink()[-1])
    ok = (traj.stays_in_triangle() and dist < 1e-10 and abs(rate - 1) <= 0.02
          and abs(freq / math.sqrt(3) - 1) <= 0.02 and dulac < 0)
    return ok, (f"in D from sample {k}: {traj.stays_in_triangle()}, |w-Z|={dist:.1e} "
                f"(Z={Z[0]:.5f},{Z[1]}), rate={rate:.4f}, freq/sqrt3={freq / math.sqrt(3):.4f}, "
                f"max Dulac={dulac:.2f}")


def criterion_5():
    lines = []
    ok = True
    for kappa in (1.0, 12.0):
        diffs = []
        for n in (1024, 2048, 4096):
            prof = _star(kappa, n)
            asm = assemble_quadratic_form(prof)
            if n == N:
                k = asm.dense()
                ok &= bool(np.array_equal(k, k.T))
            nu = smallest_eigenpair(asm).nu_star
            alt = assemble_divergence_form(prof).lowest_eigenvalues(1)[0]
            diffs.append(abs(nu - alt))
        ratios = [a / b for a, b in zip(diffs, diffs[1:])]
        ok &= all(3.5 < r < 4.5 for r in ratios)
        lines.append(f"k={kappa:g}: |nu-nu_alt|=" + ",".join(f"{d:.2e}" for d in diffs)
                     + " ratios=" + ",".join(f"{r:.2f}" for r in ratios))
    # 20 random smooth zeta per star; the steep kappa = 12 profile needs N = 8192
    for kappa, n in ((0.01, N), (1.0, N), (12.0, 2 * N)):
        prof = _star(kappa, n)
        worst = 0.0
        for seed in range(20):
            c = np.random.default_rng(seed).standard_normal(6)
            lhs, rhs = elimination_identity(
                prof, lambda y: P.polyval(y / prof.R, c),
                lambda y: P.polyval(y / prof.R, P.polyder(c)) / prof.R)
            worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
        ok &= worst <= 1e-9
        lines.append(f"identity k={kappa:g} N={n}: {worst:.1e}")
    return ok, "; ".join(lines)


def criterion_6():
    lines = []
    ok = True
    for kappa in (0.01, 0.05, 0.1, 8.0, 10.0, 12.0):
        nus = []
        for n in (1024, 2048, 4096):
            prof = _star(kappa, n)
            asm = assemble_quadratic_form(prof)
            res = smallest_eigenpair(asm)
            nus.append(res.nu_star)
        ratio = (nus[0] - nus[1]) / (nus[1] - nus[2])
        want = Classification.STABLE if kappa < 1 else Classification.UNSTABLE
        good = res.classification is want and res.residual <= 1e-10 and 3.5 < ratio < 4.5
        text = f"k={kappa:g}: nu*={res.nu_star:.6g} res={res.residual:.1e} ratio={ratio:.2f}"
        if res.nu_star < 0:
            cert = instability_certificate(prof, asm)
            good &= cert < 0
            text += f" cert={cert:.4g}"
        ok &= good
        lines.append(text)
    crit = [critical_redshift(HARD_PHASE, 0.01, 12.0, 1e-6, StarConfig(grid_size=n))
            for n in (1024, 2048, 4096)]
    fine = crit[-1]
    slope = (fine.nu_hi - fine.nu_lo) / (fine.kappa_hi - fine.kappa_lo)
    for c, n in zip(crit[:-1], (1024, 2048)):
        drift = abs(smallest_eigenpair(assemble_quadratic_form(_star(c.kappa_star, n))).nu_star
                    - smallest_eigenpair(assemble_quadratic_form(_star(c.kappa_star))).nu_star)
        allowed = drift / abs(slope) + 2e-6
        ok &= fine.nu_lo > 0 > fine.nu_hi and abs(c.kappa_star - fine.kappa_star) <= allowed
        lines.append(f"kappa*(N={n})={c.kappa_star:.8f} shift={abs(c.kappa_star - fine.kappa_star):.1e}"
                     f" allowed={allowed:.1e}")
    lines.append(f"kappa*(N=4096)={fine.kappa_star:.8f}")
    return ok, "; ".join(lines)


def criterion_7():
    prof = _star(12.0)
    asm = assemble_quadratic_form(prof)
    res = smallest_eigenpair(asm)
    g = math.sqrt(-res.nu_star)
    delta, theta0 = 1e-6, 1e-2
    ev = evolve_linear(asm, delta * res.chi, delta * g * res.chi,
                       max(5 / g, 1.1 * escape_time(delta, theta0, res.nu_star)), samples=2001)
    five = ev.times <= 5 / g
    dev = float(np.max(np.abs(ev.norms[five] / (delta * np.exp(g * ev.times[five])) - 1)))
    cross = ev.crossing_time(theta0)
    predicted = escape_time(delta, theta0, res.nu_star)
    cross_err = abs(cross / predicted - 1)
    rate = growth_rate_fit(ev, (0.0, 5 / g))
    stable = _star(0.01)
    sasm = assemble_quadratic_form(stable)
    sres = smallest_eigenpair(sasm)
    period = 2 * math.pi / math.sqrt(sres.nu_star)
    sev = evolve_linear(sasm, delta * sres.chi, np.zeros(sasm.size), 100 * period, samples=1001)
    drift = float(np.max(np.abs(sev.energy / sev.energy[0] - 1)))
    ok = dev <= 0.01 and cross_err <= 0.02 and drift <= 1e-4
    return ok, (f"growth deviation over 5 e-folds={dev:.1e} (fit rate/predicted="
                f"{rate / g:.6f}), crossing={cross:.5f} vs T_delta={predicted:.5f} "
                f"({cross_err:.1e}), stable energy drift over 100 periods={drift:.1e}")


COMMAND_LINES = (
    ["family", "--kappa", "0.01,0.1,1,5,12", "--plot"],
    ["profile", "--kappa", "12", "--plot"],
    ["spectrum", "--kappa", "0.01,0.05,0.1,8,10,12", "--plot", "--dump-operator"],
    ["phase", "--eps", "1e-8", "--tau-max", "30", "--plot"],
    ["asymptotics", "--plot"],
    ["evolve", "--kappa", "12", "--plot"],
    ["evolve", "--kappa", "0.05", "--seed-mode", "random", "--plot"],
    ["critical", "--tol-kappa", "1e-4"],
)


def _snapshot(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in sorted(os.listdir(path))}


def criterion_8():
    base = tempfile.mkdtemp(prefix="hardphase-accept-")
    lines = []
    ok = True
    try:
        for i, argv in enumerate(COMMAND_LINES):
            out = os.path.join(base, f"run{i}")
            first = cli_run(argv + ["--output-dir", out])
            before = _snapshot(out)
            # rerun from the manifest's echoed configuration
            second = cli_run([argv[0], "--config", os.path.join(out, "config.txt")])
            after = _snapshot(out)
            copy = os.path.join(base, f"copy{i}")
            third = cli_run([argv[0], "--config", os.path.join(out, "config.txt"),
                             "--output-dir", copy])
            same_copy = all(filecmp.cmp(os.path.join(out, f), os.path.join(copy, f),
                                        shallow=False)
                            for f in os.listdir(out) if f not in ("config.txt", "manifest.json"))
            good = first == second == third == 0 and before == after and same_copy
            ok &= good
            lines.append(f"{' '.join(argv[:1])}: {len(before)} files "
                         f"{'identical' if good else 'DIFFER'}")
    finally:
        shutil.rmtree(base, ignore_errors=True)
    return ok, "; ".join(lines)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8)


def report(number, ok, detail):
    return f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"


@pytest.mark.parametrize("number", range(1, 9))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    with capsys.disabled():
        print("\n" + report(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        failures += not ok
        print(report(i, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
