import math

import numpy as np
import pytest
import scipy.linalg

from hardphase.evolution import (SAFETY, DegenerateFitError, ModeEvolution, StabilityError,
                                 density_perturbation, evolve_linear, growth_rate_fit,
                                 largest_eigenvalue, random_seed_vector, stability_bound,
                                 time_reversal_defect)
from hardphase.linear_operator import coefficient_profiles, number_density_profile
from hardphase.spectrum import escape_time


@pytest.mark.parametrize("kappa", [0.01, 1.0, 12.0])
def test_power_iteration_bounds_spectrum(get_assembly, kappa):
    asm = get_assembly(kappa, 1024)
    d, e, _ = asm.scaled()
    top = scipy.linalg.eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                                        select_range=(d.size - 1, d.size - 1))[0]
    est = largest_eigenvalue(asm)
    assert top <= est <= 1.2 * top
    assert stability_bound(asm) == pytest.approx(2 / math.sqrt(est), rel=1e-15)


def test_single_unstable_mode_grows(get_assembly, get_eigenpair):
    asm = get_assembly(12.0)
    res = get_eigenpair(12.0)
    g = math.sqrt(-res.nu_star)
    ev = evolve_linear(asm, res.chi, g * res.chi, 5 / g, samples=201)
    expected = np.exp(g * ev.times)
    assert np.max(np.abs(ev.norms / expected - 1)) <= 0.01
    assert growth_rate_fit(ev) == pytest.approx(g, rel=0.01)


def test_single_stable_mode_oscillates(get_assembly, get_eigenpair):
    asm = get_assembly(0.01, 1024)
    res = get_eigenpair(0.01, 1024)
    w = math.sqrt(res.nu_star)
    ev = evolve_linear(asm, res.chi, np.zeros(asm.size), 4 * math.pi / w, samples=401)
    expected = np.cos(w * ev.times)[:, None] * res.chi[None, :]
    scale = np.max(np.abs(res.chi))
    assert np.max(np.abs(ev.zeta - expected)) <= 0.01 * scale


def test_zero_data_stays_zero(get_assembly):
    asm = get_assembly(1.0, 512)
    ev = evolve_linear(asm, np.zeros(asm.size), np.zeros(asm.size), 1.0, samples=11)
    assert not np.any(ev.zeta) and not np.any(ev.zeta_dot)
    assert np.all(ev.energy == 0)
    with pytest.raises(DegenerateFitError):
        growth_rate_fit(ev)


@pytest.fixture(scope="module")
def stable_runs(get_assembly, get_eigenpair):
    # N = 1024 keeps 100 periods affordable; see the notes on cost
    asm = get_assembly(0.01, 1024)
    nu = get_eigenpair(0.01, 1024).nu_star
    period = 2 * math.pi / math.sqrt(nu)
    z = random_seed_vector(asm, 20240517)
    bound = stability_bound(asm)
    runs = [evolve_linear(asm, z, np.zeros_like(z), 100 * period, dt=SAFETY * bound / k,
                          samples=2001, bound=bound) for k in (1, 2)]
    return asm, nu, runs


def test_energy_drift_second_order(stable_runs):
    _, _, runs = stable_runs
    drift = [np.max(np.abs(ev.energy / ev.energy[0] - 1)) for ev in runs]
    assert drift[0] < 1e-2
    assert 3.5 < drift[0] / drift[1] < 4.5
    assert drift[0] / runs[0].dt ** 2 == pytest.approx(drift[1] / runs[1].dt ** 2, rel=0.1)


def test_stable_star_does_not_grow(stable_runs):
    _, nu, runs = stable_runs
    for ev in runs:
        assert abs(growth_rate_fit(ev)) <= 1e-3 * math.sqrt(nu)
        # energy conservation bounds the norm by sqrt(2 E / nu*)
        assert np.max(ev.norms) <= math.sqrt(2 * ev.energy[0] / nu) * 1.01


def test_random_seed_rate(get_assembly, get_eigenpair):
    # kappa = 8: the two lowest growth rates differ by about 0.19
    asm = get_assembly(8.0)
    g = math.sqrt(-get_eigenpair(8.0).nu_star)
    z = random_seed_vector(asm, 20240517)
    ev = evolve_linear(asm, z, np.zeros_like(z), 60 / g, samples=601)
    assert growth_rate_fit(ev, window=(30 / g, 60 / g)) == pytest.approx(g, rel=0.02)


def test_random_seed_vector(get_assembly):
    asm = get_assembly(1.0, 512)
    a = random_seed_vector(asm, 5)
    assert float(np.sum(asm.mass * a * a)) == pytest.approx(1.0, rel=1e-14)
    assert np.array_equal(a, random_seed_vector(asm, 5))
    assert not np.array_equal(a, random_seed_vector(asm, 6))


def test_escape_time_crossing(get_assembly, get_eigenpair):
    asm = get_assembly(12.0)
    res = get_eigenpair(12.0)
    g = math.sqrt(-res.nu_star)
    delta, theta0 = 1e-6, 1e-2
    ev = evolve_linear(asm, delta * res.chi, delta * g * res.chi, 12 / g, samples=1201)
    predicted = escape_time(delta, theta0, res.nu_star)
    assert ev.crossing_time(theta0) == pytest.approx(predicted, rel=0.02)
    with pytest.raises(ValueError):
        ev.crossing_time(1e3)


def test_time_reversal(get_assembly, get_eigenpair):
    asm = get_assembly(1.0, 1024)
    z = random_seed_vector(asm, 1)
    assert time_reversal_defect(asm, z, np.zeros_like(z), 1.0) <= 1e-9


def test_stability_error_and_inputs(get_assembly):
    asm = get_assembly(1.0, 512)
    bound = stability_bound(asm)
    z = np.zeros(asm.size)
    with pytest.raises(StabilityError) as info:
        evolve_linear(asm, z, z, 1.0, dt=1.01 * bound)
    assert info.value.bound == bound
    with pytest.raises(StabilityError):
        evolve_linear(asm, z, z, 1.0, dt=-1.0)
    with pytest.raises(ValueError):
        evolve_linear(asm, z, z, 0.0)
    with pytest.raises(ValueError):
        evolve_linear(asm, z[:-1], z[:-1], 1.0)
    with pytest.raises(ValueError):
        evolve_linear(asm, z, z, 1.0, samples=1)


def test_growth_fit_window_errors(get_assembly):
    asm = get_assembly(1.0, 512)
    z = random_seed_vector(asm, 1)
    ev = evolve_linear(asm, z, z, 1.0, samples=11)
    with pytest.raises(ValueError):
        growth_rate_fit(ev, window=(0.5, 2.0))
    with pytest.raises(DegenerateFitError):
        growth_rate_fit(ev, window=(0.01, 0.02))


def test_crossing_time_interpolation():
    times = np.array([0.0, 1.0, 2.0])
    norms = np.exp(times)
    ev = ModeEvolution(times, None, None, np.ones(3), norms, 1.0, 2)
    assert ev.crossing_time(math.exp(1.5)) == pytest.approx(1.5, rel=1e-14)
    assert ev.crossing_time(0.5) == 0.0
    assert ev.table().shape == (3, 3)


def test_density_perturbation_zero(get_star):
    prof = get_star(1.0, 512)
    assert np.all(density_perturbation(prof, np.zeros(512)) == 0.0)
    with pytest.raises(ValueError):
        density_perturbation(prof, np.zeros(511))


def robin_zeta(prof):
    co = coefficient_profiles(prof)
    beta = -(3 - prof.R * co["mu1"][-1]) / prof.R
    return 1 + beta * (prof.r[1:] - prof.R)


def test_density_perturbation_boundary_second_order(get_star):
    vals = [abs(density_perturbation(get_star(1.0, n), robin_zeta(get_star(1.0, n)))[-1])
            for n in (1024, 2048, 4096)]
    for a, b in zip(vals, vals[1:]):
        assert 3.5 < a / b < 4.5


def test_density_perturbation_eigenmode_boundary(get_star, get_eigenpair):
    vals = []
    for n in (1024, 2048, 4096):
        res = get_eigenpair(12.0, n)
        drho = density_perturbation(get_star(12.0, n), res.chi)
        vals.append(abs(drho[-1]) / np.max(np.abs(drho)))
    assert vals[0] > vals[1] > vals[2]
    assert vals[0] / vals[2] > 10


def test_density_perturbation_synthetic(get_star):
    errs = []
    for n in (1024, 2048, 4096):
        prof = get_star(1.0, n)
        co = coefficient_profiles(prof)
        y = prof.r[1:]
        mu = prof.mu[1:]
        nd = number_density_profile(prof)[1:]
        exact = -(nd / y ** 2) * np.exp(-mu) * (5 * y ** 4 - co["mu1"] * y ** 5)
        errs.append(np.max(np.abs(density_perturbation(prof, y ** 2) - exact)))
    for a, b in zip(errs, errs[1:]):
        assert a / b > 3.5
