"""Bottom of the spectrum of the weighted pencil (K, Mw) and stability tools.

The pencil is reduced to the symmetric tridiagonal B = Mw^{-1/2} K Mw^{-1/2}.
The smallest eigenvalue is isolated by bisection on Sturm counts (negative
pivots of B - sigma I), then refined by inverse iteration with a shift just
below it, where B - sigma I is positive definite and needs no pivoting.
"""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .linear_operator import (assemble_quadratic_form, cutoff_test_function, cutoff_window,
                              rayleigh_quotient)
from .steady_state import SolverError, StarConfig, solve_steady_state


class Classification(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


class BracketError(ValueError):
    """Endpoints of a critical-redshift search do not straddle a sign change."""


class NotUnstableError(ValueError):
    """Escape time requested for a non-negative eigenvalue."""


class OrderingError(ValueError):
    """Initial amplitude not below the escape threshold."""


MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class SpectralResult:
    """Smallest eigenpair of (K, Mw).

    ``chi_star`` is Mw-normalized with a positive first entry and is stored
    in extended precision: rounding it to float64 alone leaves a relative
    residual of a few 1e-10 on stiff stars. ``residual`` is
    ||K chi - nu Mw chi|| / ||K chi|| for the stored vector, evaluated in
    extended precision.
    """

    nu_star: float
    chi_star: np.ndarray
    residual: float
    classification: Classification
    bisection_steps: int
    iterations: int
    interval: tuple = field(default=(math.nan, math.nan))

    @property
    def chi(self):
        """chi_star rounded to float64."""
        return np.asarray(self.chi_star, dtype=float)


def classify_stability(nu_star, tol=MARGINAL_TOL):
    """Unstable if nu < -tol, Stable if nu > tol, Marginal otherwise."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if nu_star < -tol:
        return Classification.UNSTABLE
    if nu_star > tol:
        return Classification.STABLE
    return Classification.MARGINAL


def gershgorin_bounds(d, e):
    """Interval containing every eigenvalue of the symmetric tridiagonal (d, e)."""
    radius = np.zeros_like(d)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    return float(np.min(d - radius)), float(np.max(d + radius))


def _count(d, e, sigma, scale, retries=8):
    """Sturm count below sigma, nudging sigma away from exact zero pivots."""
    for k in range(retries):
        count, breakdown = kernels.sturm_count(d, e, sigma)
        if not breakdown:
            return count, sigma
        sigma += (k + 1) * 4.0 * np.finfo(float).eps * scale
    raise SolverError(f"factorization breakdown at shift {sigma!r} after {retries} retries")


def lowest_eigenvalue_interval(d, e, rtol=1e-14):
    """Bisection bracket [lo, hi] of the smallest eigenvalue of (d, e).

    Returns
    -------
    (lo, hi, steps)
    """
    lo, hi = gershgorin_bounds(d, e)
    scale = max(abs(lo), abs(hi), 1.0)
    lo -= 1e-12 * scale
    steps = 0
    while hi - lo > rtol * max(abs(lo), abs(hi), 1.0) and steps < 400:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        count, mid = _count(d, e, mid, scale)
        if count >= 1:
            hi = mid
        else:
            lo = mid
        steps += 1
    return lo, hi, steps


_LD = np.longdouble


def _ld_apply(d, e, v):
    out = d * v
    out[1:] += e * v[:-1]
    out[:-1] += e * v[1:]
    return out


def eigen_residual(asm, chi, nu):
    """||K chi - nu Mw chi|| / ||K chi|| in extended precision."""
    c = np.asarray(chi).astype(_LD)
    kc = _ld_apply(asm.diag.astype(_LD), asm.offdiag.astype(_LD), c)
    r = kc - _LD(nu) * asm.mass.astype(_LD) * c
    return float(np.sqrt(np.sum(r * r)) / np.sqrt(np.sum(kc * kc)))


def _ld_shifted_solve(d, e, sigma, b):
    # extended-precision twin of kernels.shifted_solve, used for two steps only
    n = len(d)
    d = list(d)
    e = list(e)
    x = list(b)
    piv = [None] * n
    piv[0] = d[0] - sigma
    for i in range(1, n):
        l = e[i - 1] / piv[i - 1]
        piv[i] = d[i] - sigma - l * e[i - 1]
        if piv[i] == 0:
            raise SolverError("extended-precision refinement hit a zero pivot")
        x[i] = x[i] - l * x[i - 1]
    x[n - 1] = x[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (x[i] - e[i] * x[i + 1]) / piv[i]
    return np.array(x, dtype=_LD)


def _refine_extended(asm, v, sigma, steps=2):
    m = asm.mass.astype(_LD)
    s = 1 / np.sqrt(m)
    d = asm.diag.astype(_LD) * s * s
    e = asm.offdiag.astype(_LD) * s[:-1] * s[1:]
    v = v.astype(_LD)
    for _ in range(steps):
        w = _ld_shifted_solve(d, e, _LD(sigma), v)
        v = w / np.sqrt(np.sum(w * w))
    theta = np.sum(v * _ld_apply(d, e, v))
    return v * s, float(theta)


def smallest_eigenpair(asm, tol=MARGINAL_TOL, max_iter=50, rtol=1e-14):
    """Smallest eigenvalue of (K, Mw) with its Mw-unit eigenvector.

    Parameters
    ----------
    asm : OperatorAssembly or any object with diag, offdiag, mass arrays
    tol : float
        Marginal band for the classification.
    max_iter : int
        Inverse-iteration cap.

    Returns
    -------
    SpectralResult
    """
    d, e, s = asm.scaled()
    lo, hi, steps = lowest_eigenvalue_interval(d, e, rtol=rtol)
    scale = max(abs(lo), abs(hi), 1.0)
    width = max(hi - lo, 4.0 * np.finfo(float).eps * scale)
    # B - sigma I is positive definite below the bracket
    sigma = lo - width
    n = d.size
    v = np.ones(n) / math.sqrt(n)
    w = np.empty(n)
    prev = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        for k in range(8):
            bad = kernels.shifted_solve(d, e, sigma, v, w)
            if bad < 0:
                break
            sigma -= (k + 1) * width
        else:
            raise SolverError("inverse iteration factorization broke down")
        norm = math.sqrt(float(w @ w))
        if not math.isfinite(norm) or norm == 0.0:
            raise SolverError("inverse iteration produced a degenerate vector")
        v = w / norm
        bv = d * v
        bv[1:] += e * v[:-1]
        bv[:-1] += e * v[1:]
        theta = float(v @ bv)
        if abs(theta - prev) <= 1e-15 * max(abs(theta), 1.0) and it > 2:
            break
        prev = theta
    chi, nu = _refine_extended(asm, v, sigma)
    chi /= np.sqrt(np.sum(asm.mass.astype(_LD) * chi * chi))
    if chi[0] < 0:
        chi = -chi
    residual = eigen_residual(asm, chi, nu)
    chi.setflags(write=False)
    return SpectralResult(nu_star=nu, chi_star=chi, residual=residual,
                          classification=classify_stability(nu, tol),
                          bisection_steps=steps, iterations=it, interval=(lo, hi))


@dataclass(frozen=True)
class SpectrumRow:
    kappa: float
    R: float
    M: float
    nu_star: float
    residual: float
    classification: Classification

    def as_tuple(self):
        return (self.kappa, self.R, self.M, self.nu_star, self.residual, self.classification.value)


def spectrum_row(spec, kappa, cfg=None, tol=MARGINAL_TOL):
    """Solve, assemble and eigen-solve one star; returns (row, profile, assembly, result)."""
    cfg = cfg or StarConfig()
    profile = solve_steady_state(spec, kappa, cfg)
    asm = assemble_quadratic_form(profile)
    res = smallest_eigenpair(asm, tol=tol)
    row = SpectrumRow(kappa, profile.R, profile.M, res.nu_star, res.residual, res.classification)
    return row, profile, asm, res


def nu_star(spec, kappa, cfg=None):
    return spectrum_row(spec, kappa, cfg)[0].nu_star


@dataclass(frozen=True)
class CriticalResult:
    """Bisection result for the stability transition.

    ``kappa_lo`` is stable with ``nu_lo > 0`` and ``kappa_hi`` unstable with
    ``nu_hi < 0``; ``kappa_star`` is the midpoint of the final bracket.
    """

    kappa_star: float
    kappa_lo: float
    kappa_hi: float
    nu_lo: float
    nu_hi: float
    evaluations: int


def critical_redshift(spec, kappa_lo=0.01, kappa_hi=12.0, tol_kappa=1e-3, cfg=None):
    """Bisect the redshift on the sign of nu* down to a bracket of width tol_kappa."""
    if not tol_kappa > 0.0:
        raise ValueError("tol_kappa must be positive")
    if not 0.0 < kappa_lo < kappa_hi:
        raise ValueError("need 0 < kappa_lo < kappa_hi")
    nu_lo = nu_star(spec, kappa_lo, cfg)
    nu_hi = nu_star(spec, kappa_hi, cfg)
    evaluations = 2
    if not (nu_lo > 0.0 > nu_hi):
        raise BracketError(
            f"nu*({kappa_lo}) = {nu_lo:.6g} and nu*({kappa_hi}) = {nu_hi:.6g} do not bracket a sign change")
    lo, hi = kappa_lo, kappa_hi
    while hi - lo > tol_kappa:
        mid = 0.5 * (lo + hi)
        nu = nu_star(spec, mid, cfg)
        evaluations += 1
        if nu > 0.0:
            lo, nu_lo = mid, nu
        else:
            hi, nu_hi = mid, nu
    return CriticalResult(0.5 * (lo + hi), lo, hi, nu_lo, nu_hi, evaluations)


def instability_certificate(profile, asm=None, window=None):
    """Rayleigh quotient of the cutoff test function; negative certifies nu* < 0."""
    asm = asm or assemble_quadratic_form(profile)
    window = window or cutoff_window(profile)
    return rayleigh_quotient(asm, cutoff_test_function(profile, window))


def escape_time(delta, theta0, nu):
    """ln(theta0 / delta) / sqrt(-nu)."""
    if not nu < 0.0:
        raise NotUnstableError(f"escape time needs nu* < 0, got {nu!r}")
    if not 0.0 < delta < theta0:
        raise OrderingError(f"need 0 < delta < theta0, got delta={delta!r}, theta0={theta0!r}")
    return math.log(theta0 / delta) / math.sqrt(-nu)
