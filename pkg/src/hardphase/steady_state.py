"""Static spherically symmetric stars with a free boundary.

In terms of the potential ybar the hydrostatic system reads

    ybar' = -(m / r^2 + 4 pi r p) / (1 - 2m/r),    m' = 4 pi r^2 rho,

with rho = g(ybar), p = h(ybar), ybar(0) = kappa and m(0) = 0. The star ends
at the unique zero R of ybar. The metric is closed by

    e^{-2 lambda} = 1 - 2m/r,    mu = mu(R) - (ybar - ybar(R)),
    mu(R) = ln(1 - 2M/R) / 2.

The radius is found by shooting: for a trial radius the system is
integrated with RK4 on a graded grid ending at the trial radius, and the
trial radius is adjusted until ybar vanishes at the last node. The final
grid therefore ends exactly at R.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import eos as _eos
from . import kernels
from .grid import SinhGrid, derivative4


class SolverError(RuntimeError):
    """Base class for numerical failures."""


class SingularityError(SolverError):
    """The metric factor 1 - 2m/r reached zero before the boundary."""


class NoBoundaryError(SolverError):
    """No zero of ybar was bracketed below ``r_max``."""


@dataclass(frozen=True)
class StarConfig:
    """Resolution and tolerance settings for :func:`solve_steady_state`.

    Parameters
    ----------
    grid_size : int
        Number of grid intervals N; the profile has N + 1 nodes.
    boundary_tol : float
        Required |ybar(R)|.
    core_scale : float
        Multiplier on the natural core radius sqrt(3 / (8 pi (rho_c + 3 p_c)))
        that sets where the grid turns from uniform to geometric.
    r_max : float
        Largest radius searched for the boundary.
    coarse_size : int
        Grid size of the preliminary bracketing pass.
    """

    grid_size: int = 4096
    boundary_tol: float = 1e-12
    core_scale: float = 1.0
    r_max: float = 1e3
    coarse_size: int = 256

    def __post_init__(self):
        if self.grid_size < 8:
            raise ValueError("grid_size must be at least 8")
        if not (self.boundary_tol > 0 and self.core_scale > 0 and self.r_max > 0):
            raise ValueError("tolerances and scales must be positive")


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StarProfile:
    """Samples of a steady state on its graded grid (index 0 is the centre)."""

    spec: _eos.EosSpec
    kappa: float
    r: np.ndarray
    ybar: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    mass: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    R: float
    M: float
    c_kappa: float
    grid: SinhGrid
    config: StarConfig = field(default_factory=StarConfig)

    @property
    def grid_size(self):
        return self.grid.n

    @property
    def compactness(self):
        return 2.0 * self.M / self.R

    @property
    def rho_c(self):
        return float(self.rho[0])

    @property
    def p_c(self):
        return float(self.p[0])

    def at_resolution(self, n):
        """The same star re-solved with ``n`` grid intervals."""
        if n == self.grid_size:
            return self
        cfg = StarConfig(grid_size=n, boundary_tol=self.config.boundary_tol,
                         core_scale=self.config.core_scale, r_max=self.config.r_max,
                         coarse_size=self.config.coarse_size)
        return solve_steady_state(self.spec, self.kappa, cfg)

    def metadata(self):
        return {
            "kappa": self.kappa,
            "R": self.R,
            "M": self.M,
            "c_kappa": self.c_kappa,
            "grid_size": self.grid_size,
            "tolerances": {"boundary_tol": self.config.boundary_tol},
            "eos": {"cs2": self.spec.cs2, "rho0": self.spec.rho0},
            "grid": {"kind": "sinh", "scale": self.grid.scale},
        }


def core_radius(spec, kappa):
    """Natural length of the core: where the quadratic Taylor term is O(1)."""
    rho_c = _eos.liquid_density(spec, kappa)
    p_c = _eos.liquid_pressure(spec, kappa)
    return math.sqrt(0.75 / (2.0 * math.pi * (rho_c + 3.0 * p_c)))


def taylor_start(spec, kappa, r):
    """Series values (ybar, m) near the centre, through r^4 and r^5.

    ybar = kappa + a r^2 + b r^4 and m = (4 pi / 3) rho_c r^3 + c r^5.
    """
    pi = math.pi
    rho_c = _eos.liquid_density(spec, kappa)
    p_c = _eos.liquid_pressure(spec, kappa)
    a = -(2.0 * pi / 3.0) * (rho_c + 3.0 * p_c)
    c = 4.0 * pi / 5.0 * (rho_c + p_c) * a / spec.cs2
    b = -(c + 4.0 * pi * (rho_c + p_c) * a
          + (4.0 * pi / 3.0) * (rho_c + 3.0 * p_c) * (8.0 * pi / 3.0) * rho_c) / 4.0
    r2 = r * r
    return kappa + a * r2 + b * r2 * r2, (4.0 * pi / 3.0) * rho_c * r2 * r + c * r2 * r2 * r


def _integrate(spec, kappa, grid):
    """RK4 on ``grid``. Returns (r, ybar, mass, status)."""
    r, rmid, drdx, drdx_mid = grid.arrays()
    n = grid.n
    ybar = np.full(n + 1, np.nan)
    mass = np.full(n + 1, np.nan)
    ybar[0] = kappa
    mass[0] = 0.0
    ybar[1], mass[1] = taylor_start(spec, kappa, r[1])
    status = kernels.tov_rk4(r, rmid, drdx, drdx_mid, grid.h, spec.cs2, spec.rho0,
                             ybar, mass)
    return r, ybar, mass, status


def _boundary_value(spec, kappa, scale, n, radius):
    _, ybar, _, status = _integrate(spec, kappa, SinhGrid(scale, radius, n))
    if status >= 0:
        return math.nan
    return float(ybar[-1])


def _bracket(f, start, r_max):
    """Find lo < hi with f(lo) > 0 >= f(hi), treating nan as 'too far'."""
    lo = start
    f_lo = f(lo)
    while not f_lo > 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoBoundaryError("no positive potential near the centre")
        f_lo = f(lo)
    hi = lo
    while True:
        hi = lo * 1.5
        if hi > r_max:
            raise NoBoundaryError(f"potential has no zero below r_max={r_max}")
        f_hi = f(hi)
        while math.isnan(f_hi):
            hi = 0.5 * (lo + hi)
            if hi - lo <= 1e-14 * hi:
                raise SingularityError(
                    f"1 - 2m/r vanishes before the potential does near r={hi:.6g}")
            f_hi = f(hi)
        if f_hi <= 0.0:
            return lo, hi
        lo = hi


def _find_radius(spec, kappa, scale, cfg):
    n_coarse = min(cfg.coarse_size, cfg.grid_size)
    rho_c = _eos.liquid_density(spec, kappa)
    p_c = _eos.liquid_pressure(spec, kappa)
    newton = math.sqrt(kappa / ((2.0 * math.pi / 3.0) * (rho_c + 3.0 * p_c)))
    start = 0.5 * min(newton, scale)

    def coarse(radius):
        return _boundary_value(spec, kappa, scale, n_coarse, radius)

    def fine(radius):
        return _boundary_value(spec, kappa, scale, cfg.grid_size, radius)

    lo, hi = _bracket(coarse, start, cfg.r_max)
    guess = brentq(coarse, lo, hi, xtol=1e-14 * hi, rtol=1e-14)
    if n_coarse == cfg.grid_size:
        lo, hi = guess, guess
    # widen around the coarse root until the fine residual changes sign
    width = 1e-3 * guess
    for _ in range(60):
        lo, hi = max(guess - width, 0.5 * guess), guess + width
        f_lo, f_hi = fine(lo), fine(hi)
        if f_lo > 0.0 and f_hi <= 0.0:
            break
        width *= 2.0
    else:
        lo, hi = _bracket(fine, start, cfg.r_max)
    if f_hi == 0.0:
        return hi
    return brentq(fine, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=400)


def solve_steady_state(spec, kappa, cfg=None):
    """Steady state with central redshift ``kappa``.

    Parameters
    ----------
    spec : EosSpec
        Equation of state.
    kappa : float
        Central value ybar(0) > 0.
    cfg : StarConfig, optional
        Resolution and tolerances.

    Returns
    -------
    StarProfile
        Profile on a graded grid whose last node is the boundary R.

    Raises
    ------
    SingularityError
        If 1 - 2m/r reaches zero inside the star.
    NoBoundaryError
        If ybar has no zero below ``cfg.r_max``.
    """
    cfg = cfg or StarConfig()
    kappa = float(kappa)
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise ValueError(f"central redshift must be positive, got {kappa!r}")
    scale = cfg.core_scale * core_radius(spec, kappa)
    R = float(_find_radius(spec, kappa, scale, cfg))
    grid = SinhGrid(scale, R, cfg.grid_size)
    r, ybar, mass, status = _integrate(spec, kappa, grid)
    if status >= 0:
        raise SingularityError(f"integration failed at node {status} for R={R!r}")
    if not abs(ybar[-1]) <= cfg.boundary_tol:
        raise NoBoundaryError(
            f"boundary residual {ybar[-1]:.3e} exceeds tolerance {cfg.boundary_tol:.1e}")
    if np.any(np.diff(ybar) >= 0.0):
        raise SolverError("potential is not strictly decreasing")
    # interior limits: the boundary node carries the liquid-side values
    rho = np.asarray(_eos.liquid_density(spec, ybar))
    p = np.asarray(_eos.liquid_pressure(spec, ybar))
    lam = np.zeros_like(r)
    lam[1:] = -0.5 * np.log1p(-2.0 * mass[1:] / r[1:])
    M = float(mass[-1])
    mu_R = 0.5 * math.log1p(-2.0 * M / R)
    mu = mu_R - (ybar - ybar[-1])
    c_kappa = spec.rho0 * math.exp(mu_R)
    return StarProfile(spec=spec, kappa=kappa, r=_frozen(r), ybar=_frozen(ybar),
                       rho=_frozen(rho), p=_frozen(p), mass=_frozen(mass),
                       lam=_frozen(lam), mu=_frozen(mu), R=R, M=M, c_kappa=c_kappa,
                       grid=grid, config=cfg)


def redshift_for_pressure(spec, p_c):
    """Central redshift of the star whose central pressure is ``p_c``."""
    return _eos.q_potential(spec, spec.rho0 + p_c / spec.cs2)


@dataclass(frozen=True)
class DiagnosticReport:
    """Structural checks of a profile.

    Attributes
    ----------
    tov_residual : float
        max_r |r (lambda' + mu' - 4 pi r e^{2 lambda} (rho + p))| with
        derivatives from fourth-order differences of the samples.
    monotone_increment : float
        Largest relative increase of e^{lambda + mu} (p + w) between
        neighbouring nodes, w = r^{-3} int_0^r s^2 rho ds (0 if non-increasing).
    max_compactness : float
        max 2m/r.
    metric_closure : float
        max |e^{-2 lambda} - (1 - 2m/r)|.
    lambda_center : float
        |lambda(0)|.
    h : float
        Computational step 1/N.
    """

    tov_residual: float
    monotone_increment: float
    max_compactness: float
    metric_closure: float
    lambda_center: float
    h: float

    @property
    def tov_constant(self):
        """C in tov_residual = C h^2."""
        return self.tov_residual / self.h ** 2

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("tov_residual", "monotone_increment", "max_compactness",
                 "metric_closure", "lambda_center", "h")}


def tov_residual_profile(profile):
    """Nodewise r (lambda' + mu' - 4 pi r e^{2 lambda} (rho + p))."""
    grid = profile.grid
    r = profile.r
    dsum = derivative4(profile.lam + profile.mu, grid.h) / grid.jacobian(grid.x())
    return r * (dsum - 4.0 * np.pi * r * np.exp(2.0 * profile.lam) * (profile.rho + profile.p))


def monotone_quantity(profile):
    """e^{lambda + mu} (p + w) with w = m / (4 pi r^3), w(0) = rho_c / 3."""
    r = profile.r
    w = np.empty_like(r)
    w[0] = profile.rho[0] / 3.0
    w[1:] = profile.mass[1:] / (4.0 * np.pi * r[1:] ** 3)
    return np.exp(profile.lam + profile.mu) * (profile.p + w)


def diagnostics(profile):
    """Run the structural checks on ``profile``; see :class:`DiagnosticReport`."""
    r = profile.r
    res = tov_residual_profile(profile)
    q = monotone_quantity(profile)
    inc = np.diff(q) / np.abs(q[:-1])
    compact = np.zeros_like(r)
    compact[1:] = 2.0 * profile.mass[1:] / r[1:]
    closure = np.abs(np.exp(-2.0 * profile.lam[1:]) - (1.0 - compact[1:]))
    return DiagnosticReport(
        tov_residual=float(np.max(np.abs(res))),
        monotone_increment=float(max(0.0, np.max(inc))),
        max_compactness=float(np.max(compact)),
        metric_closure=float(np.max(closure)),
        lambda_center=float(abs(profile.lam[0])),
        h=profile.grid.h,
    )


class FamilyError(SolverError):
    """A member of a family sweep failed; carries the offending kappa."""

    def __init__(self, kappa, cause):
        super().__init__(f"kappa={kappa!r}: {cause}")
        self.kappa = kappa
        self.cause = cause


@dataclass(frozen=True)
class FamilyTable:
    """Rows (kappa, R, M, rho_c, 2M/R) of a family sweep."""

    kappa: np.ndarray
    R: np.ndarray
    M: np.ndarray
    rho_c: np.ndarray
    compactness: np.ndarray

    def rows(self):
        return list(zip(*(a.tolist() for a in
                          (self.kappa, self.R, self.M, self.rho_c, self.compactness))))


def worker_count(default=None):
    """Thread count from HARDPHASE_THREADS (default: CPU count, at least 1)."""
    value = os.environ.get("HARDPHASE_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return default or max(1, os.cpu_count() or 1)


def sweep_family(spec, kappas, cfg=None, workers=None):
    """Solve every ``kappa`` independently and tabulate the bulk quantities."""
    kappas = [float(k) for k in kappas]
    if not kappas:
        raise ValueError("kappa list is empty")
    for k in kappas:
        if not k > 0.0:
            raise ValueError(f"central redshift must be positive, got {k!r}")

    def one(k):
        try:
            prof = solve_steady_state(spec, k, cfg)
        except SolverError as exc:
            raise FamilyError(k, exc) from exc
        return prof.R, prof.M, prof.rho_c, prof.compactness

    workers = workers or worker_count()
    if workers > 1 and len(kappas) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, kappas))
    else:
        rows = [one(k) for k in kappas]
    cols = list(zip(*rows))
    return FamilyTable(kappa=np.array(kappas), R=np.array(cols[0]), M=np.array(cols[1]),
                       rho_c=np.array(cols[2]), compactness=np.array(cols[3]))
