"""Large-redshift structure of the steady-state family.

Here the family is parameterized by central pressure p_c = e^{4 kappa}.
The steady pressure is compared with the solution p* of the massless system

    p*' = -2 p* (4 pi I / r^2 + 4 pi r p*) / (1 - 8 pi I / r),   I' = r^2 p*,

which is exactly scale covariant: p*_kappa(r) = e^{4 kappa} p*_0(e^{2 kappa} r).
Near the centre, on windows [kappa^a1, kappa^a2] e^{-2 kappa}, the steady states
approach the self-similar point r^2 rho = 1/(16 pi), m/r = 1/4.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .eos import HARD_PHASE
from .grid import SinhGrid
from .steady_state import SolverError, StarConfig, redshift_for_pressure, solve_steady_state


class ResolutionError(SolverError):
    """A window holds too few grid nodes for a meaningful estimate."""


@dataclass(frozen=True)
class MasslessConfig:
    """Grid for :func:`solve_massless`.

    Parameters
    ----------
    grid_size : int
        Number of grid intervals.
    r_max : float
        Outer radius of the integration domain.
    floor : float
        Truncate the domain where p* first drops below this value.
    """

    grid_size: int = 4096
    r_max: float = 1.0
    floor: float = 0.0


@dataclass(frozen=True)
class PressureProfile:
    """Solution of the pressure form of hydrostatic balance on a graded grid.

    The density law is rho = shift + slope p; ``shift = 0, slope = 1`` gives the
    massless comparison system and ``integral`` is then int_0^r s^2 p* ds.
    """

    pc: float
    r: np.ndarray
    p_star: np.ndarray
    integral: np.ndarray
    grid: SinhGrid
    shift: float = 0.0
    slope: float = 1.0

    @property
    def buchdahl_ratio(self):
        """1 / (1 - 8 pi I / r) at every node (1 at the centre)."""
        out = np.ones_like(self.r)
        out[1:] = 1.0 / (1.0 - 8.0 * math.pi * self.integral[1:] / self.r[1:])
        return out

    def _spline(self, stride):
        n = self.r.size
        x = self.grid.x()[:n:stride]
        return CubicSpline(x, self.p_star[:n:stride])

    def _coordinate(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.r[-1] * (1.0 + 1e-14)):
            raise ValueError("evaluation radius outside the computed domain")
        return np.arcsinh(r / self.grid.scale) / self.grid.stretch

    def evaluate(self, r):
        """Cubic interpolation of p in the computational coordinate."""
        return self._spline(1)(self._coordinate(r))

    def interpolation_error(self, r):
        """Node-deletion estimate: |full spline - spline on every other node|."""
        x = self._coordinate(r)
        return np.abs(self._spline(1)(x) - self._spline(2)(x))


MasslessProfile = PressureProfile


def massless_core_radius(pc):
    return math.sqrt(0.75 / (2.0 * math.pi * 4.0 * pc))


def pressure_taylor(pc, r, shift=0.0, slope=1.0):
    """Series (p, int_0^r s^2 rho ds) near the centre through r^4 and r^5."""
    pi = math.pi
    sc = shift + slope * pc
    a = -2.0 * pi * (sc + pc) * (sc / 3.0 + pc)
    b = -0.25 * (4.0 * pi * (sc + pc) * a * (slope / 5.0 + 1.0)
                 + 4.0 * pi * (slope + 1.0) * a * (sc / 3.0 + pc)
                 + 4.0 * pi * (sc + pc) * (sc / 3.0 + pc) * (8.0 * pi / 3.0) * sc)
    r2 = r * r
    return pc + a * r2 + b * r2 * r2, sc * r2 * r / 3.0 + slope * a * r2 * r2 * r / 5.0


def massless_taylor(pc, r):
    """Series (p*, I) of the massless system near the centre."""
    return pressure_taylor(pc, r)


def _integrate_pressure(pc, grid, shift, slope):
    r, rmid, drdx, drdx_mid = grid.arrays()
    p = np.full(grid.n + 1, np.nan)
    q = np.full(grid.n + 1, np.nan)
    p[0], q[0] = pc, 0.0
    p[1], q[1] = pressure_taylor(pc, r[1], shift, slope)
    status = kernels.pressure_rk4(r, rmid, drdx, drdx_mid, grid.h, shift, slope, p, q)
    if status >= 0:
        raise SolverError(f"pressure integration failed at node {status}")
    return PressureProfile(pc=float(pc), r=r, p_star=p, integral=q, grid=grid,
                           shift=float(shift), slope=float(slope))


def solve_massless(pc, cfg=None, grid=None):
    """Integrate the massless system from p*(0) = pc with RK4.

    Parameters
    ----------
    pc : float
        Central pressure, > 0.
    cfg : MasslessConfig, optional
        Grid size, outer radius and pressure floor.
    grid : SinhGrid, optional
        Explicit grid; overrides the size and radius in ``cfg``.

    Returns
    -------
    PressureProfile
    """
    cfg = cfg or MasslessConfig()
    if not (pc > 0.0 and math.isfinite(pc)):
        raise ValueError(f"central pressure must be positive, got {pc!r}")
    grid = grid or SinhGrid(massless_core_radius(pc), cfg.r_max, cfg.grid_size)
    prof = _integrate_pressure(pc, grid, 0.0, 1.0)
    if cfg.floor > 0.0:
        below = np.nonzero(prof.p_star < cfg.floor)[0]
        if below.size:
            k = int(below[0])
            prof = PressureProfile(pc=prof.pc, r=prof.r[:k], p_star=prof.p_star[:k],
                                   integral=prof.integral[:k], grid=grid)
    return prof


def solve_pressure_form(spec, pc, grid):
    """Steady pressure p with p(0) = pc integrated in pressure form on ``grid``.

    Same mathematical solution as :func:`solve_steady_state` inside the star;
    sharing the scheme and grid with :func:`solve_massless` makes the
    difference p - p* free of most truncation error.
    """
    if not (pc > 0.0 and math.isfinite(pc)):
        raise ValueError(f"central pressure must be positive, got {pc!r}")
    return _integrate_pressure(pc, grid, spec.rho0, 1.0 / spec.cs2)


@dataclass(frozen=True)
class ScalingReport:
    """sup |p*_k(r) - e^{4k} p*_0(e^{2k} r)| / e^{4k} over the shared domain."""

    kappa: float
    defect: float
    interpolation_error: float
    nodes: int

    @property
    def total(self):
        return self.defect + self.interpolation_error


def scaling_defect(kappa, cfg=None):
    """Check the scale covariance of the massless system at ``kappa``.

    p*_kappa (central pressure e^{4 kappa}) and p*_0 are integrated
    independently on [0, r_max]; p*_0 is interpolated to the nodes of
    p*_kappa that map into its domain.
    """
    cfg = cfg or MasslessConfig()
    kappa = float(kappa)
    if not kappa >= 0.0:
        raise ValueError("kappa must be non-negative")
    base = solve_massless(1.0, cfg)
    if kappa == 0.0:
        return ScalingReport(0.0, float(np.max(np.abs(base.p_star - base.p_star))), 0.0,
                             base.r.size)
    scaled = solve_massless(math.exp(4.0 * kappa), cfg)
    s = math.exp(2.0 * kappa)
    inside = scaled.r * s <= base.r[-1]
    target = np.minimum(scaled.r[inside] * s, base.r[-1])
    lhs = scaled.p_star[inside] / math.exp(4.0 * kappa)
    rhs = base.evaluate(target)
    return ScalingReport(kappa=kappa, defect=float(np.max(np.abs(lhs - rhs))),
                         interpolation_error=float(np.max(base.interpolation_error(target))),
                         nodes=int(inside.sum()))


def pressure_parameter_profile(spec, kappa, cfg=None):
    """Steady state whose central pressure is e^{4 kappa}."""
    return solve_steady_state(spec, redshift_for_pressure(spec, math.exp(4.0 * kappa)), cfg)


@dataclass(frozen=True)
class ComparisonReport:
    """Steady vs massless pressure near the centre.

    ``fitted_constant`` is the smallest C with
    |p - p*| <= C e^{6 kappa} (r^2 + e^{4 kappa} r^4) on the window. Nodes
    whose difference is at rounding level are replaced by the exact r -> 0
    limit of the ratio, ``series_constant``, taken from the Taylor
    coefficients of both solutions.
    """

    kappa: float
    window: tuple
    max_difference: float
    fitted_constant: float
    series_constant: float
    nodes: int
    resolved_nodes: int


def _series_constant(spec, pc, kappa):
    a_star = pressure_taylor_coefficient(pc, spec.rho0, 1.0 / spec.cs2)
    a_free = pressure_taylor_coefficient(pc, 0.0, 1.0)
    return abs(a_star - a_free) / math.exp(6.0 * kappa)


def pressure_taylor_coefficient(pc, shift=0.0, slope=1.0):
    """Coefficient a of p = pc + a r^2 + O(r^4) for rho = shift + slope p."""
    sc = shift + slope * pc
    return -2.0 * math.pi * (sc + pc) * (sc / 3.0 + pc)


def compare_p_pstar(spec=HARD_PHASE, kappa=5.0, window=10.0, grid_size=4096, noise=1e4):
    """Compare steady and massless pressures on [0, window e^{-2 kappa}].

    The window is clipped to the stellar radius. Both start from
    p(0) = e^{4 kappa} and are integrated on one shared grid. Differences
    below ``noise`` ulps of p(0) are treated as unresolved.
    """
    if not kappa > 0.0:
        raise ValueError("kappa must be positive")
    pc = math.exp(4.0 * kappa)
    r_hi = window * math.exp(-2.0 * kappa)
    radius = solve_steady_state(spec, redshift_for_pressure(spec, pc),
                                StarConfig(grid_size=512)).R
    r_hi = min(r_hi, (1.0 - 1e-9) * radius)
    grid = SinhGrid(massless_core_radius(pc), r_hi, grid_size)
    star = solve_pressure_form(spec, pc, grid)
    ref = solve_massless(pc, grid=grid)
    r = grid.nodes()
    diff = np.abs(star.p_star - ref.p_star)
    envelope = math.exp(6.0 * kappa) * (r ** 2 + math.exp(4.0 * kappa) * r ** 4)
    resolved = diff > noise * np.finfo(float).eps * pc
    resolved[0] = False
    series = _series_constant(spec, pc, kappa)
    ratio = diff[resolved] / envelope[resolved]
    fitted = max(series, float(ratio.max()) if ratio.size else 0.0)
    return ComparisonReport(kappa=float(kappa), window=(0.0, float(r_hi)),
                            max_difference=float(diff.max()), fitted_constant=fitted,
                            series_constant=series, nodes=int(r.size),
                            resolved_nodes=int(resolved.sum()))


ASYMPTOTIC_KEYS = ("rho", "p", "mass", "mu_slope", "metric", "redshift_oscillation")


@dataclass(frozen=True)
class AsymptoticReport:
    """Window maxima of the deviations from the self-similar point.

    ``deviations`` maps
      rho -> |16 pi r^2 rho - 1|, p -> |16 pi r^2 p - 1|, mass -> |4m/r - 1|,
      mu_slope -> |r mu' - 1|, metric -> |e^{2 lambda} - 2|,
      redshift_oscillation -> max/min of e^{mu}/r minus 1.
    """

    kappa: float
    window: tuple
    nodes: int
    deviations: dict
    w1: np.ndarray
    w2: np.ndarray

    def as_dict(self):
        return {"kappa": self.kappa, "window": list(self.window), "nodes": self.nodes,
                "deviations": dict(self.deviations)}


def asymptotic_report(spec=HARD_PHASE, kappa=12.0, alpha1=0.1, alpha2=0.2, star_cfg=None,
                      min_nodes=32):
    """Deviation maxima on [kappa^alpha1, kappa^alpha2] e^{-2 kappa}."""
    if not 0.0 < alpha1 < alpha2 < 0.25:
        raise ValueError("need 0 < alpha1 < alpha2 < 1/4")
    star = pressure_parameter_profile(spec, kappa, star_cfg)
    r1 = kappa ** alpha1 * math.exp(-2.0 * kappa)
    r2 = kappa ** alpha2 * math.exp(-2.0 * kappa)
    sel = (star.r >= r1) & (star.r <= r2)
    if sel.sum() < min_nodes:
        raise ResolutionError(
            f"window [{r1:.3g}, {r2:.3g}] holds {int(sel.sum())} nodes, need {min_nodes}")
    r = star.r[sel]
    rho, p, m = star.rho[sel], star.p[sel], star.mass[sel]
    e2l = np.exp(2.0 * star.lam[sel])
    mu_prime = e2l * (4.0 * math.pi * r * p + m / r ** 2)
    red = np.exp(star.mu[sel]) / r
    dev = {
        "rho": float(np.max(np.abs(16.0 * math.pi * r ** 2 * rho - 1.0))),
        "p": float(np.max(np.abs(16.0 * math.pi * r ** 2 * p - 1.0))),
        "mass": float(np.max(np.abs(4.0 * m / r - 1.0))),
        "mu_slope": float(np.max(np.abs(r * mu_prime - 1.0))),
        "metric": float(np.max(np.abs(e2l - 2.0))),
        "redshift_oscillation": float(red.max() / red.min() - 1.0),
    }
    return AsymptoticReport(kappa=float(kappa), window=(r1, r2), nodes=int(sel.sum()),
                            deviations=dev, w1=r ** 2 * rho, w2=m / r)


def asymptotic_ladder(spec=HARD_PHASE, kappas=(8.0, 10.0, 12.0, 14.0), alpha1=0.1,
                      alpha2=0.2, star_cfg=None):
    """Reports along a kappa ladder and, per quantity, whether maxima strictly decrease."""
    reports = [asymptotic_report(spec, k, alpha1, alpha2, star_cfg) for k in kappas]
    trend = {}
    for key in ASYMPTOTIC_KEYS:
        vals = [rep.deviations[key] for rep in reports]
        trend[key] = all(b < a for a, b in zip(vals, vals[1:]))
    return reports, trend
