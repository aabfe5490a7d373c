"""Linearized radial-oscillation operator about a steady state.

For a Lagrangian perturbation zeta = e^{a t} chi the linearized system is

    L chi = -[e^{mu-lambda} y^{-2} (e^{lambda-mu} y^3 chi)']' + (A1 + ... + A6) chi
          = -a^2 y e^{2 lambda - 2 mu} chi,

with the Robin condition (3 - R mu'(R)) chi(R) + R chi'(R) = 0 at the free
boundary. Multiplying by the weight e^{lambda-mu} y^3 and integrating by parts
turns the Robin condition into the boundary energy -R^4 e^{lambda-mu} lambda'
chi(R)^2, so the problem is the symmetric pencil (K, Mw) with mass weight
y^4 e^{3 lambda - 3 mu}.

Everything is discretized on the graded grid of the profile with the centre
node dropped; the weight y^3 makes the centre a natural endpoint.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import cumulative_simpson, simpson

from . import eos as _eos
from .steady_state import SolverError

PI = math.pi


class ResolutionError(SolverError):
    """Too few nodes for the requested assembly or test function."""


class DegenerateInputError(ValueError):
    """Zero vector where a non-zero one is required."""


def _metric_terms(spec, y, rho, p, m, lam):
    e2l = np.exp(2.0 * lam)
    a = 4.0 * PI * y * rho - m / y ** 2
    b = 4.0 * PI * y * p + m / y ** 2
    lam1 = e2l * a
    mu1 = e2l * b
    lam2 = (2.0 * e2l ** 2 * a ** 2
            - 4.0 * PI * e2l ** 2 * (m / y + 4.0 * PI * y ** 2 * p) * (rho + p) / spec.cs2
            + 2.0 * e2l * m / y ** 3)
    mu2 = (8.0 * PI * p * e2l
           - e2l * (4.0 * PI * y * (p - rho) + 2.0 * m / y ** 2) * (mu1 + 1.0 / y))
    return e2l, lam1, lam2, mu1, mu2


def coefficient_profiles(profile):
    """Closed-form metric derivatives and A1..A6 at the nodes y_1..y_N.

    lambda' = e^{2 lambda} (4 pi y rho - m / y^2)
    mu'     = e^{2 lambda} (4 pi y p + m / y^2)
    lambda'' = 2 lambda'^2 + e^{2 lambda} (4 pi y rho' + 2 m / y^3),
               rho' = -(rho + p) mu' / cs2
    mu''    = 2 lambda' mu' + e^{2 lambda} (4 pi (rho + p) - 4 pi y (rho + p) mu' - 2 m / y^3)

    Returns
    -------
    dict of arrays keyed y, lam1, lam2, mu1, mu2, A1..A6, A_sum, potential
    (A3 + A4 + A5 + A6, the part left after A1 + A2 cancel against the
    expanded divergence term).
    """
    spec = profile.spec
    if spec.cs2 != 1.0:
        raise NotImplementedError("the linearized operator is implemented for cs2 = 1")
    y = profile.r[1:]
    rho, p, m, lam = profile.rho[1:], profile.p[1:], profile.mass[1:], profile.lam[1:]
    e2l, lam1, lam2, mu1, mu2 = _metric_terms(spec, y, rho, p, m, lam)
    A1 = y * (lam2 - mu2)
    A2 = lam1 - mu1
    A3 = (lam1 + mu1) * (mu1 * y - 3.0) + (mu2 * y + mu1)
    A4 = -4.0 * PI * y * p * e2l * (2.0 * y * mu1 + 1.0)
    A5 = -(2.0 * y * mu1 + 1.0) / y ** 2 * e2l * m
    A6 = 8.0 * PI * y * p * e2l
    return {
        "y": y, "lam1": lam1, "lam2": lam2, "mu1": mu1, "mu2": mu2,
        "A1": A1, "A2": A2, "A3": A3, "A4": A4, "A5": A5, "A6": A6,
        "A_sum": A1 + A2 + A3 + A4 + A5 + A6,
        "potential": A3 + A4 + A5 + A6,
    }


@dataclass(frozen=True)
class OperatorAssembly:
    """Symmetric tridiagonal stiffness K = (diag, offdiag) and diagonal mass Mw.

    Unknowns are chi at the nodes y_1..y_N = R of the profile grid.
    """

    y: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray
    mass: np.ndarray
    weights: np.ndarray
    boundary_coeff: tuple
    boundary_energy: float
    coeffs: dict
    kappa: float
    R: float

    @property
    def size(self):
        return self.diag.size

    def matvec(self, chi):
        chi = np.asarray(chi, dtype=float)
        out = self.diag * chi
        out[1:] += self.offdiag * chi[:-1]
        out[:-1] += self.offdiag * chi[1:]
        return out

    def energy(self, chi):
        """chi^T K chi."""
        chi = np.asarray(chi, dtype=float)
        return float(chi @ self.matvec(chi))

    def bilinear(self, chi1, chi2):
        """chi1^T K chi2."""
        return float(np.asarray(chi1, dtype=float) @ self.matvec(chi2))

    def norm2(self, chi):
        """chi^T Mw chi."""
        chi = np.asarray(chi, dtype=float)
        return float(chi @ (self.mass * chi))

    def dense(self):
        k = np.diag(self.diag)
        k += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return k

    def scaled(self):
        """Tridiagonal of Mw^{-1/2} K Mw^{-1/2}, same eigenvalues as the pencil."""
        s = 1.0 / np.sqrt(self.mass)
        return self.diag * s * s, self.offdiag * s[:-1] * s[1:], s

    def bands_table(self):
        """Columns (y, K_ii, K_i,i+1, Mw_ii) for export; the last off-diagonal is 0."""
        off = np.append(self.offdiag, 0.0)
        return np.column_stack([self.y, self.diag, off, self.mass])


def _check_size(profile, min_size=32):
    if profile.grid_size < min_size:
        raise ResolutionError(f"need at least {min_size} grid intervals, got {profile.grid_size}")


def assemble_quadratic_form(profile, n=None):
    """Flux-form discretization of the quadratic form <L chi, chi>.

    With phi = e^{lambda - mu} y^3 chi and phi_0 = 0 at the centre,

        chi^T K chi = sum_cells c_j (phi_j - phi_{j-1})^2 + sum_i w_i V_i chi_i^2
                      - R^4 e^{lambda - mu}(R) lambda'(R) chi_N^2,

    where c_j = e^{-(nu_{j-1} + nu_j)/2} / (y_{j-1/2}^2 (y_j - y_{j-1})) with
    nu = lambda - mu and the mapped cell midpoint y_{j-1/2}, V = A_sum e^{nu} y^3,
    and w_i are trapezoid weights of the grid. The mass form is
    Mw_i = w_i y_i^4 e^{3 nu_i}.

    Parameters
    ----------
    profile : StarProfile
    n : int, optional
        Grid intervals; if different from the profile's, the star is re-solved.

    Returns
    -------
    OperatorAssembly
    """
    if n is not None:
        if n < 32:
            raise ResolutionError(f"need at least 32 grid intervals, got {n}")
        profile = profile.at_resolution(n)
    _check_size(profile)
    co = coefficient_profiles(profile)
    grid = profile.grid
    r = profile.r
    nu = profile.lam - profile.mu
    y = r[1:]
    weight = np.exp(nu) * r ** 3
    ymid = grid.midpoints()
    c = np.exp(-0.5 * (nu[:-1] + nu[1:])) / (ymid ** 2 * np.diff(r))
    w = grid.jacobian(grid.x()[1:]) * grid.h
    w[-1] *= 0.5
    wu = weight[1:]
    diag = c * wu ** 2
    diag[:-1] += c[1:] * wu[:-1] ** 2
    off = -c[1:] * wu[:-1] * wu[1:]
    diag += w * co["A_sum"] * np.exp(nu[1:]) * y ** 3
    R = profile.R
    boundary = -R ** 4 * math.exp(nu[-1]) * co["lam1"][-1]
    diag[-1] += boundary
    mass = w * y ** 4 * np.exp(3.0 * nu[1:])
    robin = (3.0 - R * co["mu1"][-1], R)
    return OperatorAssembly(y=y, diag=diag, offdiag=off, mass=mass, weights=w,
                            boundary_coeff=robin, boundary_energy=boundary, coeffs=co,
                            kappa=profile.kappa, R=R)


@dataclass(frozen=True)
class DivergenceAssembly:
    """Strong-form operator S (tridiagonal, not symmetric) with the Robin ghost node.

    S chi approximates L chi at the nodes; the eigenproblem is
    S chi = nu y e^{2 lambda - 2 mu} chi.
    """

    y: np.ndarray
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs_weight: np.ndarray
    stiffness_weight: np.ndarray
    mass: np.ndarray

    def apply(self, chi):
        chi = np.asarray(chi, dtype=float)
        out = self.diag * chi
        out[1:] += self.lower * chi[:-1]
        out[:-1] += self.upper * chi[1:]
        return out

    def energy(self, chi):
        """sum_i w_i e^{nu_i} y_i^3 chi_i (S chi)_i, the quadrature of <L chi, chi>."""
        chi = np.asarray(chi, dtype=float)
        return float(np.sum(self.stiffness_weight * chi * self.apply(chi)))

    def dense(self):
        """diag(1 / rhs_weight) S as a dense array."""
        a = np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)
        return a / self.rhs_weight[:, None]

    def lowest_eigenvalues(self, count=1):
        """Smallest real eigenvalues of the non-symmetric strong-form problem.

        The centred stencil is not sign-consistent next to the centre, so
        the matrix is not symmetrized; a dense eigen-solve is used instead.
        """
        vals = scipy.linalg.eigvals(self.dense())
        low = vals[np.argsort(vals.real)[:count]]
        if np.any(np.abs(low.imag) > 1e-8 * np.maximum(np.abs(low.real), 1.0)):
            raise SolverError("lowest strong-form eigenvalues are not real")
        return low.real


def assemble_divergence_form(profile, n=None):
    """Second-order finite differences of the expanded strong form.

    L chi = -y chi'' - (4 + y (lambda' - mu')) chi' + (A3 + A4 + A5 + A6) chi,

    the A1 + A2 terms cancelling against the expanded divergence. The centre
    is handled by the even extension chi(0) = (y_2^2 chi_1 - y_1^2 chi_2) / (y_2^2 - y_1^2);
    the Robin condition eliminates a ghost value at the next mapped node
    beyond R. Used as an independent check of :func:`assemble_quadratic_form`.
    """
    if n is not None:
        if n < 32:
            raise ResolutionError(f"need at least 32 grid intervals, got {n}")
        profile = profile.at_resolution(n)
    _check_size(profile)
    co = coefficient_profiles(profile)
    grid = profile.grid
    nodes = np.append(profile.r, grid.map(1.0 + grid.h))
    y = nodes[1:-1]
    hm = np.diff(nodes)[:-1]
    hp = np.diff(nodes)[1:]
    nu1 = co["lam1"] - co["mu1"]
    # chi'' and chi' stencils on a non-uniform grid
    s2m = 2.0 / (hm * (hm + hp))
    s2p = 2.0 / (hp * (hm + hp))
    s1m = -hp / (hm * (hm + hp))
    s1p = hm / (hp * (hm + hp))
    s10 = (hp - hm) / (hm * hp)
    a = -y
    b = -(4.0 + y * nu1)
    lower_full = a * s2m + b * s1m
    upper_full = a * s2p + b * s1p
    diag = a * (-s2m - s2p) + b * s10 + co["potential"]
    # centre: chi_0 from the even extension in y^2
    y1, y2 = y[0], y[1]
    den = y2 ** 2 - y1 ** 2
    diag[0] += lower_full[0] * y2 ** 2 / den
    upper0 = upper_full[0] - lower_full[0] * y1 ** 2 / den
    # boundary: ghost from (3 - R mu') chi_N + R chi'_N = 0
    R = profile.R
    g = -(3.0 - R * co["mu1"][-1]) / R
    # chi'_N = s1m chi_{N-1} + s10 chi_N + s1p chi_ghost = g chi_N
    ghost_n = (g - s10[-1]) / s1p[-1]
    ghost_m = -s1m[-1] / s1p[-1]
    diag[-1] += upper_full[-1] * ghost_n
    lower = lower_full[1:].copy()
    lower[-1] += upper_full[-1] * ghost_m
    upper = upper_full[:-1].copy()
    upper[0] = upper0
    nu = (profile.lam - profile.mu)[1:]
    w = grid.jacobian(grid.x()[1:]) * grid.h
    w[-1] *= 0.5
    return DivergenceAssembly(y=y, lower=lower, diag=diag, upper=upper,
                              rhs_weight=y * np.exp(2.0 * nu),
                              stiffness_weight=w * np.exp(nu) * y ** 3,
                              mass=w * y ** 4 * np.exp(3.0 * nu))


def rayleigh_quotient(asm, chi):
    """(chi^T K chi) / (chi^T Mw chi)."""
    chi = np.asarray(chi, dtype=float)
    den = asm.norm2(chi)
    if not den > 0.0:
        raise DegenerateInputError("Rayleigh quotient of a zero vector")
    return asm.energy(chi) / den


def smoothstep(t):
    """Quintic ramp 6t^5 - 15t^4 + 10t^3 clipped to [0, 1]; max slope 15/8."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_slope(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * tc * tc * (tc - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffWindow:
    """Support [r1, r2] of the cutoff xi: ramps on [r1, 2 r1] and [r2/2, r2]."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (0.0 < 4.0 * self.r1 <= self.r2):
            raise ResolutionError(
                f"window [{self.r1:.3g}, {self.r2:.3g}] has no plateau (need r2 >= 4 r1)")

    def xi(self, y):
        y = np.asarray(y, dtype=float)
        up = smoothstep((y - self.r1) / self.r1)
        down = 1.0 - smoothstep((y - 0.5 * self.r2) / (0.5 * self.r2))
        return np.where((y <= self.r1) | (y >= self.r2), 0.0, np.minimum(up, down))

    def xi_slope(self, y):
        y = np.asarray(y, dtype=float)
        up = smoothstep_slope((y - self.r1) / self.r1) / self.r1
        down = -smoothstep_slope((y - 0.5 * self.r2) / (0.5 * self.r2)) / (0.5 * self.r2)
        return np.where(y < 2.0 * self.r1, up, np.where(y > 0.5 * self.r2, down, 0.0))

    def chi(self, y):
        """y^{-1} xi(y)."""
        y = np.asarray(y, dtype=float)
        return self.xi(y) / y

    def chi_slope(self, y):
        y = np.asarray(y, dtype=float)
        return self.xi_slope(y) / y - self.xi(y) / y ** 2


def pressure_parameter(profile):
    """k with p_c = e^{4k}; the core radius of the star is about e^{-2k}."""
    return 0.25 * math.log(profile.p_c)


def cutoff_window(profile, alpha1=None, alpha2=None, inner=4.0, outer=0.125):
    """Support of the cutoff test function.

    With ``alpha1, alpha2`` given the window is [k^alpha1, k^alpha2] e^{-2k}
    with k the pressure parameter of the star. By default the window is
    [inner e^{-2k}, outer R], which keeps the same construction but spans the
    whole self-similar region.
    """
    k = pressure_parameter(profile)
    if alpha1 is not None or alpha2 is not None:
        if alpha1 is None or alpha2 is None or not 0.0 < alpha1 < alpha2:
            raise ValueError("give both 0 < alpha1 < alpha2")
        return CutoffWindow(k ** alpha1 * math.exp(-2.0 * k), k ** alpha2 * math.exp(-2.0 * k))
    return CutoffWindow(inner * math.exp(-2.0 * k), outer * profile.R)


def cutoff_test_function(profile, window=None, min_nodes=64):
    """Nodal samples of chi = y^{-1} xi(y) at y_1..y_N (zero at R)."""
    window = window or cutoff_window(profile)
    y = profile.r[1:]
    inside = (y > window.r1) & (y < window.r2)
    if inside.sum() < min_nodes:
        raise ResolutionError(
            f"cutoff window holds {int(inside.sum())} nodes, need {min_nodes}")
    return window.chi(y)


def quadrature_form(profile, chi, chi_slope):
    """Simpson quadrature of <L chi, chi> for a chi given by callables.

    integral of e^{mu-lambda} y^{-2} ((e^{lambda-mu} y^3 chi)')^2
    + A_sum e^{lambda-mu} y^3 chi^2, minus the boundary energy. The derivative
    of e^{lambda - mu} uses the closed forms of lambda' and mu'.
    """
    co = coefficient_profiles(profile)
    grid = profile.grid
    y = co["y"]
    nu = (profile.lam - profile.mu)[1:]
    c = chi(y)
    dc = chi_slope(y)
    dphi = np.exp(nu) * (y ** 3 * (co["lam1"] - co["mu1"]) * c + 3.0 * y ** 2 * c + y ** 3 * dc)
    integrand = np.exp(-nu) * dphi ** 2 / y ** 2 + co["A_sum"] * np.exp(nu) * y ** 3 * c ** 2
    integrand = np.concatenate([[0.0], integrand * grid.jacobian(grid.x()[1:])])
    value = simpson(integrand, x=grid.x())
    boundary = -profile.R ** 4 * math.exp(nu[-1]) * co["lam1"][-1] * c[-1] ** 2
    return float(value + boundary)


def quadrature_norm(profile, chi):
    """Simpson quadrature of int y^4 e^{3 lambda - 3 mu} chi^2 dy."""
    grid = profile.grid
    y = profile.r[1:]
    nu = (profile.lam - profile.mu)[1:]
    integrand = y ** 4 * np.exp(3.0 * nu) * chi(y) ** 2 * grid.jacobian(grid.x()[1:])
    return float(simpson(np.concatenate([[0.0], integrand]), x=grid.x()))


def number_density_profile(profile):
    """n = c_kappa N(rho) at every node."""
    # the boundary sample may sit a rounding error below rho0
    rho = np.maximum(profile.rho, profile.spec.rho0)
    return np.asarray(_eos.number_density(profile.spec, rho)) * profile.c_kappa


def elimination_identity(profile, zeta, zeta_slope):
    """Both sides of the integral-elimination identity for a smooth zeta.

    Left: cumulative Simpson quadrature of s^2 f(s) with
    s^2 f = 4 pi s^2 rho_1 + 8 pi s^2 rho zeta + e^{-2 lambda} s^2 lambda' zeta',
    rho_1 = -(n / s^2)(e^{-mu} s^3 zeta)'. Right: -m zeta - 4 pi p y^3 zeta.

    Returns
    -------
    (lhs, rhs) at the nodes y_1..y_N
    """
    co = coefficient_profiles(profile)
    grid = profile.grid
    y = co["y"]
    rho, p, m = profile.rho[1:], profile.p[1:], profile.mass[1:]
    lam, mu = profile.lam[1:], profile.mu[1:]
    n = number_density_profile(profile)[1:]
    z = zeta(y)
    dz = zeta_slope(y)
    # (e^{-mu} s^3 zeta)' with mu' in closed form
    flux = np.exp(-mu) * (-co["mu1"] * y ** 3 * z + 3.0 * y ** 2 * z + y ** 3 * dz)
    integrand = (-4.0 * PI * n * flux + 8.0 * PI * y ** 2 * rho * z
                 + np.exp(-2.0 * lam) * y ** 2 * co["lam1"] * dz)
    integrand = np.concatenate([[0.0], integrand * grid.jacobian(grid.x()[1:])])
    lhs = cumulative_simpson(integrand, x=grid.x(), initial=0.0)[1:]
    rhs = -m * z - 4.0 * PI * p * y ** 3 * z
    return lhs, rhs
