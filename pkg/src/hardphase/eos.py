"""Closed-form thermodynamics of the barotropic law p = cs2 (rho - rho0).

The hard phase is ``cs2 = 1, rho0 = 1``. All maps below are elementary;
the potential ``ybar`` is the enthalpy-like variable

    Q(rho) = int_{rho0}^{rho} p'(s) / (s + p(s)) ds,

so that hydrostatic balance becomes a single ODE for ``ybar``.
"""
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a density lies below the vacuum-boundary density."""


@dataclass(frozen=True)
class EosSpec:
    """Equation of state p = cs2 (rho - rho0).

    Parameters
    ----------
    cs2 : float
        Sound speed squared, in (0, 1].
    rho0 : float
        Density at which the pressure vanishes (the value at the free
        boundary).
    """

    cs2: float = 1.0
    rho0: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.cs2 <= 1.0):
            raise ValueError(f"cs2 must lie in (0, 1], got {self.cs2!r}")
        if not self.rho0 > 0.0:
            raise ValueError(f"rho0 must be positive, got {self.rho0!r}")

    @property
    def is_hard_phase(self):
        return self.cs2 == 1.0 and self.rho0 == 1.0

    def pressure(self, rho):
        """p(rho) on the liquid branch."""
        return self.cs2 * (np.asarray(rho, dtype=float) - self.rho0)


HARD_PHASE = EosSpec()


def _check_density(spec, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho >= spec.rho0)):
        raise DomainError(f"density below rho0={spec.rho0}")
    return rho


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def q_potential(spec, rho):
    """Potential Q(rho); hard phase: ln(2 rho - 1) / 2."""
    rho = _check_density(spec, rho)
    c = spec.cs2
    return _scalar(c / (1.0 + c) * np.log(((1.0 + c) * rho - c * spec.rho0) / spec.rho0))


def liquid_pressure(spec, ybar):
    """Pressure as a function of ybar, continued analytically to ybar < 0.

    Used inside integrator stages, which may probe slightly beyond the
    boundary; the physical map is :func:`pressure_from_potential`.
    """
    c = spec.cs2
    ybar = np.asarray(ybar, dtype=float)
    return _scalar(c * spec.rho0 * np.expm1((1.0 + c) * ybar / c) / (1.0 + c))


def liquid_density(spec, ybar):
    """Inverse of Q continued analytically to ybar < 0."""
    return _scalar(spec.rho0 + np.asarray(liquid_pressure(spec, ybar)) / spec.cs2)


def density_from_potential(spec, ybar):
    """rho = g(ybar): Q^{-1}(ybar) for ybar >= 0 and 0 (vacuum) for ybar < 0."""
    ybar = np.asarray(ybar, dtype=float)
    inside = ybar >= 0.0
    rho = np.where(inside, liquid_density(spec, np.where(inside, ybar, 0.0)), 0.0)
    return _scalar(rho)


def pressure_from_potential(spec, ybar):
    """p = h(ybar) = cs2 (g(ybar) - rho0) for ybar >= 0, else 0."""
    ybar = np.asarray(ybar, dtype=float)
    inside = ybar >= 0.0
    p = np.where(inside, liquid_pressure(spec, np.where(inside, ybar, 0.0)), 0.0)
    return _scalar(p)


def number_density(spec, rho):
    """N(rho) = exp(int_{rho0}^{rho} ds / (s + p(s))); hard phase: sqrt(2 rho - 1)."""
    rho = _check_density(spec, rho)
    c = spec.cs2
    base = ((1.0 + c) * rho - c * spec.rho0) / spec.rho0
    if c == 1.0:
        return _scalar(np.sqrt(base))
    return _scalar(np.power(base, 1.0 / (1.0 + c)))


def number_density_slope(spec, rho):
    """dN/drho = N / (rho + p)."""
    rho = _check_density(spec, rho)
    return _scalar(np.asarray(number_density(spec, rho)) / (rho + spec.pressure(rho)))


def enthalpy_psi(spec, rho, c_kappa):
    """Psi = (dp/drho) / (c_kappa N(rho)) = cs2 / (c_kappa N(rho))."""
    if not c_kappa > 0.0:
        raise DomainError(f"normalization c_kappa must be positive, got {c_kappa!r}")
    return _scalar(spec.cs2 / (c_kappa * np.asarray(number_density(spec, rho))))
