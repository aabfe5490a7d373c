"""Linearized radial dynamics Mw zeta'' = -K zeta by kick-drift-kick leapfrog."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .steady_state import SolverError


class StabilityError(ValueError):
    """Time step above the explicit stability bound."""

    def __init__(self, dt, bound):
        super().__init__(f"dt={dt!r} exceeds the leapfrog stability bound {bound!r}")
        self.dt = dt
        self.bound = bound


class DegenerateFitError(ValueError):
    """Growth fit over a window where the norm vanishes."""


SAFETY = 0.5


def largest_eigenvalue(asm, iters=60):
    """Power-iteration estimate of the largest eigenvalue of (K, Mw).

    Starts from an alternating-sign vector, which is rich in the
    highest-frequency modes. Returns the estimate times 1.05 so that the
    estimate bounds the true value from above in practice.
    """
    d, e, _ = asm.scaled()
    n = d.size
    v = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) / math.sqrt(n)
    lam = 0.0
    shift = float(np.min(d) - 2.0 * np.max(np.abs(e))) if n > 1 else 0.0
    shift = min(shift, 0.0)
    for _ in range(iters):
        w = d * v - shift * v
        w[1:] += e * v[:-1]
        w[:-1] += e * v[1:]
        lam = float(v @ w)
        norm = math.sqrt(float(w @ w))
        if norm == 0.0:
            break
        v = w / norm
    return 1.05 * (lam + shift)


def stability_bound(asm, iters=60):
    """Largest stable leapfrog step 2 / sqrt(lambda_max)."""
    lam = largest_eigenvalue(asm, iters)
    if not lam > 0.0:
        raise SolverError("pencil has no positive eigenvalue; no oscillation bound")
    return 2.0 / math.sqrt(lam)


def default_dt(asm):
    return SAFETY * stability_bound(asm)


@dataclass(frozen=True)
class ModeEvolution:
    """Snapshots of a linear evolution at uniform times.

    energy is 0.5 (zeta_dot^T Mw zeta_dot + zeta^T K zeta); norms is the
    Mw-norm of zeta.
    """

    times: np.ndarray
    zeta: np.ndarray
    zeta_dot: np.ndarray
    energy: np.ndarray
    norms: np.ndarray
    dt: float
    steps: int

    def table(self):
        """Columns (t, norm, energy)."""
        return np.column_stack([self.times, self.norms, self.energy])

    def crossing_time(self, threshold):
        """First time the norm reaches ``threshold``, by log-linear interpolation."""
        idx = np.nonzero(self.norms >= threshold)[0]
        if idx.size == 0:
            raise ValueError("threshold never reached")
        k = int(idx[0])
        if k == 0:
            return float(self.times[0])
        a, b = math.log(self.norms[k - 1]), math.log(self.norms[k])
        frac = (math.log(threshold) - a) / (b - a)
        return float(self.times[k - 1] + frac * (self.times[k] - self.times[k - 1]))


def _energy(asm, z, v):
    kz = asm.diag * z
    kz[:, 1:] += asm.offdiag * z[:, :-1]
    kz[:, :-1] += asm.offdiag * z[:, 1:]
    return 0.5 * (np.sum(asm.mass * v * v, axis=1) + np.sum(z * kz, axis=1))


def evolve_linear(asm, zeta0, zeta_dot0, T, dt=None, samples=501, bound=None):
    """Integrate Mw zeta'' = -K zeta over [0, T].

    Parameters
    ----------
    asm : OperatorAssembly
    zeta0, zeta_dot0 : array_like
        Initial data at the assembly nodes.
    T : float
        Final time; rounded up to a whole number of steps per snapshot.
    dt : float, optional
        Step; defaults to half the stability bound.
    samples : int
        Number of snapshots including t = 0.
    bound : float, optional
        Precomputed stability bound.

    Returns
    -------
    ModeEvolution
    """
    if not T > 0.0:
        raise ValueError("T must be positive")
    if samples < 2:
        raise ValueError("need at least two samples")
    bound = bound if bound is not None else stability_bound(asm)
    dt = SAFETY * bound if dt is None else float(dt)
    if not 0.0 < dt <= bound:
        raise StabilityError(dt, bound)
    z = np.array(zeta0, dtype=float)
    v = np.array(zeta_dot0, dtype=float)
    if z.shape != (asm.size,) or v.shape != (asm.size,):
        raise ValueError(f"initial data must have shape ({asm.size},)")
    intervals = samples - 1
    every = max(1, math.ceil(T / (dt * intervals)))
    nsteps = every * intervals
    zs = np.empty((samples, asm.size))
    vs = np.empty((samples, asm.size))
    minv = 1.0 / asm.mass
    kernels.leapfrog(asm.diag, asm.offdiag, minv, z, v, dt, nsteps, every, zs, vs)
    times = dt * every * np.arange(samples)
    energy = _energy(asm, zs, vs)
    norms = np.sqrt(np.sum(asm.mass * zs * zs, axis=1))
    for a in (times, zs, vs, energy, norms):
        a.setflags(write=False)
    return ModeEvolution(times, zs, vs, energy, norms, dt, nsteps)


def time_reversal_defect(asm, zeta0, zeta_dot0, T, dt=None):
    """Mw-norm of zeta after evolving forward T and back T, relative to zeta0."""
    fwd = evolve_linear(asm, zeta0, zeta_dot0, T, dt=dt, samples=2)
    back = evolve_linear(asm, fwd.zeta[-1], -fwd.zeta_dot[-1], T, dt=fwd.dt, samples=2)
    diff = back.zeta[-1] - np.asarray(zeta0, dtype=float)
    ref = math.sqrt(float(np.sum(asm.mass * np.asarray(zeta0, dtype=float) ** 2)))
    return math.sqrt(float(np.sum(asm.mass * diff * diff))) / ref


def growth_rate_fit(ev, window=None):
    """Least-squares slope of ln ||zeta||_Mw over ``window = (t0, t1)``."""
    t = ev.times
    if window is None:
        window = (t[0], t[-1])
    t0, t1 = window
    if not (t[0] <= t0 < t1 <= t[-1] + 1e-12 * max(1.0, abs(t[-1]))):
        raise ValueError(f"window {window} outside [{t[0]}, {t[-1]}]")
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 2:
        raise DegenerateFitError("fewer than two samples in the window")
    norms = ev.norms[sel]
    if np.any(norms <= 0.0) or not np.all(np.isfinite(norms)):
        raise DegenerateFitError("norm vanishes in the fit window")
    slope, _ = np.polyfit(t[sel], np.log(norms), 1)
    return float(slope)


def random_seed_vector(asm, seed):
    """Smooth pseudorandom Mw-unit vector vanishing nowhere identically."""
    rng = np.random.default_rng(seed)
    y = asm.y / asm.y[-1]
    coeffs = rng.standard_normal(6)
    z = np.polynomial.legendre.legval(2.0 * y - 1.0, coeffs)
    return z / math.sqrt(float(np.sum(asm.mass * z * z)))


def density_perturbation(profile, zeta):
    """delta rho = -(n / y^2)(e^{-mu} y^3 zeta)' at y_1..y_N.

    ``zeta`` holds values at y_1..y_N; the centre value of e^{-mu} y^3 zeta
    is 0. The derivative is second order in the grid coordinate.
    """
    from .linear_operator import number_density_profile

    zeta = np.asarray(zeta, dtype=float)
    grid = profile.grid
    r = profile.r
    if zeta.shape != (r.size - 1,):
        raise ValueError(f"zeta must have shape ({r.size - 1},)")
    psi = np.concatenate([[0.0], np.exp(-profile.mu[1:]) * r[1:] ** 3 * zeta])
    x = grid.x()
    dpsi = np.gradient(psi, x, edge_order=2) / grid.jacobian(x)
    n = number_density_profile(profile)
    return -(n[1:] / r[1:] ** 2) * dpsi[1:]
