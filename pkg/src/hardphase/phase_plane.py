"""Autonomous planar system for the massless self-similar structure.

With w1 = r^2 rho, w2 = m/r and tau = ln r the massless equations become

    dw1/dtau = w1 (2 - 6 w2 - 8 pi w1) / (1 - 2 w2),   dw2/dtau = 4 pi w1 - w2.

Equilibria are the origin (a saddle, unstable direction (3, 4 pi)) and the
spiral sink Z = (1/(16 pi), 1/4) with eigenvalues -1 +- sqrt(3) i. The branch
of the unstable manifold that enters the triangle D bounded by w1 = 0,
w2 = 4/9 and w1 = w2 spirals into Z.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

Z = (1.0 / (16.0 * math.pi), 0.25)
UNSTABLE_DIRECTION = (3.0, 4.0 * math.pi)
TRIANGLE_TOP = 4.0 / 9.0


class PhaseError(ArithmeticError):
    """The state reached the singular line w2 = 1/2."""


class FitError(ValueError):
    """Not enough usable data for a decay fit."""


def vector_field(w):
    """Right-hand side F(w) of the planar system."""
    w1, w2 = float(w[0]), float(w[1])
    if not w2 < 0.5:
        raise PhaseError(f"w2 = {w2!r} is not below 1/2")
    return np.array([w1 * (2.0 - 6.0 * w2 - 8.0 * math.pi * w1) / (1.0 - 2.0 * w2),
                     4.0 * math.pi * w1 - w2])


def jacobian(w):
    """Analytic Jacobian DF(w)."""
    w1, w2 = float(w[0]), float(w[1])
    if not w2 < 0.5:
        raise PhaseError(f"w2 = {w2!r} is not below 1/2")
    d = 1.0 - 2.0 * w2
    return np.array([
        [(2.0 - 6.0 * w2 - 16.0 * math.pi * w1) / d,
         w1 * (-2.0 - 16.0 * math.pi * w1) / (d * d)],
        [4.0 * math.pi, -1.0],
    ])


def dulac_divergence(w1, w2):
    """div(F / w1) = -8 pi / (1 - 2 w2) - 1 / w1."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    return -8.0 * math.pi / (1.0 - 2.0 * w2) - 1.0 / w1


def diagonal_outflow(s):
    """(-1, 1) . F(s, s): positive means the flow crosses w1 = w2 into D."""
    s = np.asarray(s, dtype=float)
    f1 = s * (2.0 - 6.0 * s - 8.0 * math.pi * s) / (1.0 - 2.0 * s)
    f2 = 4.0 * math.pi * s - s
    return f2 - f1


def in_triangle(w1, w2, slack=0.0):
    """Membership in D = {0 <= w1 <= w2 <= 4/9}, with optional slack."""
    w1 = np.asarray(w1)
    w2 = np.asarray(w2)
    return (w1 >= -slack) & (w1 <= w2 + slack) & (w2 <= TRIANGLE_TOP + slack)


@dataclass(frozen=True)
class PhaseTrajectory:
    """Samples of (w1, w2) against tau."""

    tau: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    def distance_to_sink(self):
        return np.hypot(self.w1 - Z[0], self.w2 - Z[1])

    def entry_index(self):
        """First sample inside D (None if never)."""
        inside = np.nonzero(in_triangle(self.w1, self.w2))[0]
        return int(inside[0]) if inside.size else None

    def stays_in_triangle(self, slack=1e-14):
        k = self.entry_index()
        if k is None:
            return False
        return bool(np.all(in_triangle(self.w1[k:], self.w2[k:], slack)))


def integrate_unstable_manifold(eps=1e-8, tau_max=30.0, samples=6001, rtol=1e-12,
                                atol=1e-12, method="RK45"):
    """Follow the unstable branch of the origin into the sink.

    Parameters
    ----------
    eps : float
        Initial distance from the origin along (3, 4 pi).
    tau_max : float
        Final log-radius.
    samples : int
        Number of uniformly spaced output samples.
    rtol, atol : float
        Tolerances of the embedded Runge-Kutta pair.

    Returns
    -------
    PhaseTrajectory
    """
    if not 0.0 < eps < 0.1:
        raise ValueError("eps must be a small positive offset")
    norm = math.hypot(*UNSTABLE_DIRECTION)
    w0 = [eps * UNSTABLE_DIRECTION[0] / norm, eps * UNSTABLE_DIRECTION[1] / norm]

    def rhs(_, w):
        return vector_field(w)

    def wall(_, w):
        return 0.5 - w[1] - 1e-12

    wall.terminal = True
    tau = np.linspace(0.0, tau_max, samples)
    sol = solve_ivp(rhs, (0.0, tau_max), w0, method=method, t_eval=tau, rtol=rtol,
                    atol=atol, events=wall)
    if sol.status != 0:
        raise PhaseError(f"integration stopped early: {sol.message}")
    return PhaseTrajectory(tau=sol.t, w1=sol.y[0], w2=sol.y[1])


def _crossings(t, f):
    spline = CubicSpline(t, f)
    out = []
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        out.append(brentq(spline, t[i], t[i + 1], xtol=1e-14))
    return np.array(out), spline


def decay_fit(traj, start_distance=1e-2, noise_floor=1e-9):
    """Fit the terminal spiral |w - Z| ~ e^{-rate tau}, angular frequency ``frequency``.

    The frequency comes from the zero crossings of w1 - Z1 (refined on a
    cubic spline): successive crossings are pi / frequency apart. The rate
    is the least-squares slope of log|w - Z| sampled every half period,
    which removes the elliptical wobble of the norm.

    Parameters
    ----------
    traj : PhaseTrajectory
    start_distance : float
        The segment begins at the first sample closer than this to Z.
    noise_floor : float
        The segment ends at the last sample farther than this from Z.

    Returns
    -------
    (rate, frequency)
    """
    dist = traj.distance_to_sink()
    near = np.nonzero(dist < start_distance)[0]
    if near.size == 0:
        raise FitError("trajectory never approaches the sink")
    above = np.nonzero(dist > noise_floor)[0]
    lo, hi = int(near[0]), int(above[-1]) + 1 if above.size else 0
    if hi - lo < 16:
        raise FitError("terminal segment too short")
    t = traj.tau[lo:hi]
    c1 = traj.w1[lo:hi] - Z[0]
    c2 = traj.w2[lo:hi] - Z[1]
    cross, s1 = _crossings(t, c1)
    if cross.size < 3:
        raise FitError("fewer than three zero crossings in the terminal segment")
    k = np.arange(cross.size)
    half_period = np.polyfit(k, cross, 1)[0]
    frequency = math.pi / half_period
    s2 = CubicSpline(t, c2)
    ts = np.arange(t[0], t[-1], half_period)
    if ts.size < 3:
        raise FitError("terminal segment shorter than three half periods")
    log_norm = np.log(np.hypot(s1(ts), s2(ts)))
    rate = -np.polyfit(ts, log_norm, 1)[0]
    return float(rate), float(frequency)


def sink_ball_exponent(w1, w2, kappa, radius_factor=5.0):
    """Largest delta with |w - Z| <= radius_factor kappa^{-delta} on the samples."""
    d = float(np.max(np.hypot(np.asarray(w1) - Z[0], np.asarray(w2) - Z[1])))
    return -math.log(d / radius_factor) / math.log(kappa)
