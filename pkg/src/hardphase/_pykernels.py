"""Pure Python twins of the compiled kernels in ``_ckernels.pyx``.

Used when the extension is not built or when ``HARDPHASE_KERNELS=python``.
Operation order follows the compiled code so both backends agree to
rounding.
"""
import math

import numpy as np

PI = 3.141592653589793


def _tov_rhs(r, dr, y, m, cs2, rho0):
    p = cs2 * rho0 * math.expm1((1.0 + cs2) * y / cs2) / (1.0 + cs2)
    rho = rho0 + p / cs2
    fy = -dr * (m / (r * r) + 4.0 * PI * r * p) / (1.0 - 2.0 * m / r)
    fm = dr * 4.0 * PI * r * r * rho
    return fy, fm


def tov_rk4(r, rmid, drdx, drdx_mid, h, cs2, rho0, ybar, mass):
    """Advance (ybar, m) from node 1 to the last node with classical RK4.

    Nodes 0 and 1 must be filled by the caller. Returns -1 on success or
    the first node index where the state stopped being finite or the
    metric factor 1 - 2m/r became non-positive.
    """
    n = len(r)
    r = r.tolist()
    rmid = rmid.tolist()
    drdx = drdx.tolist()
    drdx_mid = drdx_mid.tolist()
    y = float(ybar[1])
    m = float(mass[1])
    ys = [0.0] * n
    ms = [0.0] * n
    try:
        for i in range(1, n - 1):
            k1y, k1m = _tov_rhs(r[i], drdx[i], y, m, cs2, rho0)
            k2y, k2m = _tov_rhs(rmid[i], drdx_mid[i], y + 0.5 * h * k1y,
                                m + 0.5 * h * k1m, cs2, rho0)
            k3y, k3m = _tov_rhs(rmid[i], drdx_mid[i], y + 0.5 * h * k2y,
                                m + 0.5 * h * k2m, cs2, rho0)
            k4y, k4m = _tov_rhs(r[i + 1], drdx[i + 1], y + h * k3y, m + h * k3m,
                                cs2, rho0)
            y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            m = m + h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
            ys[i + 1] = y
            ms[i + 1] = m
            if not (math.isfinite(y) and math.isfinite(m)) or 2.0 * m >= r[i + 1]:
                ybar[2:i + 2] = ys[2:i + 2]
                mass[2:i + 2] = ms[2:i + 2]
                return i + 1
    except (OverflowError, ZeroDivisionError):
        ybar[2:i + 1] = ys[2:i + 1]
        mass[2:i + 1] = ms[2:i + 1]
        return i + 1
    ybar[2:] = ys[2:]
    mass[2:] = ms[2:]
    return -1


def _pressure_rhs(r, dr, p, q, shift, slope):
    s = shift + slope * p
    fp = -dr * (s + p) * (4.0 * PI * q / (r * r) + 4.0 * PI * r * p) \
        / (1.0 - 8.0 * PI * q / r)
    fq = dr * r * r * s
    return fp, fq


def pressure_rk4(r, rmid, drdx, drdx_mid, h, shift, slope, pres, integral):
    """RK4 for the pressure form of hydrostatic balance with rho = shift + slope p.

    The state is (p, int_0^r s^2 rho ds). ``shift = 0, slope = 1`` is the
    massless comparison system. Same conventions and return value as
    :func:`tov_rk4`.
    """
    n = len(r)
    r = r.tolist()
    rmid = rmid.tolist()
    drdx = drdx.tolist()
    drdx_mid = drdx_mid.tolist()
    p = float(pres[1])
    q = float(integral[1])
    ps = [0.0] * n
    qs = [0.0] * n
    try:
        for i in range(1, n - 1):
            k1p, k1q = _pressure_rhs(r[i], drdx[i], p, q, shift, slope)
            k2p, k2q = _pressure_rhs(rmid[i], drdx_mid[i], p + 0.5 * h * k1p,
                                     q + 0.5 * h * k1q, shift, slope)
            k3p, k3q = _pressure_rhs(rmid[i], drdx_mid[i], p + 0.5 * h * k2p,
                                     q + 0.5 * h * k2q, shift, slope)
            k4p, k4q = _pressure_rhs(r[i + 1], drdx[i + 1], p + h * k3p, q + h * k3q,
                                     shift, slope)
            p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            q = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            ps[i + 1] = p
            qs[i + 1] = q
            if not (math.isfinite(p) and math.isfinite(q)) or 8.0 * PI * q >= r[i + 1]:
                pres[2:i + 2] = ps[2:i + 2]
                integral[2:i + 2] = qs[2:i + 2]
                return i + 1
    except (OverflowError, ZeroDivisionError):
        pres[2:i + 1] = ps[2:i + 1]
        integral[2:i + 1] = qs[2:i + 1]
        return i + 1
    pres[2:] = ps[2:]
    integral[2:] = qs[2:]
    return -1


def sturm_count(d, e, sigma):
    """Number of eigenvalues of the tridiagonal (d, e) below sigma.

    Counts negative pivots of the LDL^T factorization of T - sigma I.
    Returns ``(count, breakdown)``; ``breakdown`` is True when a pivot was
    exactly zero, in which case the count is unreliable.
    """
    d = d.tolist()
    e = e.tolist()
    count = 0
    piv = d[0] - sigma
    for i in range(len(d)):
        if i > 0:
            piv = d[i] - sigma - e[i - 1] * e[i - 1] / piv
        if piv < 0.0:
            count += 1
        elif piv == 0.0:
            return count, True
    return count, False


def shifted_solve(d, e, sigma, b, out):
    """Solve (T - sigma I) x = b by unpivoted LDL^T.

    Meant for shifts below the spectrum, where T - sigma I is positive
    definite and no pivoting is needed. Returns -1 on success or the index
    of a zero pivot.
    """
    n = len(d)
    d = d.tolist()
    e = e.tolist()
    x = b.tolist()
    piv = [0.0] * n
    piv[0] = d[0] - sigma
    if piv[0] == 0.0:
        return 0
    for i in range(1, n):
        l = e[i - 1] / piv[i - 1]
        piv[i] = d[i] - sigma - l * e[i - 1]
        if piv[i] == 0.0:
            return i
        x[i] = x[i] - l * x[i - 1]
    x[n - 1] = x[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (x[i] - e[i] * x[i + 1]) / piv[i]
    out[:] = x
    return -1


def _tridiag_apply(d, e, z):
    kz = d * z
    kz[1:] += e * z[:-1]
    kz[:-1] += e * z[1:]
    return kz


def leapfrog(d, e, minv, z, v, dt, nsteps, every, zs, vs):
    """Kick-drift-kick steps of M z'' = -K z with tridiagonal K = (d, e).

    ``z`` and ``v`` are updated in place. Row ``k`` of ``zs``/``vs`` gets the
    state after ``k * every`` steps (row 0 is the initial state).
    """
    half = 0.5 * dt
    zs[0] = z
    vs[0] = v
    row = 0
    for step in range(1, nsteps + 1):
        v -= half * minv * _tridiag_apply(d, e, z)
        z += dt * v
        v -= half * minv * _tridiag_apply(d, e, z)
        if step % every == 0:
            row += 1
            zs[row] = z
            vs[row] = v
