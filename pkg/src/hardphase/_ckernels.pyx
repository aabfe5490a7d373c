# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Every function here has a line-for-line twin in ``_pykernels`` with the
same signature and the same floating point operation order, so the two
backends agree to rounding.
"""
from libc.math cimport expm1, fabs, isfinite

cdef double PI = 3.141592653589793


cdef inline void _tov_rhs(double r, double dr, double y, double m,
                          double cs2, double rho0, double *fy, double *fm) noexcept nogil:
    # liquid branch of the equation of state, continued past y = 0
    cdef double p = cs2 * rho0 * expm1((1.0 + cs2) * y / cs2) / (1.0 + cs2)
    cdef double rho = rho0 + p / cs2
    fy[0] = -dr * (m / (r * r) + 4.0 * PI * r * p) / (1.0 - 2.0 * m / r)
    fm[0] = dr * 4.0 * PI * r * r * rho


def tov_rk4(const double[::1] r, const double[::1] rmid,
            const double[::1] drdx, const double[::1] drdx_mid,
            double h, double cs2, double rho0,
            double[::1] ybar, double[::1] mass):
    """Advance (ybar, m) from node 1 to the last node with classical RK4.

    Nodes 0 and 1 must be filled by the caller. Returns -1 on success or
    the first node index where the state stopped being finite or the
    metric factor 1 - 2m/r became non-positive.
    """
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t status = -1
    cdef double y, m, k1y, k1m, k2y, k2m, k3y, k3m, k4y, k4m
    with nogil:
        for i in range(1, n - 1):
            y = ybar[i]
            m = mass[i]
            _tov_rhs(r[i], drdx[i], y, m, cs2, rho0, &k1y, &k1m)
            _tov_rhs(rmid[i], drdx_mid[i], y + 0.5 * h * k1y, m + 0.5 * h * k1m,
                     cs2, rho0, &k2y, &k2m)
            _tov_rhs(rmid[i], drdx_mid[i], y + 0.5 * h * k2y, m + 0.5 * h * k2m,
                     cs2, rho0, &k3y, &k3m)
            _tov_rhs(r[i + 1], drdx[i + 1], y + h * k3y, m + h * k3m,
                     cs2, rho0, &k4y, &k4m)
            ybar[i + 1] = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            mass[i + 1] = m + h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
            if not (isfinite(ybar[i + 1]) and isfinite(mass[i + 1])) \
                    or 2.0 * mass[i + 1] >= r[i + 1]:
                status = i + 1
                break
    return status


cdef inline void _pressure_rhs(double r, double dr, double p, double q,
                               double shift, double slope,
                               double *fp, double *fq) noexcept nogil:
    cdef double s = shift + slope * p
    fp[0] = -dr * (s + p) * (4.0 * PI * q / (r * r) + 4.0 * PI * r * p) \
        / (1.0 - 8.0 * PI * q / r)
    fq[0] = dr * r * r * s


def pressure_rk4(const double[::1] r, const double[::1] rmid,
                 const double[::1] drdx, const double[::1] drdx_mid,
                 double h, double shift, double slope,
                 double[::1] pres, double[::1] integral):
    """RK4 for the pressure form of hydrostatic balance with rho = shift + slope p.

    The state is (p, int_0^r s^2 rho ds). ``shift = 0, slope = 1`` is the
    massless comparison system. Same conventions and return value as
    :func:`tov_rk4`.
    """
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t status = -1
    cdef double p, q, k1p, k1q, k2p, k2q, k3p, k3q, k4p, k4q
    with nogil:
        for i in range(1, n - 1):
            p = pres[i]
            q = integral[i]
            _pressure_rhs(r[i], drdx[i], p, q, shift, slope, &k1p, &k1q)
            _pressure_rhs(rmid[i], drdx_mid[i], p + 0.5 * h * k1p, q + 0.5 * h * k1q,
                          shift, slope, &k2p, &k2q)
            _pressure_rhs(rmid[i], drdx_mid[i], p + 0.5 * h * k2p, q + 0.5 * h * k2q,
                          shift, slope, &k3p, &k3q)
            _pressure_rhs(r[i + 1], drdx[i + 1], p + h * k3p, q + h * k3q,
                          shift, slope, &k4p, &k4q)
            pres[i + 1] = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            integral[i + 1] = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            if not (isfinite(pres[i + 1]) and isfinite(integral[i + 1])) \
                    or 8.0 * PI * integral[i + 1] >= r[i + 1]:
                status = i + 1
                break
    return status


def sturm_count(const double[::1] d, const double[::1] e, double sigma):
    """Number of eigenvalues of the tridiagonal (d, e) below sigma.

    Counts negative pivots of the LDL^T factorization of T - sigma I.
    Returns ``(count, breakdown)``; ``breakdown`` is True when a pivot was
    exactly zero, in which case the count is unreliable.
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t count = 0
    cdef bint breakdown = False
    cdef double piv
    with nogil:
        piv = d[0] - sigma
        for i in range(n):
            if i > 0:
                piv = d[i] - sigma - e[i - 1] * e[i - 1] / piv
            if piv < 0.0:
                count += 1
            elif piv == 0.0:
                breakdown = True
                break
    return count, breakdown


def shifted_solve(const double[::1] d, const double[::1] e, double sigma,
                  const double[::1] b, double[::1] out):
    """Solve (T - sigma I) x = b by unpivoted LDL^T.

    Meant for shifts below the spectrum, where T - sigma I is positive
    definite and no pivoting is needed. Returns -1 on success or the index
    of a zero pivot.
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef double[::1] piv = out.copy()
    cdef double l
    cdef Py_ssize_t status = -1
    with nogil:
        piv[0] = d[0] - sigma
        if piv[0] == 0.0:
            status = 0
        else:
            out[0] = b[0]
            for i in range(1, n):
                l = e[i - 1] / piv[i - 1]
                piv[i] = d[i] - sigma - l * e[i - 1]
                if piv[i] == 0.0:
                    status = i
                    break
                out[i] = b[i] - l * out[i - 1]
            if status < 0:
                out[n - 1] = out[n - 1] / piv[n - 1]
                for i in range(n - 2, -1, -1):
                    out[i] = (out[i] - e[i] * out[i + 1]) / piv[i]
    return status


def leapfrog(const double[::1] d, const double[::1] e, const double[::1] minv,
             double[::1] z, double[::1] v, double dt, Py_ssize_t nsteps,
             Py_ssize_t every, double[:, ::1] zs, double[:, ::1] vs):
    """Kick-drift-kick steps of M z'' = -K z with tridiagonal K = (d, e).

    ``z`` and ``v`` are updated in place. Row ``k`` of ``zs``/``vs`` gets the
    state after ``k * every`` steps (row 0 is the initial state).
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, step
    cdef Py_ssize_t row = 0
    cdef double kz
    cdef double half = 0.5 * dt
    with nogil:
        for i in range(n):
            zs[0, i] = z[i]
            vs[0, i] = v[i]
        for step in range(1, nsteps + 1):
            for i in range(n):
                kz = d[i] * z[i]
                if i > 0:
                    kz = kz + e[i - 1] * z[i - 1]
                if i < n - 1:
                    kz = kz + e[i] * z[i + 1]
                v[i] = v[i] - half * minv[i] * kz
            for i in range(n):
                z[i] = z[i] + dt * v[i]
            for i in range(n):
                kz = d[i] * z[i]
                if i > 0:
                    kz = kz + e[i - 1] * z[i - 1]
                if i < n - 1:
                    kz = kz + e[i] * z[i + 1]
                v[i] = v[i] - half * minv[i] * kz
            if step % every == 0:
                row += 1
                for i in range(n):
                    zs[row, i] = z[i]
                    vs[row, i] = v[i]
