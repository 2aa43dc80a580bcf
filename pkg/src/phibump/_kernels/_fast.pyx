# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused energy/gradient and batched shooting.

Covers the parametric generator families (codes below); custom generators
stay on the pure-Python path.  Kind codes: 0 power(p), 1 exp_growth,
2 power_gamma(gamma), 3 p_log(p), 4 two_power(p, q).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, isfinite, log, log1p, pow, sqrt

cnp.import_array()

DEF BLOWUP_CAP = 1e12
DEF GINV_CAP = 1e300


cdef inline double c_l1psq(double t) nogil:
    # log(1 + t^2) without overflowing t^2
    if t > 1e150:
        return 2.0 * log(t)
    return log1p(t * t)


cdef inline double c_phi(int kind, double p0, double p1, double t) nogil:
    # Phi(t) for t >= 0
    if kind == 0:
        if p0 == 2.0:
            return 0.5 * t * t
        return pow(t, p0) / p0
    if kind == 1:
        return expm1(t) - t
    if kind == 2:
        return expm1(p0 * c_l1psq(t))
    if kind == 3:
        return pow(t, p0) * log1p(t)
    return pow(t, p0) / p0 + pow(t, p1) / p1


cdef inline double c_g(int kind, double p0, double p1, double t) nogil:
    # positive branch of G(t) = t*phi(t), t >= 0
    if kind == 0:
        if p0 == 2.0:
            return t
        return pow(t, p0 - 1.0)
    if kind == 1:
        return expm1(t)
    if kind == 2:
        return 2.0 * p0 * t * exp((p0 - 1.0) * c_l1psq(t))
    if kind == 3:
        return p0 * pow(t, p0 - 1.0) * log1p(t) + pow(t, p0) / (1.0 + t)
    return pow(t, p0 - 1.0) + pow(t, p1 - 1.0)


cdef inline double c_gp(int kind, double p0, double p1, double t) nogil:
    # derivative of the positive branch of G
    cdef double one, term, L
    if kind == 0:
        return (p0 - 1.0) * pow(t, p0 - 2.0)
    if kind == 1:
        return exp(t)
    if kind == 2:
        # 2g (1+t^2)^(g-2) (1 + (2g-1) t^2), rearranged to avoid overflow
        L = c_l1psq(t)
        return 2.0 * p0 * exp((p0 - 1.0) * L) * ((2.0 * p0 - 1.0) + (2.0 - 2.0 * p0) * exp(-L))
    if kind == 3:
        one = 1.0 + t
        if p0 == 1.0:
            return 1.0 / one + 1.0 / (one * one)
        term = (p0 * pow(t, p0 - 1.0) * one - pow(t, p0)) / (one * one)
        return p0 * (p0 - 1.0) * pow(t, p0 - 2.0) * log1p(t) + p0 * pow(t, p0 - 1.0) / one + term
    return (p0 - 1.0) * pow(t, p0 - 2.0) + (p1 - 1.0) * pow(t, p1 - 2.0)


cdef inline double c_godd(int kind, double p0, double p1, double z) nogil:
    if z >= 0:
        return c_g(kind, p0, p1, z)
    return -c_g(kind, p0, p1, -z)


cdef inline double c_ginv_guess(int kind, double p0, double p1, double a) nogil:
    cdef double x, y
    if kind == 2:
        x = a / (2.0 * p0)
        y = pow(x, 1.0 / (2.0 * p0 - 1.0))
        return x if x > y else y
    if kind == 3:
        if p0 == 1.0:
            if a < 2.0:
                return 0.5 * a
            return expm1(a - 1.0 if a - 1.0 < 690.0 else 690.0)
        x = pow(a / (p0 + 1.0), 1.0 / p0)
        y = pow(a / p0, 1.0 / (p0 - 1.0))
        return x if x > y else y
    if kind == 4:
        x = pow(a, 1.0 / (p0 - 1.0))
        y = pow(a, 1.0 / (p1 - 1.0))
        return x if x < y else y
    return a if a > 1.0 else 1.0


cdef double c_ginv(int kind, double p0, double p1, double w, double guess, int* err) nogil:
    # inverse of the odd extension of G; sets err[0] = 1 when out of range
    cdef double a, s, x, lo, hi, gx, diff, gp, xn, tol
    cdef int it
    err[0] = 0
    if w == 0.0:
        return 0.0
    s = 1.0 if w > 0 else -1.0
    a = fabs(w)
    if not isfinite(a):
        err[0] = 1
        return 0.0
    if kind == 0:
        if p0 == 2.0:
            return w
        return s * pow(a, 1.0 / (p0 - 1.0))
    if kind == 1:
        return s * log1p(a)
    if c_g(kind, p0, p1, GINV_CAP) < a:
        err[0] = 1
        return 0.0
    x = guess
    if not (isfinite(x) and x > 0.0):
        x = c_ginv_guess(kind, p0, p1, a)
    if x < 1e-300:
        x = 1e-300
    elif x > 1e299:
        x = 1e299
    lo = 0.0
    hi = GINV_CAP
    if c_g(kind, p0, p1, hi) < a:
        err[0] = 1
        return 0.0
    tol = 1e-12 * a + 1e-300
    for it in range(200):
        gx = c_g(kind, p0, p1, x)
        diff = gx - a
        if fabs(diff) <= tol:
            return s * x
        if diff > 0.0:
            if x < hi:
                hi = x
        else:
            if x > lo:
                lo = x
        gp = c_gp(kind, p0, p1, x if x > 1e-300 else 1e-300)
        xn = x - diff / gp
        if not isfinite(xn) or xn <= lo or xn >= hi:
            if hi > 16.0 * (lo if lo > 1e-300 else 1e-300):
                xn = sqrt((lo if lo > 1e-300 else 1e-300) * hi)
            else:
                xn = 0.5 * (lo + hi)
        x = xn
        if hi - lo <= 1e-16 * (1.0 + hi):
            return s * (0.5 * (lo + hi))
    return s * x


cdef inline int c_segment(double s, double[::1] fx) nogil:
    cdef int lo = 0, hi = fx.shape[0] - 1, mid
    if s <= fx[0]:
        return 0
    if s >= fx[hi]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if fx[mid] <= s:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline double c_f(double s, double[::1] fx, double[::1] fy, double f0,
                       double cut, int right_mode) nogil:
    cdef int j
    cdef double x0, x1
    if s <= 0.0:
        return f0
    if s > cut and right_mode == 1:
        return 0.0
    if s >= fx[fx.shape[0] - 1]:
        return fy[fx.shape[0] - 1]
    j = c_segment(s, fx)
    x0 = fx[j]
    x1 = fx[j + 1]
    return fy[j] + (fy[j + 1] - fy[j]) * (s - x0) / (x1 - x0)


cdef inline double c_F(double s, double[::1] fx, double[::1] fy, double[::1] Fy,
                       double f0, double cut, double Fcut) nogil:
    cdef int j
    cdef double sc, ds, slope
    if s <= 0.0:
        return f0 * s
    sc = s if s < cut else cut
    j = c_segment(sc, fx)
    ds = sc - fx[j]
    slope = (fy[j + 1] - fy[j]) / (fx[j + 1] - fx[j])
    return Fy[j] + fy[j] * ds + 0.5 * slope * ds * ds


def energy_and_gradient(double[::1] u, double lam, double[::1] h, double[::1] mcell,
                        double[::1] wnode, int kind, double p0, double p1,
                        double[::1] fx, double[::1] fy, double[::1] Fy,
                        double f0, double cut, double Fcut, bint want_grad):
    """Fused discrete energy and gradient; returns (energy, grad or None)."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double energy = 0.0, du, flow
    cdef cnp.ndarray grad_arr
    cdef double[::1] grad
    if want_grad:
        grad_arr = np.zeros(n, dtype=np.float64)
        grad = grad_arr
        with nogil:
            for i in range(n - 1):
                du = (u[i + 1] - u[i]) / h[i]
                energy += mcell[i] * c_phi(kind, p0, p1, fabs(du))
                flow = mcell[i] * c_godd(kind, p0, p1, du) / h[i]
                grad[i] -= flow
                grad[i + 1] += flow
            for i in range(n):
                energy -= lam * wnode[i] * c_F(u[i], fx, fy, Fy, f0, cut, Fcut)
            for i in range(n - 1):
                grad[i] -= lam * wnode[i] * c_f(u[i], fx, fy, f0, cut, 1)
            grad[n - 1] = 0.0
        return energy, grad_arr
    with nogil:
        for i in range(n - 1):
            du = (u[i + 1] - u[i]) / h[i]
            energy += mcell[i] * c_phi(kind, p0, p1, fabs(du))
        for i in range(n):
            energy -= lam * wnode[i] * c_F(u[i], fx, fy, Fy, f0, cut, Fcut)
    return energy, None


def shoot_batch(double[::1] d, double lam, int N, double R, int n_steps,
                int kind, double p0, double p1,
                double[::1] fx, double[::1] fy, double f0, double cut,
                int right_mode, int series_steps):
    """Batched center-value shooting; returns (u, slope, H, status)."""
    cdef Py_ssize_t B = d.shape[0]
    cdef Py_ssize_t n = n_steps + 1
    cdef cnp.ndarray u_arr = np.zeros((B, n), dtype=np.float64)
    cdef cnp.ndarray s_arr = np.zeros((B, n), dtype=np.float64)
    cdef cnp.ndarray H_arr = np.zeros((B, n), dtype=np.float64)
    cdef cnp.ndarray st_arr = np.zeros(B, dtype=np.int8)
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] H = H_arr
    cdef signed char[::1] status = st_arr
    cdef double hstep = R / n_steps
    cdef Py_ssize_t b, i, j
    cdef int err1, err2, sser
    cdef double r0, r1, rw0, rw1, fd, fcur, fnew, scur, s1, snew, up, Hp, unew, Hnew
    sser = series_steps if series_steps > 1 else 1
    with nogil:
        for b in range(B):
            u[b, 0] = d[b]
            fd = c_f(d[b], fx, fy, f0, cut, right_mode)
            fcur = fd
            for i in range(n_steps):
                r0 = hstep * i
                r1 = hstep * (i + 1)
                rw0 = pow(r0, N - 1) if N > 1 else 1.0
                rw1 = pow(r1, N - 1) if N > 1 else 1.0
                scur = s[b, i]
                err1 = 0
                err2 = 0
                if i < sser:
                    s1 = -c_ginv(kind, p0, p1, lam * fd * r1 / N, fabs(scur), &err1)
                    unew = u[b, i] + 0.5 * hstep * (scur + s1)
                else:
                    up = u[b, i] + hstep * scur
                    Hp = H[b, i] + 0.5 * hstep * lam * (
                        fcur * rw0 + c_f(up, fx, fy, f0, cut, right_mode) * rw1)
                    s1 = -c_ginv(kind, p0, p1, Hp / rw1, fabs(scur), &err1)
                    unew = u[b, i] + 0.5 * hstep * (scur + s1)
                fnew = c_f(unew, fx, fy, f0, cut, right_mode)
                Hnew = H[b, i] + 0.5 * hstep * lam * (fcur * rw0 + fnew * rw1)
                if i + 1 < sser:
                    snew = -c_ginv(kind, p0, p1, lam * fd * r1 / N, fabs(s1), &err2)
                else:
                    snew = -c_ginv(kind, p0, p1, Hnew / rw1, fabs(s1), &err2)
                if err1 or err2:
                    status[b] = 2
                elif not isfinite(unew) or fabs(unew) > BLOWUP_CAP:
                    status[b] = 1
                if status[b] != 0:
                    for j in range(i + 1, n):
                        u[b, j] = u[b, j - 1]
                        H[b, j] = H[b, j - 1]
                    break
                u[b, i + 1] = unew
                H[b, i + 1] = Hnew
                s[b, i + 1] = snew
                fcur = fnew
    return u_arr, s_arr, H_arr, st_arr
