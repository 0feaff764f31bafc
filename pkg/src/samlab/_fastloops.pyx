# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled specializations of the hot loops.

Operation-for-operation mirror of ``_pyloops``; see that module for the
status-code conventions.  Do not compile with fast-math: trajectories
must be bit-identical to the pure-Python fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, isfinite, fabs

cnp.import_array()

BACKEND_NAME = "compiled"

ALG_GD = 0
ALG_SAM = 1
ALG_ONE_SAM = 2
ALG_ASC_GD = 3

cdef double _ZERO_RTOL = 1e-14
cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef unsigned long long _MUL1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long _MUL2 = 0x94D049BB133111EBULL
cdef double _INV53 = 1.0 / 9007199254740992.0


cdef inline unsigned long long _splitmix64(unsigned long long seed, long t) nogil:
    cdef unsigned long long z = seed + (<unsigned long long>(t + 1)) * _GOLDEN
    z = (z ^ (z >> 30)) * _MUL1
    z = (z ^ (z >> 27)) * _MUL2
    return z ^ (z >> 31)


cdef inline int _component_index(unsigned long long seed, long t, int m) nogil:
    cdef double u = <double>(_splitmix64(seed, t) >> 11) * _INV53
    cdef int k = 1 + <int>(u * m)
    if k > m:
        k = m
    return k


cdef inline double _toy_value(double x1, double x2, double x3, double x4) nogil:
    cdef double f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    cdef double f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    return f1 * x3 * x3 + f2 * x4 * x4


cdef inline void _toy_grad(double x1, double x2, double x3, double x4,
                           double* g1, double* g2, double* g3, double* g4) nogil:
    cdef double f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    cdef double f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    g1[0] = 2.0 * x1 * x3 * x3 - 8.0 * (1.0 - x1) * x4 * x4
    g2[0] = 12.0 * x2 * x3 * x3 - 2.0 * (1.0 - x2) * x4 * x4
    g3[0] = 2.0 * f1 * x3
    g4[0] = 2.0 * f2 * x4


cdef inline void _toy_component_grad(int k, double x1, double x2, double x3, double x4,
                                     double* g1, double* g2, double* g3, double* g4) nogil:
    cdef double f1, f2
    if k == 1:
        f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
        g1[0] = 4.0 * x1 * x3 * x3
        g2[0] = 24.0 * x2 * x3 * x3
        g3[0] = 4.0 * f1 * x3
        g4[0] = 0.0
    else:
        f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
        g1[0] = -16.0 * (1.0 - x1) * x4 * x4
        g2[0] = -4.0 * (1.0 - x2) * x4 * x4
        g3[0] = 0.0
        g4[0] = 4.0 * f2 * x4


cdef long _records_capacity(long n_steps, long record_every):
    cdef long n = 1
    if n_steps > 0:
        n += (n_steps - 1) // record_every + 1
    return n


def toy4d_run(int alg, double[::1] x0, double eta, double rho,
              double[::1] fallback, unsigned long long seed,
              long n_steps, long record_every):
    cdef double x1 = x0[0], x2 = x0[1], x3 = x0[2], x4 = x0[3]
    cdef double fb1 = fallback[0], fb2 = fallback[1]
    cdef double fb3 = fallback[2], fb4 = fallback[3]
    cdef long cap = _records_capacity(n_steps, record_every)

    ts_arr = np.empty(cap, dtype=np.int64)
    xs_arr = np.empty((cap, 4), dtype=np.float64)
    values_arr = np.empty(cap, dtype=np.float64)
    gnorms_arr = np.empty(cap, dtype=np.float64)
    cdef long long[::1] ts = ts_arr
    cdef double[:, ::1] xs = xs_arr
    cdef double[::1] values = values_arr
    cdef double[::1] gnorms = gnorms_arr

    cdef long n_rec = 0, last_recorded = 0, fail_step = -1, t
    cdef int status = 0, k = 0
    cdef double g1, g2, g3, g4, gnorm, xnorm
    cdef double d1, d2, d3, d4, y1, y2, y3, y4, p1, p2, p3, p4
    cdef double q1, q2, q3, q4
    cdef double f1, f2, h11, h22, h33, h44, h13, h14, h23, h24
    cdef double hp1, hp2, hp3, hp4, hg1, hg2, hg3, hg4, dot, n3
    cdef double a1, a2, a3, a4

    # record t = 0
    ts[n_rec] = 0
    xs[n_rec, 0] = x1; xs[n_rec, 1] = x2; xs[n_rec, 2] = x3; xs[n_rec, 3] = x4
    values[n_rec] = _toy_value(x1, x2, x3, x4)
    _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
    gnorms[n_rec] = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
    n_rec += 1

    for t in range(n_steps):
        q1 = x1; q2 = x2; q3 = x3; q4 = x4  # pre-step iterate
        if alg == 2:  # one_sam
            k = _component_index(seed, t, 2)
            _toy_component_grad(k, x1, x2, x3, x4, &g1, &g2, &g3, &g4)
        else:
            _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
        gnorm = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        xnorm = sqrt(x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4)

        if alg == 0:  # gd
            x1 -= eta * g1
            x2 -= eta * g2
            x3 -= eta * g3
            x4 -= eta * g4
        elif alg == 1 or alg == 2:  # sam / one_sam
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                d1 = fb1; d2 = fb2; d3 = fb3; d4 = fb4
            else:
                d1 = g1 / gnorm; d2 = g2 / gnorm; d3 = g3 / gnorm; d4 = g4 / gnorm
            y1 = x1 + rho * d1
            y2 = x2 + rho * d2
            y3 = x3 + rho * d3
            y4 = x4 + rho * d4
            if alg == 2:
                _toy_component_grad(k, y1, y2, y3, y4, &p1, &p2, &p3, &p4)
            else:
                _toy_grad(y1, y2, y3, y4, &p1, &p2, &p3, &p4)
            x1 -= eta * p1
            x2 -= eta * p2
            x3 -= eta * p3
            x4 -= eta * p4
        else:  # asc_gd
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                status = 2
                fail_step = t
                break
            d1 = g1 / gnorm; d2 = g2 / gnorm; d3 = g3 / gnorm; d4 = g4 / gnorm
            _toy_grad(x1 + rho * d1, x2 + rho * d2, x3 + rho * d3, x4 + rho * d4,
                      &p1, &p2, &p3, &p4)
            f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
            f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
            h11 = 2.0 * x3 * x3 + 8.0 * x4 * x4
            h22 = 12.0 * x3 * x3 + 2.0 * x4 * x4
            h33 = 2.0 * f1
            h44 = 2.0 * f2
            h13 = 4.0 * x1 * x3
            h14 = -16.0 * (1.0 - x1) * x4
            h23 = 24.0 * x2 * x3
            h24 = -4.0 * (1.0 - x2) * x4
            hp1 = h11 * p1 + h13 * p3 + h14 * p4
            hp2 = h22 * p2 + h23 * p3 + h24 * p4
            hp3 = h13 * p1 + h23 * p2 + h33 * p3
            hp4 = h14 * p1 + h24 * p2 + h44 * p4
            hg1 = h11 * g1 + h13 * g3 + h14 * g4
            hg2 = h22 * g2 + h23 * g3 + h24 * g4
            hg3 = h13 * g1 + h23 * g2 + h33 * g3
            hg4 = h14 * g1 + h24 * g2 + h44 * g4
            dot = g1 * p1 + g2 * p2 + g3 * p3 + g4 * p4
            n3 = gnorm * gnorm * gnorm
            a1 = p1 + rho * (hp1 / gnorm - dot * hg1 / n3)
            a2 = p2 + rho * (hp2 / gnorm - dot * hg2 / n3)
            a3 = p3 + rho * (hp3 / gnorm - dot * hg3 / n3)
            a4 = p4 + rho * (hp4 / gnorm - dot * hg4 / n3)
            x1 -= eta * a1
            x2 -= eta * a2
            x3 -= eta * a3
            x4 -= eta * a4

        if not (isfinite(x1) and isfinite(x2) and isfinite(x3) and isfinite(x4)):
            status = 1
            fail_step = t
            x1 = q1; x2 = q2; x3 = q3; x4 = q4
            break
        if (t + 1) % record_every == 0 and t + 1 != n_steps:
            ts[n_rec] = t + 1
            xs[n_rec, 0] = x1; xs[n_rec, 1] = x2
            xs[n_rec, 2] = x3; xs[n_rec, 3] = x4
            values[n_rec] = _toy_value(x1, x2, x3, x4)
            _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
            gnorms[n_rec] = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
            n_rec += 1
            last_recorded = t + 1

    if status != 0:
        if fail_step != last_recorded and fail_step > 0:
            ts[n_rec] = fail_step
            xs[n_rec, 0] = x1; xs[n_rec, 1] = x2
            xs[n_rec, 2] = x3; xs[n_rec, 3] = x4
            values[n_rec] = _toy_value(x1, x2, x3, x4)
            _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
            gnorms[n_rec] = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
            n_rec += 1
    elif n_steps > 0:
        ts[n_rec] = n_steps
        xs[n_rec, 0] = x1; xs[n_rec, 1] = x2
        xs[n_rec, 2] = x3; xs[n_rec, 3] = x4
        values[n_rec] = _toy_value(x1, x2, x3, x4)
        _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
        gnorms[n_rec] = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        n_rec += 1

    return (ts_arr[:n_rec], xs_arr[:n_rec], values_arr[:n_rec],
            gnorms_arr[:n_rec], status, fail_step)


def quad_run(int alg, double[:, ::1] a, double[::1] x0, double eta, double rho,
             double[::1] fallback, long n_steps, long record_every):
    cdef int d = x0.shape[0]
    cdef long cap = _records_capacity(n_steps, record_every)

    ts_arr = np.empty(cap, dtype=np.int64)
    xs_arr = np.empty((cap, d), dtype=np.float64)
    values_arr = np.empty(cap, dtype=np.float64)
    gnorms_arr = np.empty(cap, dtype=np.float64)
    cdef long long[::1] ts = ts_arr
    cdef double[:, ::1] xs = xs_arr
    cdef double[::1] values = values_arr
    cdef double[::1] gnorms = gnorms_arr

    work = np.empty((4, d), dtype=np.float64)
    cdef double[:, ::1] w = work
    # w rows: 0 = x, 1 = g, 2 = y/p scratch, 3 = pre-step copy

    cdef long n_rec = 0, last_recorded = 0, fail_step = -1, t
    cdef int status = 0, i, j, ok
    cdef double s, gnorm, xnorm, val

    for i in range(d):
        w[0, i] = x0[i]

    # record t = 0
    ts[n_rec] = 0
    val = 0.0
    gnorm = 0.0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += a[i, j] * w[0, j]
        w[1, i] = s
        xs[n_rec, i] = w[0, i]
        val += w[0, i] * s
        gnorm += s * s
    values[n_rec] = 0.5 * val
    gnorms[n_rec] = sqrt(gnorm)
    n_rec += 1

    for t in range(n_steps):
        for i in range(d):
            w[3, i] = w[0, i]
        gnorm = 0.0
        xnorm = 0.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += a[i, j] * w[0, j]
            w[1, i] = s
            gnorm += s * s
            xnorm += w[0, i] * w[0, i]
        gnorm = sqrt(gnorm)
        xnorm = sqrt(xnorm)

        if alg == 0:  # gd
            for i in range(d):
                w[0, i] -= eta * w[1, i]
        else:  # sam
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                for i in range(d):
                    w[2, i] = w[0, i] + rho * fallback[i]
            else:
                for i in range(d):
                    w[2, i] = w[0, i] + rho * w[1, i] / gnorm
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += a[i, j] * w[2, j]
                w[1, i] = s
            for i in range(d):
                w[0, i] -= eta * w[1, i]

        ok = 1
        for i in range(d):
            if not isfinite(w[0, i]):
                ok = 0
                break
        if not ok:
            status = 1
            fail_step = t
            for i in range(d):
                w[0, i] = w[3, i]
            break
        if (t + 1) % record_every == 0 and t + 1 != n_steps:
            ts[n_rec] = t + 1
            val = 0.0
            gnorm = 0.0
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += a[i, j] * w[0, j]
                xs[n_rec, i] = w[0, i]
                val += w[0, i] * s
                gnorm += s * s
            values[n_rec] = 0.5 * val
            gnorms[n_rec] = sqrt(gnorm)
            n_rec += 1
            last_recorded = t + 1

    if status != 0:
        if fail_step != last_recorded and fail_step > 0:
            ts[n_rec] = fail_step
            val = 0.0
            gnorm = 0.0
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += a[i, j] * w[0, j]
                xs[n_rec, i] = w[0, i]
                val += w[0, i] * s
                gnorm += s * s
            values[n_rec] = 0.5 * val
            gnorms[n_rec] = sqrt(gnorm)
            n_rec += 1
    elif n_steps > 0:
        ts[n_rec] = n_steps
        val = 0.0
        gnorm = 0.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += a[i, j] * w[0, j]
            xs[n_rec, i] = w[0, i]
            val += w[0, i] * s
            gnorm += s * s
        values[n_rec] = 0.5 * val
        gnorms[n_rec] = sqrt(gnorm)
        n_rec += 1

    return (ts_arr[:n_rec], xs_arr[:n_rec], values_arr[:n_rec],
            gnorms_arr[:n_rec], status, fail_step)


def toy4d_phi(double[::1] x0, double tol, long max_steps):
    cdef double x1 = x0[0], x2 = x0[1], x3 = x0[2], x4 = x0[3]
    cdef double g1, g2, g3, g4, gnorm
    _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
    gnorm = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
    if gnorm <= tol:
        return np.array([x1, x2, x3, x4]), gnorm, 0

    cdef double f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    cdef double f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    cdef double h11 = 2.0 * x3 * x3 + 8.0 * x4 * x4
    cdef double h22 = 12.0 * x3 * x3 + 2.0 * x4 * x4
    cdef double h33 = 2.0 * f1
    cdef double h44 = 2.0 * f2
    cdef double h13 = fabs(4.0 * x1 * x3)
    cdef double h14 = fabs(-16.0 * (1.0 - x1) * x4)
    cdef double h23 = fabs(24.0 * x2 * x3)
    cdef double h24 = fabs(-4.0 * (1.0 - x2) * x4)
    cdef double radius = h11 + h13 + h14
    cdef double r2 = h22 + h23 + h24
    cdef double r3 = h13 + h23 + h33
    cdef double r4 = h14 + h24 + h44
    if r2 > radius:
        radius = r2
    if r3 > radius:
        radius = r3
    if r4 > radius:
        radius = r4
    cdef double dt_cap = 1.0 / radius if radius > 0.0 else 1.0
    cdef double dt = dt_cap / 8.0
    cdef double val = _toy_value(x1, x2, x3, x4)
    cdef double val_new, n1, n2, n3, n4
    cdef double k11, k12, k13, k14, k21, k22, k23, k24
    cdef double k31, k32, k33, k34, k41, k42, k43, k44
    cdef long step

    for step in range(max_steps):
        _toy_grad(x1, x2, x3, x4, &k11, &k12, &k13, &k14)
        _toy_grad(x1 - 0.5 * dt * k11, x2 - 0.5 * dt * k12,
                  x3 - 0.5 * dt * k13, x4 - 0.5 * dt * k14,
                  &k21, &k22, &k23, &k24)
        _toy_grad(x1 - 0.5 * dt * k21, x2 - 0.5 * dt * k22,
                  x3 - 0.5 * dt * k23, x4 - 0.5 * dt * k24,
                  &k31, &k32, &k33, &k34)
        _toy_grad(x1 - dt * k31, x2 - dt * k32, x3 - dt * k33, x4 - dt * k34,
                  &k41, &k42, &k43, &k44)
        n1 = x1 - (dt / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        n2 = x2 - (dt / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        n3 = x3 - (dt / 6.0) * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        n4 = x4 - (dt / 6.0) * (k14 + 2.0 * k24 + 2.0 * k34 + k44)
        val_new = _toy_value(n1, n2, n3, n4)
        if not isfinite(val_new) or val_new > val + 1e-12 * (1.0 + fabs(val)):
            dt *= 0.5
            if dt < 1e-14 * dt_cap:
                return np.array([x1, x2, x3, x4]), gnorm, 4
            continue
        x1 = n1; x2 = n2; x3 = n3; x4 = n4
        val = val_new
        _toy_grad(x1, x2, x3, x4, &g1, &g2, &g3, &g4)
        gnorm = sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        if gnorm <= tol:
            return np.array([x1, x2, x3, x4]), gnorm, 0
        dt = dt * 1.25
        if dt > dt_cap:
            dt = dt_cap
    return np.array([x1, x2, x3, x4]), gnorm, 3
