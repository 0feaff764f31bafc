"""Pure-Python specializations of the hot loops.

These mirror the compiled kernels in ``_fastloops.pyx`` operation for
operation (same expressions, same evaluation order), so the two backends
produce bit-identical trajectories; this module is what runs when the
extension is not built.

All functions return plain tuples of NumPy arrays plus a status code:
status 0 = completed, 1 = non-finite iterate, 2 = zero gradient where a
direction was required, and for the descent map 3 = step budget
exhausted, 4 = step size collapsed.
"""

import math

import numpy as np

from ._rng import component_index

BACKEND_NAME = "python"

ALG_GD = 0
ALG_SAM = 1
ALG_ONE_SAM = 2
ALG_ASC_GD = 3

_ZERO_RTOL = 1e-14


def _toy_value(x1, x2, x3, x4):
    f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    return f1 * x3 * x3 + f2 * x4 * x4


def _toy_grad(x1, x2, x3, x4):
    f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    g1 = 2.0 * x1 * x3 * x3 - 8.0 * (1.0 - x1) * x4 * x4
    g2 = 12.0 * x2 * x3 * x3 - 2.0 * (1.0 - x2) * x4 * x4
    g3 = 2.0 * f1 * x3
    g4 = 2.0 * f2 * x4
    return g1, g2, g3, g4


def _toy_component_grad(k, x1, x2, x3, x4):
    if k == 1:
        f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
        return 4.0 * x1 * x3 * x3, 24.0 * x2 * x3 * x3, 4.0 * f1 * x3, 0.0
    f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    return (
        -16.0 * (1.0 - x1) * x4 * x4,
        -4.0 * (1.0 - x2) * x4 * x4,
        0.0,
        4.0 * f2 * x4,
    )


def _finite4(x1, x2, x3, x4):
    return (
        math.isfinite(x1)
        and math.isfinite(x2)
        and math.isfinite(x3)
        and math.isfinite(x4)
    )


def _n_records(n_steps, record_every):
    n = 1
    if n_steps > 0:
        n += (n_steps - 1) // record_every + 1
    return n


def toy4d_run(alg, x0, eta, rho, fallback, seed, n_steps, record_every):
    """Shared inner loop for the 4D toy; returns
    (ts, xs, values, gnorms, status, fail_step)."""
    x1, x2, x3, x4 = float(x0[0]), float(x0[1]), float(x0[2]), float(x0[3])
    fb1, fb2, fb3, fb4 = (
        float(fallback[0]),
        float(fallback[1]),
        float(fallback[2]),
        float(fallback[3]),
    )
    cap = _n_records(n_steps, record_every)
    ts = np.empty(cap, dtype=np.int64)
    xs = np.empty((cap, 4))
    values = np.empty(cap)
    gnorms = np.empty(cap)
    n_rec = 0
    status = 0
    fail_step = -1

    def record(t):
        nonlocal n_rec
        ts[n_rec] = t
        xs[n_rec, 0] = x1
        xs[n_rec, 1] = x2
        xs[n_rec, 2] = x3
        xs[n_rec, 3] = x4
        values[n_rec] = _toy_value(x1, x2, x3, x4)
        g1, g2, g3, g4 = _toy_grad(x1, x2, x3, x4)
        gnorms[n_rec] = math.sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        n_rec += 1

    record(0)
    last_recorded = 0
    for t in range(n_steps):
        p1_, p2_, p3_, p4_ = x1, x2, x3, x4  # pre-step iterate
        if alg == ALG_ONE_SAM:
            k = component_index(seed, t, 2)
            g1, g2, g3, g4 = _toy_component_grad(k, x1, x2, x3, x4)
        else:
            g1, g2, g3, g4 = _toy_grad(x1, x2, x3, x4)
        gnorm = math.sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        xnorm = math.sqrt(x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4)

        if alg == ALG_GD:
            x1 -= eta * g1
            x2 -= eta * g2
            x3 -= eta * g3
            x4 -= eta * g4
        elif alg == ALG_SAM or alg == ALG_ONE_SAM:
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                d1, d2, d3, d4 = fb1, fb2, fb3, fb4
            else:
                d1, d2, d3, d4 = g1 / gnorm, g2 / gnorm, g3 / gnorm, g4 / gnorm
            y1 = x1 + rho * d1
            y2 = x2 + rho * d2
            y3 = x3 + rho * d3
            y4 = x4 + rho * d4
            if alg == ALG_ONE_SAM:
                p1, p2, p3, p4 = _toy_component_grad(k, y1, y2, y3, y4)
            else:
                p1, p2, p3, p4 = _toy_grad(y1, y2, y3, y4)
            x1 -= eta * p1
            x2 -= eta * p2
            x3 -= eta * p3
            x4 -= eta * p4
        else:  # ALG_ASC_GD
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                status = 2
                fail_step = t
                break
            d1, d2, d3, d4 = g1 / gnorm, g2 / gnorm, g3 / gnorm, g4 / gnorm
            p1, p2, p3, p4 = _toy_grad(
                x1 + rho * d1, x2 + rho * d2, x3 + rho * d3, x4 + rho * d4
            )
            f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
            f2 = (
                4.0 * (1.0 - x1) * (1.0 - x1)
                + (1.0 - x2) * (1.0 - x2)
                + 1.0
            )
            h11 = 2.0 * x3 * x3 + 8.0 * x4 * x4
            h22 = 12.0 * x3 * x3 + 2.0 * x4 * x4
            h33 = 2.0 * f1
            h44 = 2.0 * f2
            h13 = 4.0 * x1 * x3
            h14 = -16.0 * (1.0 - x1) * x4
            h23 = 24.0 * x2 * x3
            h24 = -4.0 * (1.0 - x2) * x4
            # H @ gp and H @ g (H symmetric, zero entries omitted)
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

        if not _finite4(x1, x2, x3, x4):
            status = 1
            fail_step = t
            x1, x2, x3, x4 = p1_, p2_, p3_, p4_  # keep the last finite iterate
            break
        if (t + 1) % record_every == 0 and t + 1 != n_steps:
            record(t + 1)
            last_recorded = t + 1

    if status != 0:
        if fail_step != last_recorded and fail_step > 0:
            record(fail_step)
    elif n_steps > 0:
        record(n_steps)

    return ts[:n_rec], xs[:n_rec], values[:n_rec], gnorms[:n_rec], status, fail_step


def quad_run(alg, a, x0, eta, rho, fallback, n_steps, record_every):
    """gd/sam inner loop for the quadratic loss (any modest dimension)."""
    d = len(x0)
    a = np.asarray(a, dtype=float)
    x = [float(v) for v in x0]
    fb = [float(v) for v in fallback]
    rows = [[float(a[i, j]) for j in range(d)] for i in range(d)]

    cap = _n_records(n_steps, record_every)
    ts = np.empty(cap, dtype=np.int64)
    xs = np.empty((cap, d))
    values = np.empty(cap)
    gnorms = np.empty(cap)
    n_rec = 0
    status = 0
    fail_step = -1

    def matvec(v):
        out = [0.0] * d
        for i in range(d):
            s = 0.0
            row = rows[i]
            for j in range(d):
                s += row[j] * v[j]
            out[i] = s
        return out

    def record(t):
        nonlocal n_rec
        ts[n_rec] = t
        g = matvec(x)
        val = 0.0
        gn = 0.0
        for i in range(d):
            xs[n_rec, i] = x[i]
            val += x[i] * g[i]
            gn += g[i] * g[i]
        values[n_rec] = 0.5 * val
        gnorms[n_rec] = math.sqrt(gn)
        n_rec += 1

    record(0)
    last_recorded = 0
    for t in range(n_steps):
        prev = list(x)
        g = matvec(x)
        gnorm = 0.0
        xnorm = 0.0
        for i in range(d):
            gnorm += g[i] * g[i]
            xnorm += x[i] * x[i]
        gnorm = math.sqrt(gnorm)
        xnorm = math.sqrt(xnorm)

        if alg == ALG_GD:
            for i in range(d):
                x[i] -= eta * g[i]
        else:  # ALG_SAM
            if gnorm <= _ZERO_RTOL * (1.0 + xnorm):
                y = [x[i] + rho * fb[i] for i in range(d)]
            else:
                y = [x[i] + rho * g[i] / gnorm for i in range(d)]
            p = matvec(y)
            for i in range(d):
                x[i] -= eta * p[i]

        ok = True
        for i in range(d):
            if not math.isfinite(x[i]):
                ok = False
                break
        if not ok:
            status = 1
            fail_step = t
            x = prev
            break
        if (t + 1) % record_every == 0 and t + 1 != n_steps:
            record(t + 1)
            last_recorded = t + 1

    if status != 0:
        if fail_step != last_recorded and fail_step > 0:
            record(fail_step)
    elif n_steps > 0:
        record(n_steps)

    return ts[:n_rec], xs[:n_rec], values[:n_rec], gnorms[:n_rec], status, fail_step


def toy4d_phi(x0, tol, max_steps):
    """RK4 gradient descent to the zero-loss plane of the 4D toy.

    Same step policy as the generic descent: step capped by the inverse
    Gershgorin radius of the initial Hessian, halved when the loss fails
    to decrease, grown by 1.25x after accepted steps.  Returns
    (p, gnorm, status).
    """
    x1, x2, x3, x4 = float(x0[0]), float(x0[1]), float(x0[2]), float(x0[3])
    g1, g2, g3, g4 = _toy_grad(x1, x2, x3, x4)
    gnorm = math.sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
    if gnorm <= tol:
        return np.array([x1, x2, x3, x4]), gnorm, 0

    f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
    f2 = 4.0 * (1.0 - x1) * (1.0 - x1) + (1.0 - x2) * (1.0 - x2) + 1.0
    h11 = 2.0 * x3 * x3 + 8.0 * x4 * x4
    h22 = 12.0 * x3 * x3 + 2.0 * x4 * x4
    h33 = 2.0 * f1
    h44 = 2.0 * f2
    h13 = abs(4.0 * x1 * x3)
    h14 = abs(-16.0 * (1.0 - x1) * x4)
    h23 = abs(24.0 * x2 * x3)
    h24 = abs(-4.0 * (1.0 - x2) * x4)
    radius = h11 + h13 + h14
    r2 = h22 + h23 + h24
    if r2 > radius:
        radius = r2
    r3 = h13 + h23 + h33
    if r3 > radius:
        radius = r3
    r4 = h14 + h24 + h44
    if r4 > radius:
        radius = r4
    dt_cap = 1.0 / radius if radius > 0.0 else 1.0
    dt = dt_cap / 8.0
    val = _toy_value(x1, x2, x3, x4)

    for _ in range(max_steps):
        k11, k12, k13, k14 = _toy_grad(x1, x2, x3, x4)
        k21, k22, k23, k24 = _toy_grad(
            x1 - 0.5 * dt * k11,
            x2 - 0.5 * dt * k12,
            x3 - 0.5 * dt * k13,
            x4 - 0.5 * dt * k14,
        )
        k31, k32, k33, k34 = _toy_grad(
            x1 - 0.5 * dt * k21,
            x2 - 0.5 * dt * k22,
            x3 - 0.5 * dt * k23,
            x4 - 0.5 * dt * k24,
        )
        k41, k42, k43, k44 = _toy_grad(
            x1 - dt * k31, x2 - dt * k32, x3 - dt * k33, x4 - dt * k34
        )
        n1 = x1 - (dt / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        n2 = x2 - (dt / 6.0) * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        n3 = x3 - (dt / 6.0) * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        n4 = x4 - (dt / 6.0) * (k14 + 2.0 * k24 + 2.0 * k34 + k44)
        val_new = _toy_value(n1, n2, n3, n4)
        if not math.isfinite(val_new) or val_new > val + 1e-12 * (1.0 + abs(val)):
            dt *= 0.5
            if dt < 1e-14 * dt_cap:
                return np.array([x1, x2, x3, x4]), gnorm, 4
            continue
        x1, x2, x3, x4 = n1, n2, n3, n4
        val = val_new
        g1, g2, g3, g4 = _toy_grad(x1, x2, x3, x4)
        gnorm = math.sqrt(g1 * g1 + g2 * g2 + g3 * g3 + g4 * g4)
        if gnorm <= tol:
            return np.array([x1, x2, x3, x4]), gnorm, 0
        dt = dt * 1.25
        if dt > dt_cap:
            dt = dt_cap
    return np.array([x1, x2, x3, x4]), gnorm, 3
