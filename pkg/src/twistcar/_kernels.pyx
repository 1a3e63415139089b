# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled flow of the reduced Twistcar system.

Same Dormand-Prince 5(4) pair, error norm and PI controller as
``twistcar.integrator.dopri5``, specialized to the three-state reduced system.

Modes
-----
0 : state only, y = (phi, sigma, v)
1 : state plus pose, y = (phi, sigma, v, x, y, theta)
2 : state plus 3x3 fundamental matrix (row-major), 12 components
"""
import numpy as np
from libc.math cimport sin, cos, fabs, sqrt, pow, isfinite, M_PI

cdef enum:
    MAXD = 12

cdef double C2 = 0.2, C3 = 0.3, C4 = 0.8, C5 = 8.0 / 9.0
cdef double A21 = 0.2
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0
cdef double D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0
cdef double D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0
cdef double D7 = 69997945.0 / 29380423.0

cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0
cdef double BETA_PI = 0.04
cdef double EXPO1 = 0.2 - 0.75 * 0.04

ctypedef struct Params:
    double alpha1
    double beta
    double delta
    double eta
    double A
    double omega
    double two_dd   # 2 (delta^2 + eta)


cdef inline void rhs(double t, const double* y, double* f, int mode, const Params* p) noexcept nogil:
    cdef double phi = y[0], sg = y[1], v = y[2]
    cdef double sp = sin(phi), cp = cos(phi)
    cdef double s2 = 2.0 * sp * cp
    cdef double c2 = cp * cp - sp * sp
    cdef double psdd = -p.A * p.omega * p.omega * sin(p.omega * t)
    cdef double j[3][3]
    cdef int i, k
    f[0] = (-v * sp + (-p.beta + cp) * sg) / p.beta
    f[1] = -(2.0 * p.eta * psdd + v * s2 + (p.alpha1 - c2 + 2.0 * p.delta * v) * sg) / p.two_dd
    f[2] = p.delta * sg * sg - 0.5 * sg * s2 - 0.5 * (5.0 + c2) * v
    if mode == 1:
        f[3] = v * cos(y[5])
        f[4] = v * sin(y[5])
        f[5] = sg
    elif mode == 2:
        j[0][0] = (-v * cp - sg * sp) / p.beta
        j[0][1] = (-p.beta + cp) / p.beta
        j[0][2] = -sp / p.beta
        j[1][0] = -(2.0 * v * c2 + 2.0 * s2 * sg) / p.two_dd
        j[1][1] = -(p.alpha1 - c2 + 2.0 * p.delta * v) / p.two_dd
        j[1][2] = -(s2 + 2.0 * p.delta * sg) / p.two_dd
        j[2][0] = -sg * c2 + s2 * v
        j[2][1] = 2.0 * p.delta * sg - 0.5 * s2
        j[2][2] = -0.5 * (5.0 + c2)
        for i in range(3):
            for k in range(3):
                f[3 + 3 * i + k] = (j[i][0] * y[3 + k] + j[i][1] * y[6 + k]
                                    + j[i][2] * y[9 + k])


cdef inline double rms(const double* e, const double* sk, int d) noexcept nogil:
    cdef double acc = 0.0, r
    cdef int i
    for i in range(d):
        r = e[i] / sk[i]
        acc += r * r
    return sqrt(acc / d)


cdef double initial_step(double t0, const double* y0, const double* f0, int d, int mode,
                         const Params* p, double rtol, double atol, double hmax,
                         double span) noexcept nogil:
    cdef double sk[MAXD]
    cdef double y1[MAXD]
    cdef double f1[MAXD]
    cdef double df[MAXD]
    cdef double d0, d1, d2, dm, h0, h1
    cdef int i
    for i in range(d):
        sk[i] = atol + rtol * fabs(y0[i])
    d0 = rms(y0, sk, d)
    d1 = rms(f0, sk, d)
    if d0 > 1e-10 and d1 > 1e-10:
        h0 = 0.01 * d0 / d1
    else:
        h0 = 1e-6
    h0 = min(h0, min(hmax, span))
    for i in range(d):
        y1[i] = y0[i] + h0 * f0[i]
    rhs(t0 + h0, y1, f1, mode, p)
    for i in range(d):
        df[i] = f1[i] - f0[i]
    d2 = rms(df, sk, d) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / dm, 0.2)
    return min(min(100.0 * h0, h1), min(hmax, span))


def flow(z0, double t0, double t1, params, double rtol=1e-10, double atol=1e-12,
         double h0=0.0, double hmax=0.0, long max_steps=10000000, int mode=0,
         bint dense=False):
    """Integrate from ``t0`` to ``t1``.

    Parameters
    ----------
    z0 : sequence of float
        Initial vector, length 3, 6 or 12 depending on ``mode``.
    params : tuple
        (alpha, beta, delta, eta, A, omega).

    Returns
    -------
    tuple
        ``(status, t, y, nfev, nrej, ts, ys, rcont)`` as in
        ``twistcar.integrator.dopri5``.
    """
    cdef int d = 3 if mode == 0 else (6 if mode == 1 else 12)
    cdef Params p
    cdef double alpha
    alpha, p.beta, p.delta, p.eta, p.A, p.omega = params
    p.alpha1 = 1.0 + 4.0 * alpha * alpha
    p.two_dd = 2.0 * (p.delta * p.delta + p.eta)

    cdef double y[MAXD]
    cdef double yn[MAXD]
    cdef double ys_[MAXD]
    cdef double k1[MAXD]
    cdef double k2[MAXD]
    cdef double k3[MAXD]
    cdef double k4[MAXD]
    cdef double k5[MAXD]
    cdef double k6[MAXD]
    cdef double k7[MAXD]
    cdef double ev[MAXD]
    cdef double sk[MAXD]
    cdef int i
    if len(z0) != d:
        raise ValueError(f"mode {mode} expects a state of length {d}")
    for i in range(d):
        y[i] = float(z0[i])

    cdef double t = t0
    cdef double span = t1 - t0
    if span <= 0:
        raise ValueError("t1 must exceed t0")
    if hmax <= 0 or hmax > span:
        hmax = span

    # growable dense buffers
    cdef Py_ssize_t cap = 0, n = 0
    cdef double[::1] ts_v
    cdef double[:, ::1] ys_v
    cdef double[:, :, ::1] rc_v
    ts_arr = ys_arr = rc_arr = None
    if dense:
        cap = 256
        ts_arr = np.empty(cap + 1)
        ys_arr = np.empty((cap + 1, d))
        rc_arr = np.empty((cap, 5, d))
        ts_v = ts_arr
        ys_v = ys_arr
        rc_v = rc_arr
        ts_v[0] = t
        for i in range(d):
            ys_v[0, i] = y[i]

    cdef long nfev = 1, nsteps = 0, nrej = 0
    cdef int status = 0
    cdef double h, hnew, err, fac, fac11, facold = 1e-4, tnew, ydiff, bspl
    cdef bint last, last_rejected = False, ok

    rhs(t, y, k1, mode, &p)
    ok = True
    for i in range(d):
        if not (isfinite(y[i]) and isfinite(k1[i])):
            ok = False
    if not ok:
        return 2, t, np.array([y[i] for i in range(d)]), nfev, 0, None, None, None
    if h0 > 0:
        h = min(h0, hmax)
    else:
        h = initial_step(t, y, k1, d, mode, &p, rtol, atol, hmax, span)
        nfev += 1

    while True:
        if nsteps >= max_steps:
            status = 1
            break
        if h < 1e-14 * max(1.0, fabs(t)):
            status = 4
            break
        last = False
        if t + 1.01 * h >= t1:
            h = t1 - t
            last = True
        nsteps += 1
        for i in range(d):
            ys_[i] = y[i] + h * A21 * k1[i]
        rhs(t + C2 * h, ys_, k2, mode, &p)
        for i in range(d):
            ys_[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(t + C3 * h, ys_, k3, mode, &p)
        for i in range(d):
            ys_[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(t + C4 * h, ys_, k4, mode, &p)
        for i in range(d):
            ys_[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(t + C5 * h, ys_, k5, mode, &p)
        for i in range(d):
            ys_[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                 + A64 * k4[i] + A65 * k5[i])
        rhs(t + h, ys_, k6, mode, &p)
        for i in range(d):
            yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i]
                                + A75 * k5[i] + A76 * k6[i])
        tnew = t1 if last else t + h
        rhs(tnew, yn, k7, mode, &p)
        nfev += 6
        for i in range(d):
            ev[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i])
            sk[i] = atol + rtol * max(fabs(y[i]), fabs(yn[i]))
        err = rms(ev, sk, d)
        if not isfinite(err):
            if h < 1e-10 * max(1.0, fabs(t)):
                status = 2
                break
            h *= FAC_MIN
            last_rejected = True
            nrej += 1
            continue
        fac11 = pow(err, EXPO1)
        fac = fac11 / pow(facold, BETA_PI)
        fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
        hnew = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            if dense:
                if n == cap:
                    cap *= 2
                    ts_arr = np.resize(ts_arr, cap + 1)
                    ys_arr = np.resize(ys_arr, (cap + 1, d))
                    rc_arr = np.resize(rc_arr, (cap, 5, d))
                    ts_v = ts_arr
                    ys_v = ys_arr
                    rc_v = rc_arr
                for i in range(d):
                    ydiff = yn[i] - y[i]
                    bspl = h * k1[i] - ydiff
                    rc_v[n, 0, i] = y[i]
                    rc_v[n, 1, i] = ydiff
                    rc_v[n, 2, i] = bspl
                    rc_v[n, 3, i] = ydiff - h * k7[i] - bspl
                    rc_v[n, 4, i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i]
                                         + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                    ys_v[n + 1, i] = yn[i]
                ts_v[n + 1] = tnew
                n += 1
            t = tnew
            ok = True
            for i in range(d):
                y[i] = yn[i]
                k1[i] = k7[i]
                if not isfinite(y[i]):
                    ok = False
            if not ok:
                status = 2
                break
            if fabs(y[0]) >= M_PI:
                status = 3
                break
            if last:
                break
            hnew = min(hnew, hmax)
            if last_rejected:
                hnew = min(hnew, h)
            last_rejected = False
            h = hnew
        else:
            hnew = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
            last_rejected = True
            nrej += 1
            h = hnew

    yout = np.array([y[i] for i in range(d)])
    if dense:
        return (status, t, yout, nfev, nrej, ts_arr[:n + 1].copy(),
                ys_arr[:n + 1].copy(), rc_arr[:n].copy())
    return status, t, yout, nfev, nrej, None, None, None
