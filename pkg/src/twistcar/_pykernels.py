"""Pure-Python fallback for :mod:`twistcar._kernels`.

Same call signature and return layout as the compiled ``flow``; the stepping
loop is :func:`twistcar.integrator.dopri5`.
"""
import math

import numpy as np

from .integrator import dopri5

_DIMS = {0: 3, 1: 6, 2: 12}


def _make_rhs(params, mode):
    alpha, beta, delta, eta, A, omega = params
    alpha1 = 1.0 + 4.0 * alpha * alpha
    two_dd = 2.0 * (delta * delta + eta)
    amp = -A * omega * omega

    def base(t, phi, sg, v):
        sp, cp = math.sin(phi), math.cos(phi)
        s2 = 2.0 * sp * cp
        c2 = cp * cp - sp * sp
        psdd = amp * math.sin(omega * t)
        f0 = (-v * sp + (-beta + cp) * sg) / beta
        f1 = -(2.0 * eta * psdd + v * s2 + (alpha1 - c2 + 2.0 * delta * v) * sg) / two_dd
        f2 = delta * sg * sg - 0.5 * sg * s2 - 0.5 * (5.0 + c2) * v
        return f0, f1, f2, sp, cp, s2, c2

    if mode == 0:
        def rhs(t, y):
            return np.array(base(t, y[0], y[1], y[2])[:3])
    elif mode == 1:
        def rhs(t, y):
            v = y[2]
            f0, f1, f2 = base(t, y[0], y[1], v)[:3]
            return np.array([f0, f1, f2, v * math.cos(y[5]), v * math.sin(y[5]), y[1]])
    elif mode == 2:
        def rhs(t, y):
            phi, sg, v = y[0], y[1], y[2]
            f0, f1, f2, sp, cp, s2, c2 = base(t, phi, sg, v)
            jac = np.array([
                [(-v * cp - sg * sp) / beta, (-beta + cp) / beta, -sp / beta],
                [-(2.0 * v * c2 + 2.0 * s2 * sg) / two_dd,
                 -(alpha1 - c2 + 2.0 * delta * v) / two_dd,
                 -(s2 + 2.0 * delta * sg) / two_dd],
                [-sg * c2 + s2 * v, 2.0 * delta * sg - 0.5 * s2, -0.5 * (5.0 + c2)],
            ])
            out = np.empty(12)
            out[:3] = (f0, f1, f2)
            out[3:] = (jac @ y[3:].reshape(3, 3)).ravel()
            return out
    else:
        raise ValueError(f"unknown mode {mode}")
    return rhs


def flow(z0, t0, t1, params, rtol=1e-10, atol=1e-12, h0=0.0, hmax=0.0,
         max_steps=10_000_000, mode=0, dense=False):
    d = _DIMS.get(mode)
    if d is None:
        raise ValueError(f"unknown mode {mode}")
    if len(z0) != d:
        raise ValueError(f"mode {mode} expects a state of length {d}")
    return dopri5(_make_rhs(params, mode), t0, t1, np.asarray(z0, dtype=float),
                  rtol, atol, h0, hmax, max_steps, dense, chart_index=0)
