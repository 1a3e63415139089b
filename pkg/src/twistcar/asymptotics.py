"""Small-amplitude perturbation results for the symmetric periodic orbit.

With ``eps = A eta omega^2`` the symmetric steady state is, to leading order,

    phi   = eps (a1 sin wt + a2 cos wt)
    sigma = eps (b1 sin wt + b2 cos wt)
    v     = eps^2 (c0 + c1 sin 2wt + c2 cos 2wt)

so the mean forward speed is ``eps^2 c0``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .model import DimlessParams

__all__ = [
    "PerturbationCoeffs",
    "perturbation_coefficients",
    "mean_speed_asymptotic",
    "optimal_delta",
    "first_order_signals",
    "write_asymptotics_csv",
]


@dataclass(frozen=True)
class PerturbationCoeffs:
    q: float
    b1: float
    b2: float
    a1: float
    a2: float
    c0: float
    c1: float
    c2: float
    q1: float
    q2: float
    epsilon: float


def perturbation_coefficients(dp: DimlessParams) -> PerturbationCoeffs:
    """First-order harmonics of phi and sigma, second-order harmonics of v."""
    al, be, de, w = dp.alpha, dp.beta, dp.delta, dp.omega
    dd = de ** 2 + dp.eta
    q = 2 * al ** 2 / dd
    den = dd * (q * q + w * w)
    b1 = q / den
    b2 = -w / den
    a1 = (be - 1) / (be * den)
    a2 = q * (be - 1) / (be * w * den)
    c0 = (de * b1 ** 2 - a1 * b1 + de * b2 ** 2 - a2 * b2) / 6
    q1 = de * b1 * b2 - 0.5 * (a2 * b1 + a1 * b2)
    q2 = 0.5 * (de * b2 ** 2 - a2 * b2 + a1 * b1 - de * b1 ** 2)
    c1 = (3 * q1 + 2 * q2 * w) / (9 + 4 * w * w)
    c2 = (3 * q2 - 2 * q1 * w) / (9 + 4 * w * w)
    return PerturbationCoeffs(q, b1, b2, a1, a2, c0, c1, c2, q1, q2, dp.epsilon)


def mean_speed_asymptotic(dp: DimlessParams) -> float:
    """Leading-order mean speed (dimensionless)."""
    al, de, w = dp.alpha, dp.delta, dp.omega
    dd = de ** 2 + dp.eta
    return dp.A ** 2 * dp.eta ** 2 * w ** 4 * de / (6 * (4 * al ** 4 + dd ** 2 * w ** 2))


def optimal_delta(dp: DimlessParams):
    """COM offset maximizing the leading-order mean speed.

    Returns
    -------
    (delta_opt, v_bar_max) : tuple of float
        Both NaN when no interior optimum exists (non-positive radicand).
    """
    al, eta, w = dp.alpha, dp.eta, dp.omega
    rad = math.sqrt(12 * al ** 4 + 4 * eta ** 2 * w ** 2) / (3 * w) - eta / 3
    if rad <= 0:
        return math.nan, math.nan
    d_opt = math.sqrt(rad)
    return d_opt, mean_speed_asymptotic(dp.replace(delta=d_opt))


def first_order_signals(dp: DimlessParams, t):
    """Reconstructed (phi, sigma, v) at times ``t``, shape (len(t), 3)."""
    k = perturbation_coefficients(dp)
    t = np.asarray(t, dtype=float)
    s, c = np.sin(dp.omega * t), np.cos(dp.omega * t)
    s2, c2 = np.sin(2 * dp.omega * t), np.cos(2 * dp.omega * t)
    eps = k.epsilon
    return np.stack([
        eps * (k.a1 * s + k.a2 * c),
        eps * (k.b1 * s + k.b2 * c),
        eps ** 2 * (k.c0 + k.c1 * s2 + k.c2 * c2),
    ], axis=-1)


def write_asymptotics_csv(fh, rows):
    """Write ``omega,delta,v_bar_asym,delta_opt,v_bar_max`` rows.

    ``rows`` is an iterable of DimlessParams.
    """
    buf = io.StringIO()
    buf.write("omega,delta,v_bar_asym,delta_opt,v_bar_max\n")
    for dp in rows:
        d_opt, v_max = optimal_delta(dp)
        vals = (dp.omega, dp.delta, mean_speed_asymptotic(dp), d_opt, v_max)
        buf.write(",".join(repr(float(x)) for x in vals) + "\n")
    fh.write(buf.getvalue())
