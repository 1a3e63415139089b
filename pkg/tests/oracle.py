"""Shared independent reference computations for the test suite."""
import numpy as np

from twistcar.dynamics import propagate, rhs_dimensional
from twistcar.integrator import IntegratorConfig, integrate
from twistcar.model import PhysicalParams, nondimensionalize

TIGHT = IntegratorConfig(rtol=1e-12, atol=1e-14)


def random_draw(rng):
    """Random physical parameters, frequency and initial dimensionless state."""
    p = PhysicalParams(
        l1=rng.uniform(0.3, 1.0), l2=rng.uniform(0.1, 0.5), d1=rng.uniform(0.0, 0.2),
        d2=0.1, s=rng.uniform(0.1, 0.4), m_r=rng.uniform(10, 60), I_r=rng.uniform(0.05, 0.4),
        c=rng.uniform(5, 20), A=rng.uniform(0.1, 1.0))
    Omega = rng.uniform(0.8, 2.5)
    z0 = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.05, 0.05)])
    return p, Omega, z0


def oracle_deviation(p, Omega, z0, periods=10, n_samples=400):
    """Sup-norm gap between the rescaled dimensional and the dimensionless flows."""
    dp = nondimensionalize(p, Omega)
    tc, l1 = dp.t_c, p.l1
    T = periods * dp.period
    # production path (active flow kernel) against the SI vector field
    dimless = propagate(z0, 0.0, T, dp, TIGHT, dense=True)
    s0 = np.array([z0[2] * l1 / tc, z0[1] / tc, z0[0]])
    dim = integrate(lambda t, s: rhs_dimensional(t, s, p, Omega), (0.0, T * tc), s0, TIGHT)
    t = np.linspace(0.0, T, n_samples)
    a = dimless(t)
    b = dim(t * tc)
    b_scaled = np.column_stack([b[:, 2], b[:, 1] * tc, b[:, 0] * tc / l1])
    return float(np.max(np.abs(a - b_scaled)))


def galerkin(signal_fn, omega, n=4096):
    """Mean and first/second harmonic projections of a periodic signal."""
    x = 2 * np.pi * np.arange(n) / n
    r = signal_fn(x / omega)
    return {"mean": np.mean(r), "s1": np.mean(r * np.sin(x)), "c1": np.mean(r * np.cos(x)),
            "s2": np.mean(r * np.sin(2 * x)), "c2": np.mean(r * np.cos(2 * x))}
