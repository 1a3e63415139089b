"""Vector fields of the reduced Twistcar model.

Two independent forms are provided:

* :func:`rhs_dimless`, the dimensionless three-state system in
  z = (phi, sigma, v), which is what all analysis runs on;
* :func:`rhs_dimensional`, the SI form assembled from the reduced inertia,
  velocity and dissipation matrices.  It is only used as an oracle.

The rotor angle is prescribed, ``psi = A sin(omega t)``, and always evaluated
analytically.
"""
from __future__ import annotations

import io
import math
from typing import NamedTuple

import numpy as np

from . import kernels
from .integrator import IntegratorConfig, NonFiniteState, Trajectory, raise_for_status
from .model import DimlessParams, PhysicalParams

__all__ = [
    "ActuationSample",
    "ReducedMatrices",
    "actuation",
    "rhs_dimless",
    "jacobian_dimless",
    "reduced_matrices",
    "rhs_dimensional",
    "pose_rhs",
    "required_torque",
    "torque_series",
    "propagate",
    "simulate",
    "write_trajectory_csv",
    "REVERSAL",
]

#: Reversal map R = diag(-1, -1, 1) acting on (phi, sigma, v).
REVERSAL = np.array([-1.0, -1.0, 1.0])


class ActuationSample(NamedTuple):
    psi: float
    psi_dot: float
    psi_ddot: float


def actuation(t, A, omega) -> ActuationSample:
    """Rotor angle ``A sin(omega t)`` and its first two derivatives."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    s, c = math.sin(omega * t), math.cos(omega * t)
    return ActuationSample(A * s, A * omega * c, -A * omega * omega * s)


def _check_finite(z):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise NonFiniteState(f"non-finite state {z!r}")
    return z


def rhs_dimless(t, z, dp: DimlessParams) -> np.ndarray:
    """Time derivative of z = (phi, sigma, v) in units of t_c.

    Parameters
    ----------
    t : float
        Dimensionless time.
    z : array_like, shape (3,)
    dp : DimlessParams

    Returns
    -------
    ndarray, shape (3,)
    """
    phi, sg, v = _check_finite(z)
    psdd = -dp.A * dp.omega ** 2 * math.sin(dp.omega * t)
    s2, c2 = math.sin(2 * phi), math.cos(2 * phi)
    two_dd = 2.0 * (dp.delta ** 2 + dp.eta)
    return np.array([
        (-v * math.sin(phi) + (-dp.beta + math.cos(phi)) * sg) / dp.beta,
        -(2 * dp.eta * psdd + v * s2 + (dp.alpha1 - c2 + 2 * dp.delta * v) * sg) / two_dd,
        dp.delta * sg ** 2 - 0.5 * sg * s2 - 0.5 * (5 + c2) * v,
    ])


def jacobian_dimless(t, z, dp: DimlessParams) -> np.ndarray:
    """d(rhs_dimless)/dz, a 3x3 array (independent of t)."""
    phi, sg, v = _check_finite(z)
    sp, cp = math.sin(phi), math.cos(phi)
    s2, c2 = math.sin(2 * phi), math.cos(2 * phi)
    b, d = dp.beta, dp.delta
    two_dd = 2.0 * (d ** 2 + dp.eta)
    return np.array([
        [(-v * cp - sg * sp) / b, (cp - b) / b, -sp / b],
        [-2 * (v * c2 + sg * s2) / two_dd, -(dp.alpha1 - c2 + 2 * d * v) / two_dd,
         -(s2 + 2 * d * sg) / two_dd],
        [v * s2 - sg * c2, 2 * d * sg - 0.5 * s2, -0.5 * (5 + c2)],
    ])


class ReducedMatrices(NamedTuple):
    """Reduced inertia matrix and force vectors in SI units.

    Rows and columns are ordered as the reduced velocities
    (v, theta_dot, psi_dot).
    """

    M_r: np.ndarray
    B_r: np.ndarray
    D_r: np.ndarray


def reduced_matrices(phi, v, theta_dot, p: PhysicalParams) -> ReducedMatrices:
    """Assemble M_r, B_r and D_r.

    The dissipation cross-coupling uses the symmetric Rayleigh form
    ``(l1/2) sin(2 phi)`` in both rows.
    """
    m, I, d1, l1, s, c = p.m_r, p.I_r, p.d1, p.l1, p.s, p.c
    M = np.array([[m, 0.0, 0.0],
                  [0.0, I + d1 ** 2 * m, I],
                  [0.0, I, I]])
    B = np.array([-d1 * m * theta_dot ** 2, d1 * m * v * theta_dot, 0.0])
    D = c * np.array([
        (2 + math.cos(phi) ** 2) * v + 0.5 * l1 * math.sin(2 * phi) * theta_dot,
        0.5 * l1 * math.sin(2 * phi) * v + (2 * s ** 2 + l1 ** 2 * math.sin(phi) ** 2) * theta_dot,
        0.0,
    ])
    return ReducedMatrices(M, B, D)


def rhs_dimensional(t, state, p: PhysicalParams, Omega) -> np.ndarray:
    """Rates of (v, theta_dot, phi) in SI units at rotor frequency ``Omega``.

    The first two rows of the reduced dynamics are solved for
    (v_dot, theta_ddot) with the prescribed rotor acceleration; the steering
    rate follows from the front-wheel constraint.
    """
    v, th_d, phi = _check_finite(state)
    psdd = actuation(t, p.A, Omega).psi_ddot
    M, B, D = reduced_matrices(phi, v, th_d, p)
    v_dot = -(B[0] + D[0]) / M[0, 0]
    th_dd = -(M[1, 2] * psdd + B[1] + D[1]) / M[1, 1]
    phi_dot = -v * math.sin(phi) / p.l2 + th_d * (p.l1 * math.cos(phi) / p.l2 - 1.0)
    return np.array([v_dot, th_dd, phi_dot])


def pose_rhs(t, pose, z) -> np.ndarray:
    """Planar kinematics ``(x, y, theta)' = (v cos theta, v sin theta, sigma)``."""
    theta = pose[2]
    _, sg, v = z
    return np.array([v * math.cos(theta), v * math.sin(theta), sg])


def required_torque(sigma_dot, psi_ddot, I_r):
    """Rotor torque ``I_r (theta_ddot + psi_ddot)`` from the third reduced row.

    All inputs are dimensional; arrays broadcast.
    """
    return I_r * (np.asarray(sigma_dot) + np.asarray(psi_ddot))


def torque_series(times, states, dp: DimlessParams, p: PhysicalParams):
    """Torque [N m] along a dimensionless trajectory sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    tc2 = dp.t_c ** 2
    sig_dot = np.array([rhs_dimless(t, z[:3], dp)[1] for t, z in zip(times, states)])
    psdd = -dp.A * dp.omega ** 2 * np.sin(dp.omega * times)
    return required_torque(sig_dot / tc2, psdd / tc2, p.I_r)


_MODES = {"state": 0, "pose": 1, "stm": 2}


def propagate(y0, t0, t1, dp: DimlessParams, cfg: IntegratorConfig | None = None,
              mode="state", dense=False):
    """Integrate the reduced system with the active flow kernel.

    Parameters
    ----------
    y0 : array_like
        Length 3 (``mode="state"``), 6 (``"pose"``, state then x, y, theta)
        or 12 (``"stm"``, state then a row-major 3x3 matrix).
    mode : {"state", "pose", "stm"}
    dense : bool
        Return a :class:`Trajectory` instead of the end vector.
    """
    cfg = cfg or IntegratorConfig()
    y0 = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("initial state is not finite", t=t0, y=y0)
    status, t, y, nfev, nrej, ts, ys, rc = kernels.flow(
        y0, float(t0), float(t1), dp.as_tuple(), cfg.rtol, cfg.atol, cfg.h0,
        cfg.h_max, cfg.max_steps, _MODES[mode], dense)
    raise_for_status(status, t, y)
    if dense:
        return Trajectory(ts, ys, rc, nfev, nrej)
    return y


def simulate(dp: DimlessParams, z0, t_end, pose0=(0.0, 0.0, 0.0),
             cfg: IntegratorConfig | None = None) -> Trajectory:
    """Dense trajectory of (phi, sigma, v, x, y, theta) on [0, t_end]."""
    y0 = np.concatenate([np.asarray(z0, dtype=float), np.asarray(pose0, dtype=float)])
    return propagate(y0, 0.0, t_end, dp, cfg, mode="pose", dense=True)


def _fmt(x):
    return repr(float(x))


def write_trajectory_csv(fh, traj: Trajectory, dp: DimlessParams, samples_per_period=64):
    """Write ``t,phi,sigma,v,x,y,theta,psi`` rows sampled from ``traj``.

    Times and states are dimensionless.  ``fh`` is a path or text stream.
    Floats use shortest round-trip formatting.
    """
    t, y = traj.sample(n_per_unit=samples_per_period / dp.period)
    if y.shape[1] != 6:
        raise ValueError("trajectory must carry the pose (6 components)")
    psi = dp.A * np.sin(dp.omega * t)
    buf = io.StringIO()
    buf.write("t,phi,sigma,v,x,y,theta,psi\n")
    for ti, yi, pi in zip(t, y, psi):
        buf.write(",".join(_fmt(x) for x in (ti, *yi, pi)) + "\n")
    if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
        with open(fh, "w", newline="") as out:
            out.write(buf.getvalue())
    else:
        fh.write(buf.getvalue())
