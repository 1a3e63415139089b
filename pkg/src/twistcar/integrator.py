"""Adaptive Dormand-Prince 5(4) integration with 4th order dense output.

This is the generic, numpy based integrator.  It accepts any right-hand side
``rhs(t, y) -> ndarray`` and is used for the dimensional oracle, tests, and as
the pure-Python fallback of the compiled flow kernel (see :mod:`twistcar.kernels`).

Step control follows the usual PI controller with safety factor 0.9 and a
step-ratio clamp of [0.2, 5].  The error norm is the RMS of
``err_i / (atol + rtol * max(|y0_i|, |y1_i|))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "StepBudgetExceeded",
    "NonFiniteState",
    "ChartExit",
    "StepSizeUnderflow",
    "integrate",
    "dopri5",
    "STATUS_OK",
]

# Dormand-Prince tableau
C2, C3, C4, C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
A21 = 0.2
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# error weights: 5th minus 4th order solution
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense output weights
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0

SAFETY = 0.9
FAC_MIN = 0.2   # smallest allowed h_new / h
FAC_MAX = 5.0   # largest allowed h_new / h
BETA_PI = 0.04
EXPO1 = 0.2 - 0.75 * BETA_PI

STATUS_OK = 0
STATUS_BUDGET = 1
STATUS_NONFINITE = 2
STATUS_CHART = 3
STATUS_UNDERFLOW = 4


class IntegrationError(RuntimeError):
    """Base class for integration failures; ``t`` is where it stopped."""

    def __init__(self, msg, t=None, y=None):
        super().__init__(msg)
        self.t = t
        self.y = y


class StepBudgetExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class ChartExit(IntegrationError):
    """The steering angle left the chart |phi| < pi."""


class StepSizeUnderflow(IntegrationError):
    pass


_ERRORS = {
    STATUS_BUDGET: (StepBudgetExceeded, "step budget exhausted"),
    STATUS_NONFINITE: (NonFiniteState, "state became non-finite"),
    STATUS_CHART: (ChartExit, "steering angle left the chart |phi| < pi"),
    STATUS_UNDERFLOW: (StepSizeUnderflow, "step size underflow"),
}


def raise_for_status(status, t, y):
    if status == STATUS_OK:
        return
    cls, msg = _ERRORS[status]
    raise cls(f"{msg} at t={t:.17g}", t=t, y=y)


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for :func:`integrate`.

    ``h0 = 0`` selects the initial step automatically; ``h_max = 0`` means
    no limit besides the span.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    h0: float = 0.0
    h_max: float = 0.0
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (0 < self.rtol <= 1e-3):
            raise ValueError(f"rtol must lie in (0, 1e-3], got {self.rtol}")
        if not self.atol > 0:
            raise ValueError(f"atol must be positive, got {self.atol}")
        if self.h0 < 0 or self.h_max < 0:
            raise ValueError("h0 and h_max must be non-negative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


class Trajectory:
    """Dense solution returned by the integrators.

    Parameters
    ----------
    t : (n+1,) array
        Step nodes, strictly increasing.
    y : (n+1, d) array
        States at the nodes.
    rcont : (n, 5, d) array
        Per-step interpolation coefficients.  For ``s = (t - t_k) / h_k``::

            y(t) = r0 + s (r1 + (1-s) (r2 + s (r3 + (1-s) r4)))
    """

    def __init__(self, t, y, rcont, nfev=0, nrejected=0):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.rcont = np.asarray(rcont, dtype=float)
        self.nfev = nfev
        self.nrejected = nrejected
        if self.t.ndim != 1 or len(self.t) < 1:
            raise ValueError("empty trajectory")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def t_span(self):
        return float(self.t[0]), float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def __call__(self, t):
        """Evaluate the dense interpolant at scalar or array ``t``."""
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        tt = np.atleast_1d(tt)
        t0, t1 = self.t_span
        if np.any(tt < t0 - 1e-12 * max(1.0, abs(t0))) or np.any(tt > t1 + 1e-12 * max(1.0, abs(t1))):
            raise ValueError("evaluation time outside the trajectory span")
        if self.n_steps > 0 and len(self.rcont) == 0:
            raise ValueError("trajectory was computed without dense output")
        if self.n_steps == 0:
            out = np.repeat(self.y[:1], len(tt), axis=0)
            return out[0] if scalar else out
        k = np.searchsorted(self.t, tt, side="right") - 1
        k = np.clip(k, 0, self.n_steps - 1)
        h = self.t[k + 1] - self.t[k]
        s = ((tt - self.t[k]) / h)[:, None]
        s1 = 1.0 - s
        r = self.rcont[k]
        out = r[:, 0] + s * (r[:, 1] + s1 * (r[:, 2] + s * (r[:, 3] + s1 * r[:, 4])))
        # exact node values
        on_node = tt == self.t[k]
        out[on_node] = self.y[k[on_node]]
        at_end = tt == self.t[-1]
        out[at_end] = self.y[-1]
        return out[0] if scalar else out

    def sample(self, n_per_unit=None, times=None):
        """Return ``(times, states)`` on a given or uniform grid."""
        if times is None:
            t0, t1 = self.t_span
            n = max(2, int(math.ceil((t1 - t0) * n_per_unit)) + 1)
            times = np.linspace(t0, t1, n)
        times = np.asarray(times, dtype=float)
        return times, self(times)


def _rms_norm(e, sk):
    return math.sqrt(float(np.mean((e / sk) ** 2)))


def _initial_step(rhs, t0, y0, f0, tdir_span, rtol, atol, hmax):
    # Hairer-Norsett-Wanner starting step heuristic (order 5)
    sk = atol + rtol * np.abs(y0)
    d0 = _rms_norm(y0, sk)
    d1 = _rms_norm(f0, sk)
    h0 = 0.01 * d0 / d1 if (d0 > 1e-10 and d1 > 1e-10) else 1e-6
    h0 = min(h0, hmax, tdir_span)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = _rms_norm(f1 - f0, sk) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1, hmax, tdir_span)


def dopri5(rhs, t0, t1, y0, rtol=1e-10, atol=1e-12, h0=0.0, hmax=0.0,
           max_steps=10_000_000, dense=True, chart_index=None, chart_bound=math.pi):
    """Core stepping loop.

    Returns ``(status, t, y, nfev, nrej, ts, ys, rcont)``; the last three
    are None unless ``dense``.  ``status`` is one of the STATUS_* codes and
    ``(t, y)`` is the last accepted point.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = float(t1) - t
    if span <= 0:
        raise ValueError("t1 must exceed t0")
    hmax = span if hmax <= 0 else min(hmax, span)
    k1 = np.asarray(rhs(t, y), dtype=float)
    nfev = 1
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(k1))):
        return STATUS_NONFINITE, t, y, nfev, 0, None, None, None
    if h0 > 0:
        h = min(h0, hmax)
    else:
        h = _initial_step(rhs, t, y, k1, span, rtol, atol, hmax)
        nfev += 1
    ts = [t] if dense else None
    ys = [y.copy()] if dense else None
    rc = [] if dense else None
    facold = 1e-4
    last_rejected = False
    nsteps = 0
    nrej = 0
    status = STATUS_OK
    while True:
        if nsteps >= max_steps:
            status = STATUS_BUDGET
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
        last = False
        if t + 1.01 * h >= t1:
            h = t1 - t
            last = True
        nsteps += 1
        k2 = rhs(t + C2 * h, y + h * (A21 * k1))
        k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        tnew = t + h if not last else float(t1)
        k7 = rhs(tnew, ynew)
        nfev += 6
        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = _rms_norm(err_vec, sk)
        if not math.isfinite(err):
            if h < 1e-10 * max(1.0, abs(t)):
                status = STATUS_NONFINITE
                break
            h *= FAC_MIN
            last_rejected = True
            nrej += 1
            continue
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA_PI
        fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
        hnew = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            if dense:
                ydiff = ynew - y
                bspl = h * k1 - ydiff
                rc.append(np.stack([
                    y.copy(), ydiff, bspl, ydiff - h * k7 - bspl,
                    h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
                ]))
                ts.append(tnew)
                ys.append(ynew.copy())
            t, y, k1 = tnew, ynew, k7
            if not np.all(np.isfinite(y)):
                status = STATUS_NONFINITE
                break
            if chart_index is not None and abs(y[chart_index]) >= chart_bound:
                status = STATUS_CHART
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
    if dense:
        d = len(y)
        rcont = np.array(rc) if rc else np.zeros((0, 5, d))
        return status, t, y, nfev, nrej, np.array(ts), np.array(ys), rcont
    return status, t, y, nfev, nrej, None, None, None


def integrate(rhs, t_span, z0, cfg: IntegratorConfig | None = None, *,
              chart_index=None, dense=True):
    """Integrate ``y' = rhs(t, y)`` over ``t_span`` and return a Trajectory.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` returning an array shaped like ``y``.
    t_span : (float, float)
        Start and end time, ``t1 > t0``.
    z0 : array_like
        Initial state, must be finite.
    cfg : IntegratorConfig, optional
    chart_index : int, optional
        Component that must stay inside (-pi, pi); leaving it raises
        :class:`ChartExit`.
    dense : bool
        If False only the end point is kept (the trajectory has two nodes
        and no interpolation data).

    Raises
    ------
    StepBudgetExceeded, NonFiniteState, ChartExit, StepSizeUnderflow
    """
    cfg = cfg or IntegratorConfig()
    z0 = np.asarray(z0, dtype=float)
    if not np.all(np.isfinite(z0)):
        raise NonFiniteState("initial state is not finite", t=t_span[0], y=z0)
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")

    def f(t, y):
        return np.asarray(rhs(t, y), dtype=float)

    status, t, y, nfev, nrej, ts, ys, rc = dopri5(
        f, t0, t1, z0, cfg.rtol, cfg.atol, cfg.h0, cfg.h_max, cfg.max_steps,
        dense, chart_index)
    raise_for_status(status, t, y)
    if not dense:
        return Trajectory([t0, t1], np.stack([z0, y]), np.zeros((0, 5, len(y))), nfev, nrej)
    return Trajectory(ts, ys, rc, nfev, nrej)
