"""Single-harmonic balance for the symmetric-orbit stability boundary.

The reduced equations are expanded in phi (odd terms to phi^3, even to
phi^4), the coupling ``2 delta v sigma`` in the sigma equation is dropped
and the ansatz

    phi   = a0 + a1 sin wt + a2 cos wt
    sigma = b0 + b1 sin wt + b2 cos wt
    v     = c0 + c1 sin wt + c2 cos wt + c3 sin 2wt + c4 cos 2wt

is inserted.  Because the sigma equation is then linear in b and the v
equation linear in c, ``b = M_b(a)^-1 F_b(a)`` and ``c = M_c^-1 F_c(a, b)``
close the system, and the steering equation yields three conditions
F(a) = 0.  Its constant part factorizes as ``F1 = a0 Upsilon(a0^2, a1, a2)``;
the pitchfork of the symmetric orbit is where ``a0 = 0`` and
``Upsilon = 0`` hold together with F2 = F3 = 0.

Projection conventions (``<.>`` is the period mean):

* ``M_b b - F_b = -( <r>, <r sin>, <r cos> )`` for the sigma residual r,
* ``M_c c - F_c = ( <r>, <r cos>, <r sin>, <r cos2>, <r sin2> )`` for the
  speed residual r,
* ``F = -beta ( <r>, <r sin>, <r cos> )`` for the steering residual r.

The printed coefficient tables carry a sign flip on the harmonic rows of
M_b and M_c relative to their right-hand sides, and a factor 4 where
24 is needed in the second entry of F_b.  ``variant="printed"`` reproduces
the tables literally; the default ``"consistent"`` applies the three
corrections, after which every row matches the quadrature above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .asymptotics import perturbation_coefficients
from .model import DimlessParams

__all__ = [
    "HarmonicAnsatz",
    "StabilityPolynomial",
    "HBError",
    "hb_sigma_system",
    "hb_speed_system",
    "hb_closure",
    "f1_closed_form",
    "hb_residual",
    "upsilon",
    "solve_symmetric_hb",
    "pitchfork_frequency_hb",
    "stability_polynomial",
    "pitchfork_frequency_asymptotic",
    "B9_PARAMS",
]

N_QUAD = 4096
_x = 2 * np.pi * np.arange(N_QUAD) / N_QUAD
_S, _C = np.sin(_x), np.cos(_x)
_S2, _C2 = np.sin(2 * _x), np.cos(2 * _x)


class HBError(RuntimeError):
    pass


@dataclass(frozen=True)
class HarmonicAnsatz:
    """Coefficients of the truncated Fourier ansatz."""

    a: tuple
    b: tuple
    c: tuple
    omega: float

    def evaluate(self, t):
        """(phi, sigma, v) at times ``t``, shape (len(t), 3)."""
        t = np.asarray(t, dtype=float)
        s, c = np.sin(self.omega * t), np.cos(self.omega * t)
        s2, c2 = np.sin(2 * self.omega * t), np.cos(2 * self.omega * t)
        a, b, k = self.a, self.b, self.c
        return np.stack([
            a[0] + a[1] * s + a[2] * c,
            b[0] + b[1] * s + b[2] * c,
            k[0] + k[1] * s + k[2] * c + k[3] * s2 + k[4] * c2,
        ], axis=-1)


def _check_variant(variant):
    if variant not in ("consistent", "printed"):
        raise ValueError(f"unknown variant {variant!r}")


def hb_sigma_system(a, dp: DimlessParams, variant="consistent"):
    """Assemble and solve ``M_b b = F_b`` for the sigma harmonics.

    Returns
    -------
    (M_b, F_b, b)

    Raises
    ------
    HBError
        If M_b is numerically singular at ``a``.
    """
    _check_variant(variant)
    a0, a1, a2 = map(float, a)
    al, be, de, eta, A, w = dp.as_tuple()
    dd = de ** 2 + eta
    m11 = (be * (a0 ** 2 + a1 ** 2 / 2 + a2 ** 2 / 2) - 2 * be
           - be / 96 * (8 * a0 ** 4 + 24 * a0 ** 2 * a1 ** 2 + 24 * a0 ** 2 * a2 ** 2
                        + 3 * a1 ** 4 + 6 * a1 ** 2 * a2 ** 2 + 3 * a2 ** 4)
           + 4 * al ** 2 + 2)
    k = 4 * a0 ** 2 + 3 * a1 ** 2 + 3 * a2 ** 2
    m12 = a0 * a1 * be - a0 * a1 * be / 24 * k
    m13 = a0 * a2 * be - a0 * a2 * be / 24 * k
    m22 = (-2 * al ** 2 + be
           + be / 192 * (8 * a0 ** 4 + 36 * a0 ** 2 * a1 ** 2 + 12 * a0 ** 2 * a2 ** 2
                         + 5 * a1 ** 4 + 6 * a1 ** 2 * a2 ** 2 + a2 ** 4)
           - be * (a0 ** 2 / 2 + 3 * a1 ** 2 / 8 + a2 ** 2 / 8) - 1)
    cross = a1 * a2 * be / 48 * (6 * a0 ** 2 + a1 ** 2 + a2 ** 2) - a1 * a2 * be / 4
    m23 = w * dd + cross
    m32 = cross - w * dd
    m33 = (-2 * al ** 2 + be
           + be / 192 * (8 * a0 ** 4 + 12 * a0 ** 2 * a1 ** 2 + 36 * a0 ** 2 * a2 ** 2
                         + a1 ** 4 + 6 * a1 ** 2 * a2 ** 2 + 5 * a2 ** 4)
           - be * (a0 ** 2 / 2 + a1 ** 2 / 8 + 3 * a2 ** 2 / 8) - 1)
    M = np.array([[m11, m12, m13], [-m12, m22, m23], [-m13, m32, m33]])
    Q = (8 * a0 ** 4 + 12 * a0 ** 2 * a1 ** 2 + 12 * a0 ** 2 * a2 ** 2 + a1 ** 4
         + 2 * a1 ** 2 * a2 ** 2 + a2 ** 4)
    X = 4 * a0 ** 2 + a1 ** 2 + a2 ** 2
    k2 = 4 if variant == "printed" else 24
    F = np.array([
        0.0,
        192 * (A * eta * w ** 2 - a2 * be * w) - a2 * be * w * Q + k2 * a2 * be * w * X,
        192 * a1 * be * w + a1 * be * w * Q - 24 * a1 * be * w * X,
    ]) / 192
    if variant == "consistent":
        M[1:] *= -1
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > 1e12:
        raise HBError(f"M_b is singular at a={tuple(map(float, a))}")
    return M, F, np.linalg.solve(M, F)


def _mc(w, variant):
    M = np.array([[3.0, 0, 0, 0, 0],
                  [0, -w / 2, -1.5, 0, 0],
                  [0, -1.5, w / 2, 0, 0],
                  [0, 0, 0, -w, -1.5],
                  [0, 0, 0, -1.5, w]])
    if variant == "consistent":
        M[1:] *= -1
    return M


def hb_speed_system(a, b, dp: DimlessParams, variant="consistent"):
    """Assemble and solve ``M_c c = F_c`` for the speed harmonics.

    Returns
    -------
    (M_c, F_c, c)
    """
    _check_variant(variant)
    if not dp.omega > 0:
        raise HBError("omega must be positive")
    a0, a1, a2 = map(float, a)
    b0, b1, b2 = map(float, b)
    de, w = dp.delta, dp.omega
    F = np.array([
        (8 * a0 ** 3 * b0 + 12 * a0 ** 2 * a1 * b1 + 12 * a0 ** 2 * a2 * b2
         + 12 * a0 * a1 ** 2 * b0 + 12 * a0 * a2 ** 2 * b0 - 12 * a0 * b0
         + 3 * a1 ** 3 * b1 + 3 * a1 ** 2 * a2 * b2 + 3 * a1 * a2 ** 2 * b1 - 6 * a1 * b1
         + 3 * a2 ** 3 * b2 - 6 * a2 * b2 + 12 * de * b0 ** 2 + 6 * de * b1 ** 2
         + 6 * de * b2 ** 2),
        (4 * b2 * a0 ** 3 + 12 * b0 * a0 ** 2 * a2 + 3 * b2 * a0 * a1 ** 2
         + 6 * b1 * a0 * a1 * a2 + 9 * b2 * a0 * a2 ** 2 - 6 * b2 * a0
         + 3 * b0 * a1 ** 2 * a2 + 3 * b0 * a2 ** 3 - 6 * b0 * a2 + 12 * b0 * b2 * de),
        (4 * b1 * a0 ** 3 + 12 * b0 * a0 ** 2 * a1 + 9 * b1 * a0 * a1 ** 2
         + 6 * b2 * a0 * a1 * a2 + 3 * b1 * a0 * a2 ** 2 - 6 * b1 * a0
         + 3 * b0 * a1 ** 3 + 3 * b0 * a1 * a2 ** 2 - 6 * b0 * a1 + 12 * b0 * b1 * de),
        (6 * b2 * a0 ** 2 * a2 - 6 * a1 * b1 * a0 ** 2 + 6 * b0 * a0 * a2 ** 2
         - 6 * a1 ** 2 * b0 * a0 + 2 * b2 * a2 ** 3 - 3 * b2 * a2 + 3 * a1 * b1
         - 3 * de * (b1 ** 2 - b2 ** 2) - 2 * a1 ** 3 * b1),
        (6 * b2 * a0 ** 2 * a1 + 6 * b1 * a0 ** 2 * a2 + 12 * b0 * a0 * a1 * a2
         + b2 * a1 ** 3 + 3 * b1 * a1 ** 2 * a2 + 3 * b2 * a1 * a2 ** 2 - 3 * b2 * a1
         + b1 * a2 ** 3 - 3 * b1 * a2 + 6 * b1 * b2 * de),
    ]) / 12
    M = _mc(w, variant)
    return M, F, np.linalg.solve(M, F)


def hb_closure(a, dp: DimlessParams, variant="consistent", keep_dv_sigma=False):
    """``(b, c)`` as functions of ``a``.

    With ``keep_dv_sigma`` the coupling ``2 delta v sigma`` omitted from the
    sigma equation is restored through its projections; b and c are then
    found by fixed-point iteration between the two linear subsystems.
    """
    M_b, F_b, b = hb_sigma_system(a, dp, variant)
    _, _, c = hb_speed_system(a, b, dp, variant)
    if not keep_dv_sigma:
        return b, c
    if variant != "consistent":
        raise ValueError("keep_dv_sigma requires the consistent variant")
    for _ in range(200):
        sg = b[0] + b[1] * _S + b[2] * _C
        v = c[0] + c[1] * _S + c[2] * _C + c[3] * _S2 + c[4] * _C2
        r = 2 * dp.delta * v * sg
        b_new = np.linalg.solve(M_b, F_b - np.array([np.mean(r), np.mean(r * _S), np.mean(r * _C)]))
        _, _, c = hb_speed_system(a, b_new, dp, variant)
        if np.max(np.abs(b_new - b)) <= 1e-14 * max(1.0, np.max(np.abs(b_new))):
            return b_new, c
        b = b_new
    raise HBError("sigma/speed coupling iteration did not converge")


def f1_closed_form(a, b, c, beta):
    """Constant-term balance of the steering equation in closed form."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    c0, c1, c2, c3, c4 = c
    return (a0 ** 3 * c0 / 6 - a1 * c1 / 2 - a2 * c2 / 2 - a0 ** 2 * b0 / 2
            - a1 ** 2 * b0 / 4 - a2 ** 2 * b0 / 4 - a0 * c0 + a1 ** 3 * c1 / 16
            + a2 ** 3 * c2 / 16 - b0 * (beta - 1) - a0 * a1 * b1 / 2 - a0 * a2 * b2 / 2
            + a0 * a1 ** 2 * c0 / 4 + a0 * a2 ** 2 * c0 / 4 + a0 ** 2 * a1 * c1 / 4
            + a1 * a2 ** 2 * c1 / 16 + a0 ** 2 * a2 * c2 / 4 - a0 * a1 ** 2 * c4 / 8
            + a1 ** 2 * a2 * c2 / 16 + a0 * a2 ** 2 * c4 / 8 + a0 * a1 * a2 * c3 / 4)


def _steering_residual(a, b, c, dp):
    """Residual of the truncated steering equation on the quadrature grid."""
    w, be = dp.omega, dp.beta
    ph = a[0] + a[1] * _S + a[2] * _C
    phd = w * (a[1] * _C - a[2] * _S)
    sg = b[0] + b[1] * _S + b[2] * _C
    v = c[0] + c[1] * _S + c[2] * _C + c[3] * _S2 + c[4] * _C2
    return phd - (-v * (ph - ph ** 3 / 6) + (1 - be - ph ** 2 / 2) * sg) / be


def hb_residual(a, dp: DimlessParams, variant="consistent", keep_dv_sigma=False):
    """The three balance conditions F(a).

    F1 is the closed form; F2 and F3 are the sin and cos projections of the
    steering residual, ``-beta <r sin wt>`` and ``-beta <r cos wt>``.
    """
    a = np.asarray(a, dtype=float)
    b, c = hb_closure(a, dp, variant, keep_dv_sigma)
    r = _steering_residual(a, b, c, dp)
    return np.array([f1_closed_form(a, b, c, dp.beta),
                     -dp.beta * np.mean(r * _S),
                     -dp.beta * np.mean(r * _C)])


def upsilon(a1, a2, omega, dp: DimlessParams, h=1e-6, variant="consistent",
            keep_dv_sigma=False):
    """``Upsilon(0, a1, a2)`` as the central difference of F1 in a0."""
    d = dp.replace(omega=omega)

    def f1(a0):
        b, c = hb_closure((a0, a1, a2), d, variant, keep_dv_sigma)
        return f1_closed_form((a0, a1, a2), b, c, d.beta)
    return (f1(h) - f1(-h)) / (2 * h)


def _newton(fun, x0, tol=1e-12, max_iter=50, rel=1e-7):
    x = np.array(x0, dtype=float)
    f = fun(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            return x
        J = np.empty((len(f), len(x)))
        for i in range(len(x)):
            h = rel * max(1e-3, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            J[:, i] = (fun(xp) - fun(xm)) / (2 * h)
        dx = np.linalg.solve(J, -f)
        lam = 1.0
        while True:
            xt = x + lam * dx
            ft = fun(xt)
            if np.max(np.abs(ft)) < np.max(np.abs(f)) or lam < 1 / 64:
                break
            lam *= 0.5
        x, f = xt, ft
        if np.max(np.abs(lam * dx)) <= 1e-15 * max(1.0, np.max(np.abs(x))):
            break
    if np.max(np.abs(f)) <= 1e3 * tol:
        return x
    raise HBError(f"Newton did not converge, last iterate {x.tolist()}, |F|={np.max(np.abs(f)):.3e}")


def solve_symmetric_hb(dp: DimlessParams, a_guess=None, variant="consistent",
                       keep_dv_sigma=False) -> HarmonicAnsatz:
    """Symmetric balance solution (a0 = 0) with F2 = F3 = 0."""
    if a_guess is None:
        k = perturbation_coefficients(dp)
        a_guess = (k.epsilon * k.a1, k.epsilon * k.a2)

    def fun(x):
        return hb_residual((0.0, x[0], x[1]), dp, variant, keep_dv_sigma)[1:]
    a1, a2 = _newton(fun, a_guess)
    b, c = hb_closure((0.0, a1, a2), dp, variant, keep_dv_sigma)
    return HarmonicAnsatz((0.0, float(a1), float(a2)), tuple(map(float, b)),
                          tuple(map(float, c)), dp.omega)


def pitchfork_frequency_hb(delta, dp: DimlessParams, omega_guess=None,
                           omega_range=(2.0, 16.0), n_scan=57, variant="consistent",
                           return_ansatz=False, keep_dv_sigma=False):
    """Frequency at which the symmetric balance solution meets the asymmetric one.

    A scan of ``Upsilon`` along the symmetric solution family brackets the
    crossing (closest to ``omega_guess`` if given, else the highest one);
    the three equations ``Upsilon = F2 = F3 = 0`` are then solved jointly
    in (a1, a2, omega) by Newton.  ``keep_dv_sigma`` restores the dropped
    coupling term (a diagnostic, see :func:`hb_closure`).
    """
    dd = dp.replace(delta=delta)
    kd = keep_dv_sigma
    grid = np.linspace(omega_range[1], omega_range[0], n_scan)
    vals, sols = [], []
    guess = None
    for w in grid:
        try:
            s = solve_symmetric_hb(dd.replace(omega=w), guess, variant, kd)
            guess = s.a[1:]
            vals.append(upsilon(s.a[1], s.a[2], w, dd, variant=variant, keep_dv_sigma=kd))
        except (HBError, np.linalg.LinAlgError):
            s = None
            guess = None
            vals.append(math.nan)
        sols.append(s)
    brackets = [k for k in range(len(grid) - 1)
                if np.isfinite(vals[k]) and np.isfinite(vals[k + 1]) and vals[k] * vals[k + 1] < 0]
    if not brackets:
        raise HBError(f"no sign change of Upsilon for omega in {omega_range} at delta={delta}")
    if omega_guess is None:
        k = brackets[0]
    else:
        k = min(brackets, key=lambda j: abs(0.5 * (grid[j] + grid[j + 1]) - omega_guess))
    state = {"a": sols[k].a[1:]}

    def ups_of_w(w):
        s = solve_symmetric_hb(dd.replace(omega=w), state["a"], variant, kd)
        state["a"] = s.a[1:]
        return upsilon(s.a[1], s.a[2], w, dd, variant=variant, keep_dv_sigma=kd)
    w0 = brentq(ups_of_w, grid[k + 1], grid[k], xtol=1e-8)
    s0 = solve_symmetric_hb(dd.replace(omega=w0), state["a"], variant, kd)

    def system(x):
        a1, a2, w = x
        dw = dd.replace(omega=w)
        F = hb_residual((0.0, a1, a2), dw, variant, kd)
        return np.array([upsilon(a1, a2, w, dw, variant=variant, keep_dv_sigma=kd), F[1], F[2]])
    a1, a2, w = _newton(system, [s0.a[1], s0.a[2], w0], tol=1e-10)
    if not return_ansatz:
        return float(w)
    b, c = hb_closure((0.0, a1, a2), dd.replace(omega=w), variant, kd)
    return float(w), HarmonicAnsatz((0.0, float(a1), float(a2)), tuple(map(float, b)),
                                    tuple(map(float, c)), float(w))


# ----------------------------------------------------------------------------
# closed-form stability polynomial

#: Parameter class the fixed coefficient set belongs to.
B9_PARAMS = {"alpha": 1 / 3, "beta": 1 / 3, "eta": 0.0118, "A": 0.1}

# coefficients in powers of delta, highest first
_B9 = {
    "d8": [-9.0195e-3, 0, 4.7409e-4, 0, 1.4956e-5, 0, 9.5651e-7, 0],
    "d6": [-1439.5, -3.5514e-2, -67.943, 189.61, -1.2026, 4.48, -9.4604e-3,
           2.6596e-2, -2.7908e-5],
    "d4": [-3238.8, 0, -152.87, 2132.7, -2277.4, 50.353, -53.705, 150.08, -0.3168],
    "d2": [3838.61, -5118.1, 90.591, -120.79, 1685.52, -899.37],
    "d0": [3032.907, -2021.98],
}


@dataclass(frozen=True)
class StabilityPolynomial:
    """``d8 w^8 + d6 w^6 + d4 w^4 + d2 w^2 + d0`` at one delta."""

    delta: float
    d8: float
    d6: float
    d4: float
    d2: float
    d0: float
    source: str = "B9_fixture"

    @property
    def coefficients(self):
        return np.array([self.d8, self.d6, self.d4, self.d2, self.d0])

    def __call__(self, omega):
        return np.polyval(self.coefficients, np.asarray(omega) ** 2)

    def positive_roots(self):
        """Admissible frequencies: sqrt of the positive real roots in w^2."""
        r = np.roots(self.coefficients)
        keep = (np.abs(r.imag) <= 1e-9 * np.maximum(1.0, np.abs(r))) & (r.real > 0)
        return np.sort(np.sqrt(r.real[keep]))


def stability_polynomial(delta) -> StabilityPolynomial:
    """The fixed coefficient set evaluated at ``delta``."""
    vals = {k: float(np.polyval(v, delta)) for k, v in _B9.items()}
    return StabilityPolynomial(float(delta), source="B9_fixture", **vals)


def _select(roots, reference):
    if len(roots) == 0:
        raise HBError("no admissible root")
    if reference is None or not np.isfinite(reference):
        return float(roots[-1]) if len(roots) == 1 else float(roots[np.argmin(np.abs(roots - 7.0))])
    return float(roots[np.argmin(np.abs(roots - reference))])


def _expanded_a(dp):
    """Truncated small-(delta^2+eta) expansions of the first-order a1, a2."""
    be, w = dp.beta, dp.omega
    et = math.sqrt(dp.delta ** 2 + dp.eta)
    at = dp.alpha / math.sqrt(et)
    a1 = (be - 1) / (4 * at ** 4 * be) - w ** 2 * (be - 1) * et ** 2 / (16 * at ** 8 * be)
    a2 = ((be - 1) / (2 * w * at ** 2 * be * et) - w * et * (be - 1) / (8 * at ** 6 * be)
          + w ** 3 * (be - 1) * et ** 3 / (32 * at ** 10 * be))
    return a1, a2


def pitchfork_frequency_asymptotic(delta, dp: DimlessParams, source="B9_fixture",
                                   reference=None, omega_range=(2.0, 16.0), n_scan=113):
    """Asymptotic estimate of the pitchfork frequency.

    Parameters
    ----------
    source : {"B9_fixture", "semi_numeric"}
        ``B9_fixture`` roots the fixed quartic in w^2 (valid for the
        parameter class in :data:`B9_PARAMS`; ``dp`` is then ignored apart
        from being recorded).  ``semi_numeric`` inserts ``eps * a_i`` with
        the truncated expansions of the first-order amplitudes into
        Upsilon and roots it in omega.
    reference : float, optional
        Frequency used to select among several admissible roots (for
        example the balance solution, or the previous grid point).
    """
    if not delta > 0:
        raise HBError("delta must be positive")
    if source == "B9_fixture":
        return _select(stability_polynomial(delta).positive_roots(), reference)
    if source != "semi_numeric":
        raise ValueError(f"unknown source {source!r}")
    dd = dp.replace(delta=delta)

    def g(w):
        dw = dd.replace(omega=w)
        a1, a2 = _expanded_a(dw)
        return upsilon(dw.epsilon * a1, dw.epsilon * a2, w, dw)
    grid = np.linspace(omega_range[0], omega_range[1], n_scan)
    vals = np.array([g(w) for w in grid])
    roots = [brentq(g, grid[k], grid[k + 1], xtol=1e-10)
             for k in range(len(grid) - 1) if vals[k] * vals[k + 1] < 0]
    return _select(np.array(roots), reference)
