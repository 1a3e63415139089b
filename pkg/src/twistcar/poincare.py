"""Stroboscopic map, periodic orbits, Floquet stability and continuation.

The map samples the flow once per forcing period starting at phase 0
(``psi = 0``, ``psi_dot > 0``).  Because shifting time by half a period flips
the forcing, the vector field satisfies ``R f(t, z) = f(t + T/2, R z)`` with
``R = diag(-1, -1, 1)``.  Symmetric orbits are the fixed points of the
half-period map composed with R, which lets Newton converge to them whether
they are stable or not.
"""
from __future__ import annotations

import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import perturbation_coefficients
from .dynamics import REVERSAL, propagate
from .integrator import IntegrationError, IntegratorConfig
from .model import DimlessParams, ReducedState

__all__ = [
    "PeriodicOrbit",
    "BranchPoint",
    "Bifurcation",
    "Branch",
    "OrbitNotFound",
    "ContinuationError",
    "stroboscopic_map",
    "half_map",
    "map_jacobian",
    "find_periodic_orbit",
    "symmetric_orbit",
    "floquet",
    "observables",
    "conjugate_orbit",
    "seed_attractors",
    "orbit_census",
    "continue_branch",
    "stability_boundary",
    "DEFAULT_SEEDS",
    "JACOBIAN_CONFIG",
]

log = logging.getLogger(__name__)

R = REVERSAL
DEFAULT_SEEDS = ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0),
                 (1.2, 0.0, 0.05), (-1.2, 0.0, 0.05))
#: Tighter tolerances used for map Jacobians.
JACOBIAN_CONFIG = IntegratorConfig(rtol=1e-12, atol=1e-14)
QUAD_POINTS = 2048


class OrbitNotFound(RuntimeError):
    """Newton iteration for a fixed point failed."""

    def __init__(self, msg, z=None):
        super().__init__(msg)
        self.z = z


class ContinuationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodicOrbit:
    """Fixed point of the stroboscopic map and its derived quantities."""

    z_star: ReducedState
    omega: float
    multipliers: tuple
    stable: bool
    phi_bar: float
    v_bar: float
    theta_drift: float
    symmetric: bool
    residual: float = 0.0
    params: DimlessParams | None = field(default=None, compare=False, repr=False)

    @property
    def rho(self) -> float:
        """Largest multiplier magnitude."""
        return max(abs(m) for m in self.multipliers)

    @property
    def leading_multiplier(self) -> complex:
        return max(self.multipliers, key=abs)


# ----------------------------------------------------------------------------
# maps and Jacobians

def stroboscopic_map(z, dp: DimlessParams, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Advance z by one forcing period."""
    return propagate(z, 0.0, dp.period, dp, cfg)


def half_map(z, dp: DimlessParams, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Advance z by half a forcing period."""
    return propagate(z, 0.0, 0.5 * dp.period, dp, cfg)


def _fd_jacobian(fun, z, rel=1e-6):
    z = np.asarray(z, dtype=float)
    J = np.empty((len(z), len(z)))
    for i in range(len(z)):
        h = rel * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        J[:, i] = (fun(zp) - fun(zm)) / (2 * h)
    return J


def map_jacobian(z, dp: DimlessParams, method="variational", half=False,
                 cfg: IntegratorConfig | None = None):
    """Image and Jacobian of the (half or full) map at z.

    Parameters
    ----------
    method : {"variational", "fd"}
        Integrate the linearized flow alongside the state, or use central
        differences with step ``1e-6 max(1, |z_i|)``.

    Returns
    -------
    (Pz, J) : ndarray, ndarray
    """
    cfg = cfg or JACOBIAN_CONFIG
    t1 = dp.period * (0.5 if half else 1.0)
    z = np.asarray(z, dtype=float)
    if method == "variational":
        y = propagate(np.concatenate([z, np.eye(3).ravel()]), 0.0, t1, dp, cfg, mode="stm")
        return y[:3], y[3:].reshape(3, 3)
    if method == "fd":
        def fun(x):
            return propagate(x, 0.0, t1, dp, cfg)
        return fun(z), _fd_jacobian(fun, z)
    raise ValueError(f"unknown Jacobian method {method!r}")


def floquet(orbit_or_z, dp: DimlessParams, method="variational",
            cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Floquet multipliers, the eigenvalues of dP/dz at the fixed point.

    Sorted by decreasing magnitude.
    """
    z = orbit_or_z.z_star if isinstance(orbit_or_z, PeriodicOrbit) else orbit_or_z
    _, J = map_jacobian(z, dp, method=method, cfg=cfg)
    lam = np.linalg.eigvals(J)
    return lam[np.argsort(-np.abs(lam), kind="stable")]


def observables(z_star, dp: DimlessParams, cfg: IntegratorConfig | None = None,
                n=QUAD_POINTS):
    """Period means of phi and v and the net rotation per period.

    Uses the periodic trapezoid rule on ``n`` dense-output samples.
    """
    z_star = z_star.z_star if isinstance(z_star, PeriodicOrbit) else z_star
    T = dp.period
    traj = propagate(z_star, 0.0, T, dp, cfg, dense=True)
    y = traj(np.arange(n) * (T / n))
    phi_bar, sig_bar, v_bar = y.mean(axis=0)
    return float(phi_bar), float(v_bar), float(sig_bar * T)


def _is_symmetric(z, dp, cfg, tol=1e-7):
    return float(np.max(np.abs(R * half_map(z, dp, cfg) - z))) <= tol


def make_orbit(z, dp: DimlessParams, cfg: IntegratorConfig | None = None,
               method="variational", residual_tol=1e-9) -> PeriodicOrbit:
    """Build a PeriodicOrbit at a converged fixed point z."""
    z = np.asarray(z, dtype=float)
    res = float(np.max(np.abs(stroboscopic_map(z, dp, cfg) - z)))
    if not res <= residual_tol:
        raise OrbitNotFound(f"|P(z)-z| = {res:.3e} exceeds {residual_tol:g}", z)
    lam = floquet(z, dp, method=method)
    phi_bar, v_bar, drift = observables(z, dp, cfg)
    return PeriodicOrbit(
        z_star=ReducedState(*map(float, z)),
        omega=dp.omega,
        multipliers=tuple(complex(x) for x in lam),
        stable=bool(np.max(np.abs(lam)) < 1.0),
        phi_bar=phi_bar,
        v_bar=v_bar,
        theta_drift=drift,
        symmetric=_is_symmetric(z, dp, cfg),
        residual=res,
        params=dp,
    )


# ----------------------------------------------------------------------------
# Newton solves

def _newton(G, z0, tol, max_iter, jac):
    z = np.array(z0, dtype=float)
    try:
        g = G(z)
    except IntegrationError as exc:
        raise OrbitNotFound(f"initial guess not admissible: {exc}", z) from None
    ng = np.max(np.abs(g))
    for it in range(max_iter):
        if ng <= tol:
            return z, ng, it
        J = jac(z)
        try:
            dz = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            raise OrbitNotFound("singular Newton matrix", z) from None
        lam = 1.0
        while True:
            zt = z + lam * dz
            try:
                gt = G(zt)
                ngt = np.max(np.abs(gt))
            except IntegrationError:
                ngt = math.inf
            if ngt < ng or lam < 1.0 / 64:
                break
            lam *= 0.5
        if not math.isfinite(ngt):
            raise OrbitNotFound("Newton step left the admissible region", z)
        z, g, ng = zt, gt, ngt
        # stagnation at the integration noise floor
        if np.max(np.abs(lam * dz)) <= 1e-12 * max(1.0, np.max(np.abs(z))) and ng <= 1e-9:
            return z, ng, it + 1
    if ng <= tol:
        return z, ng, max_iter
    raise OrbitNotFound(f"no convergence in {max_iter} iterations (|G|={ng:.3e})", z)


def find_periodic_orbit(z_guess, dp: DimlessParams, symmetric_constraint=False,
                        cfg: IntegratorConfig | None = None, tol=1e-11,
                        max_iter=50, multipliers="variational") -> PeriodicOrbit:
    """Damped Newton for a fixed point of the stroboscopic map.

    With ``symmetric_constraint`` the equation solved is
    ``R P_half(z) = z``, which captures symmetric orbits regardless of
    their stability.  The Newton matrix is a central finite-difference
    Jacobian.

    Raises
    ------
    OrbitNotFound
        No convergence in ``max_iter`` iterations, or the converged point
        fails the full-period residual check.
    """
    z_guess = np.asarray(z_guess, dtype=float)
    if not np.all(np.isfinite(z_guess)):
        raise OrbitNotFound("non-finite initial guess", z_guess)
    if symmetric_constraint:
        def G(z):
            return R * half_map(z, dp, cfg) - z
    else:
        def G(z):
            return stroboscopic_map(z, dp, cfg) - z

    z, _, _ = _newton(G, z_guess, tol, max_iter, lambda z: _fd_jacobian(G, z))
    return make_orbit(z, dp, cfg, method=multipliers)


def _asymptotic_guess(dp):
    k = perturbation_coefficients(dp)
    e = k.epsilon
    return np.array([e * k.a2, e * k.b2, e * e * (k.c0 + k.c2)])


def symmetric_orbit(dp: DimlessParams, z_guess=None, cfg: IntegratorConfig | None = None,
                    homotopy_steps=8) -> PeriodicOrbit:
    """Symmetric periodic orbit, stable or not.

    Starts from ``z_guess`` or the small-amplitude asymptotic orbit; if
    Newton fails, the amplitude is raised gradually from a small value.
    """
    guesses = [z_guess] if z_guess is not None else []
    guesses.append(_asymptotic_guess(dp))
    for g in guesses:
        try:
            return find_periodic_orbit(g, dp, symmetric_constraint=True, cfg=cfg)
        except OrbitNotFound:
            pass
    z = None
    for k in range(1, homotopy_steps + 1):
        dk = dp.replace(A=dp.A * k / homotopy_steps)
        orb = find_periodic_orbit(_asymptotic_guess(dk) if z is None else z, dk,
                                  symmetric_constraint=True, cfg=cfg)
        z = np.array(orb.z_star)
    return orb


def conjugate_orbit(orbit: PeriodicOrbit, dp: DimlessParams,
                    cfg: IntegratorConfig | None = None) -> PeriodicOrbit:
    """Mirror image of an orbit: R applied after a half-period shift."""
    z = R * half_map(np.array(orbit.z_star), dp, cfg)
    return make_orbit(z, dp, cfg)


# ----------------------------------------------------------------------------
# attractors and orbit census

def _dedupe(orbits, tol=1e-4):
    out = []
    for o in orbits:
        if all(np.max(np.abs(np.subtract(o.z_star, p.z_star))) > tol for p in out):
            out.append(o)
    return out


def seed_attractors(dp: DimlessParams, seeds=DEFAULT_SEEDS, n_periods=300,
                    cfg: IntegratorConfig | None = None):
    """Stable orbits reached from a fixed seed set.

    Each seed is integrated for ``n_periods`` and the end state polished by
    Newton.  Seeds whose trajectory leaves the chart are skipped.
    """
    found = []
    for s in seeds:
        try:
            z = propagate(np.asarray(s, dtype=float), 0.0, n_periods * dp.period, dp, cfg)
            orb = find_periodic_orbit(z, dp, cfg=cfg)
        except (IntegrationError, OrbitNotFound) as exc:
            log.info("seed %s discarded: %s", s, exc)
            continue
        if orb.stable:
            found.append(orb)
    return _dedupe(found)


def orbit_census(dp: DimlessParams, seeds=DEFAULT_SEEDS, n_periods=300,
                 cfg: IntegratorConfig | None = None):
    """All periodic orbits the toolkit can locate at one parameter point.

    Combines seeded attractors, the symmetric orbit (constrained Newton),
    conjugates of every asymmetric orbit, and unstable asymmetric orbits
    searched for on segments between the symmetric orbit and each stable
    asymmetric one.

    Returns
    -------
    list of PeriodicOrbit, symmetric first, then asymmetric by phi_bar.
    """
    orbits = list(seed_attractors(dp, seeds, n_periods, cfg))
    try:
        sym = symmetric_orbit(dp, cfg=cfg)
        orbits.insert(0, sym)
    except OrbitNotFound:
        sym = None
    orbits = _dedupe(orbits)
    if sym is not None:
        zs = np.array(sym.z_star)
        for o in [o for o in orbits if not o.symmetric and o.stable]:
            za = np.array(o.z_star)
            for frac in (0.5, 0.35, 0.65, 0.2, 0.8):
                try:
                    cand = find_periodic_orbit(zs + frac * (za - zs), dp, cfg=cfg)
                except OrbitNotFound:
                    continue
                if cand.symmetric or not all(
                        np.max(np.abs(np.subtract(cand.z_star, p.z_star))) > 1e-4 for p in orbits):
                    continue
                orbits.append(cand)
                break
    for o in [o for o in orbits if not o.symmetric]:
        try:
            orbits.append(conjugate_orbit(o, dp, cfg))
        except (IntegrationError, OrbitNotFound):
            pass
    orbits = _dedupe(orbits)
    orbits.sort(key=lambda o: (not o.symmetric, o.phi_bar))
    return orbits


# ----------------------------------------------------------------------------
# continuation

@dataclass(frozen=True)
class BranchPoint:
    param: float
    orbit: PeriodicOrbit
    branch_id: int


@dataclass(frozen=True)
class Bifurcation:
    kind: str
    param: str
    value: float
    branch_id: int = 0
    orbit: PeriodicOrbit | None = field(default=None, compare=False, repr=False)

    def to_dict(self):
        return {"kind": self.kind, "param": self.param, "value": self.value}


@dataclass
class Branch:
    """Solution branches of a one-parameter sweep.

    ``branch_id`` 0 is the symmetric branch, odd ids are asymmetric branches
    and the following even id is the mirror image of the preceding one.
    """

    param: str
    points: list = field(default_factory=list)
    markers: list = field(default_factory=list)

    def branch(self, branch_id):
        return [p for p in self.points if p.branch_id == branch_id]

    def write_csv(self, fh):
        buf = io.StringIO()
        buf.write("param,phi_bar,v_bar,theta_drift,re_l1,im_l1,re_l2,im_l2,"
                  "re_l3,im_l3,stable,branch_id\n")
        for p in self.points:
            o = p.orbit
            lam = []
            for m in o.multipliers:
                lam += [m.real, m.imag]
            vals = [p.param, o.phi_bar, o.v_bar, o.theta_drift, *lam]
            buf.write(",".join(repr(float(x)) for x in vals)
                      + f",{int(o.stable)},{p.branch_id}\n")
        fh.write(buf.getvalue())

    def markers_json(self):
        return json.dumps([m.to_dict() for m in self.markers], indent=2)


def _set(dp, name, value):
    if name == "omega":
        return dp.replace(omega=value)
    if name == "delta":
        return dp.replace(delta=value)
    raise ValueError(f"unsupported continuation parameter {name!r}")


def _get(dp, name):
    return getattr(dp, name)


class _Tracker:
    """Shared machinery for continuation in one parameter."""

    def __init__(self, dp, name, lo, hi, cfg):
        self.dp = dp
        self.name = name
        self.lo, self.hi = lo, hi
        self.cfg = cfg
        self.pscale = hi - lo

    def G(self, z, p):
        return stroboscopic_map(z, _set(self.dp, self.name, p), self.cfg) - z

    def jac(self, z, p):
        dp = _set(self.dp, self.name, p)
        Pz, J = map_jacobian(z, dp, cfg=self.cfg)
        hp = 1e-6 * max(1.0, abs(p))
        Gp = (stroboscopic_map(z, _set(self.dp, self.name, p + hp), self.cfg)
              - stroboscopic_map(z, _set(self.dp, self.name, p - hp), self.cfg)) / (2 * hp)
        return Pz - z, J - np.eye(3), Gp

    # unknowns u = (z, p / pscale)
    def tangent(self, u, orient=None):
        z, p = u[:3], u[3] * self.pscale
        _, Jz, Gp = self.jac(z, p)
        Mx = np.hstack([Jz, (Gp * self.pscale)[:, None]])
        t = np.linalg.svd(Mx)[2][-1]
        if orient is not None and np.dot(t, orient) < 0:
            t = -t
        return t

    def correct(self, u_pred, tvec, tol=1e-10, max_iter=12):
        """Newton on G(z, p) = 0 with the constraint t . (u - u_pred) = 0."""
        u = np.array(u_pred, dtype=float)
        for it in range(max_iter):
            z, p = u[:3], u[3] * self.pscale
            if not self.lo - 0.5 * self.pscale <= p <= self.hi + 0.5 * self.pscale:
                raise ContinuationError("corrector left the parameter range")
            try:
                g, Jz, Gp = self.jac(z, p)
            except IntegrationError as exc:
                raise ContinuationError(str(exc)) from None
            res = np.concatenate([g, [np.dot(tvec, u - u_pred)]])
            if np.max(np.abs(res)) <= tol and it > 0:
                return u
            M = np.vstack([np.hstack([Jz, (Gp * self.pscale)[:, None]]), tvec])
            try:
                du = np.linalg.solve(M, -res)
            except np.linalg.LinAlgError:
                raise ContinuationError("singular augmented Jacobian") from None
            u = u + du
            if np.max(np.abs(du)) <= 1e-13:
                g = self.G(u[:3], u[3] * self.pscale)
                if np.max(np.abs(g)) <= 1e-9:
                    return u
        g = self.G(u[:3], u[3] * self.pscale)
        if np.max(np.abs(g)) <= 1e-9:
            return u
        raise ContinuationError("pseudo-arclength corrector did not converge")

    def orbit_at(self, u):
        p = u[3] * self.pscale
        return p, make_orbit(u[:3], _set(self.dp, self.name, p), self.cfg)


def _trace_symmetric(tr: _Tracker, start_z, p0, p_end, step):
    """Natural-parameter continuation of the symmetric branch."""
    pts = []
    dp0 = _set(tr.dp, tr.name, p0)
    orb = find_periodic_orbit(start_z, dp0, symmetric_constraint=True, cfg=tr.cfg)
    pts.append((p0, orb))
    h = math.copysign(step, p_end - p0)
    p = p0
    while (p_end - p) * h > 1e-12:
        p_new = p + h
        if (p_end - p_new) * h < 0:
            p_new = p_end
        z_pred = np.array(pts[-1][1].z_star)
        if len(pts) > 1:
            (pa, oa), (pb, ob) = pts[-2], pts[-1]
            z_pred = z_pred + (np.array(ob.z_star) - np.array(oa.z_star)) / (pb - pa) * (p_new - pb)
        try:
            orb = find_periodic_orbit(z_pred, _set(tr.dp, tr.name, p_new),
                                      symmetric_constraint=True, cfg=tr.cfg, max_iter=20)
        except (OrbitNotFound, IntegrationError):
            h *= 0.5
            if abs(h) < 1e-6:
                raise ContinuationError(f"symmetric branch lost near {tr.name}={p:.6g}")
            continue
        pts.append((p_new, orb))
        p = p_new
        h = math.copysign(min(abs(h) * 2, step), h)
    return pts


def _bisect_pitchfork(tr: _Tracker, pa, oa, pb, ob, tol):
    """Refine a stability change on the symmetric branch to ``tol``."""
    ga, gb = oa.rho - 1, ob.rho - 1
    za = np.array(oa.z_star)
    while abs(pb - pa) > tol:
        pm = 0.5 * (pa + pb)
        om = find_periodic_orbit(za, _set(tr.dp, tr.name, pm), symmetric_constraint=True,
                                 cfg=tr.cfg)
        gm = om.rho - 1
        if (gm > 0) == (ga > 0):
            pa, oa, ga, za = pm, om, gm, np.array(om.z_star)
        else:
            pb, ob, gb = pm, om, gm
    # report the endpoint whose multiplier is closest to 1
    return (pa, oa) if abs(ga) <= abs(gb) else (pb, ob)


def _refine_fold(tr: _Tracker, u_k, t_k, s_lo, s_hi, tol):
    """Bisection on the sign of the parameter component of the tangent."""
    def point(s):
        u = tr.correct(u_k + s * t_k, t_k)
        return u, tr.tangent(u, orient=t_k)[3]
    ua, ta = point(s_lo)
    ub, tb = point(s_hi)
    if ta * tb > 0:
        return u_k
    while True:
        sm = 0.5 * (s_lo + s_hi)
        um, tm = point(sm)
        if (tm > 0) == (ta > 0):
            s_lo, ua, ta = sm, um, tm
        else:
            s_hi, ub, tb = sm, um, tm
        if abs(ua[3] - ub[3]) * tr.pscale <= tol and abs(s_hi - s_lo) <= 1e-3:
            return um


def _trace_arclength(tr: _Tracker, u0, t0, ds=0.02, ds_min=1e-6, ds_max=0.05,
                     max_points=400, fold_tol=1e-4, stop_symmetric=True):
    """Pseudo-arclength continuation from u0 along the direction t0.

    Returns (list of u, list of fold u's).
    """
    us = [np.array(u0, dtype=float)]
    folds = []
    tvec = np.array(t0, dtype=float) / np.linalg.norm(t0)
    prev_dp = None
    while len(us) < max_points:
        u = us[-1]
        try:
            u_new = tr.correct(u + ds * tvec, tvec)
        except ContinuationError:
            ds *= 0.5
            if ds < ds_min:
                log.info("arclength continuation stopped: step floor reached")
                break
            continue
        if np.linalg.norm(u_new - u) > 3 * ds:
            ds *= 0.5
            if ds < ds_min:
                break
            continue
        p_new = u_new[3] * tr.pscale
        if not tr.lo <= p_new <= tr.hi:
            break
        t_new = u_new - u
        t_new /= np.linalg.norm(t_new)
        dpar = u_new[3] - u[3]
        if prev_dp is not None and dpar * prev_dp < 0 and abs(dpar) > 1e-12:
            try:
                folds.append(_refine_fold(tr, u, tvec, -np.linalg.norm(u - us[-2]),
                                          np.linalg.norm(u_new - u), fold_tol))
            except ContinuationError as exc:
                log.warning("fold refinement failed: %s", exc)
                folds.append(u)
        prev_dp = dpar
        us.append(u_new)
        tvec = t_new
        if stop_symmetric and abs(u_new[0]) < 1e-3 and len(us) > 3:
            dpx = _set(tr.dp, tr.name, p_new)
            if _is_symmetric(u_new[:3], dpx, tr.cfg, tol=1e-5):
                break
        ds = min(ds * 1.3, ds_max)
    return us, folds


def continue_branch(start: PeriodicOrbit, param: str, bounds, dp: DimlessParams,
                    step=None, eps_phi=0.05, cfg: IntegratorConfig | None = None,
                    pitchfork_tol=1e-4, max_points=400) -> Branch:
    """Trace the orbit family through ``start`` over ``bounds`` in ``param``.

    A symmetric ``start`` is followed by natural-parameter continuation with
    secant prediction and symmetric-constrained Newton correction.  Real
    multiplier crossings of +1 are refined by bisection and reported as
    pitchforks; from each, the asymmetric branch is seeded at the
    eigenvector offset ``eps_phi`` in phi and followed by pseudo-arclength
    continuation, with folds located where the parameter component of the
    branch tangent changes sign.  Mirror images of asymmetric branches are
    obtained by conjugation.  An asymmetric ``start`` is followed in both
    directions with natural-parameter steps, switching to pseudo-arclength
    after two failed steps.
    """
    lo, hi = map(float, bounds)
    if not lo < hi:
        raise ValueError("bounds must be increasing")
    p_start = _get(dp, param)
    if not lo <= p_start <= hi:
        raise ValueError(f"start {param}={p_start} outside {bounds}")
    tr = _Tracker(dp, param, lo, hi, cfg)
    step = step or (hi - lo) / 40
    br = Branch(param)
    next_id = 1

    if start.symmetric:
        z0 = np.array(start.z_star)
        down = _trace_symmetric(tr, z0, p_start, lo, step)
        up = _trace_symmetric(tr, z0, p_start, hi, step)
        sym = down[::-1] + up[1:]
        for p, o in sym:
            br.points.append(BranchPoint(p, o, 0))
        for (pa, oa), (pb, ob) in zip(sym[:-1], sym[1:]):
            if (oa.rho - 1) * (ob.rho - 1) >= 0:
                continue
            p_star, o_star = _bisect_pitchfork(tr, pa, oa, pb, ob, pitchfork_tol)
            lead = o_star.leading_multiplier
            if abs(lead.imag) > 1e-6 or lead.real < 0:
                log.info("non-pitchfork stability change at %s=%.6g", param, p_star)
                continue
            br.markers.append(Bifurcation("pitchfork", param, p_star, 0, o_star))
            # asymmetric branch seeded along the critical eigenvector
            dps = _set(dp, param, p_star)
            zs = np.array(o_star.z_star)
            _, J = map_jacobian(zs, dps, cfg=cfg)
            w, V = np.linalg.eig(J)
            e = np.real(V[:, np.argmin(np.abs(w - 1))])
            e = e / e[0] if abs(e[0]) > 1e-8 else e / np.linalg.norm(e)
            u_s = np.concatenate([zs, [p_star / tr.pscale]])
            t0 = np.concatenate([e, [0.0]])
            t0 /= np.linalg.norm(t0)
            try:
                u1 = tr.correct(u_s + eps_phi * np.linalg.norm(np.concatenate([e, [0]])) * t0, t0)
            except ContinuationError as exc:
                log.warning("could not seed asymmetric branch: %s", exc)
                continue
            us, folds = _trace_arclength(tr, u1, u1 - u_s, max_points=max_points)
            bid = next_id
            next_id += 2
            _append_asym(br, tr, us, bid)
            for uf in folds:
                pf, of = tr.orbit_at(uf)
                br.markers.append(Bifurcation("fold", param, pf, bid, of))
    else:
        bid = next_id
        us_all = []
        for direction in (-1, 1):
            us = _trace_natural(tr, start, p_start, lo if direction < 0 else hi, step,
                                max_points)
            us_all = us[::-1] + us_all[1:] if direction < 0 else us_all + us[1:]
        _append_asym(br, tr, us_all, bid)
        ps = [u[3] for u in us_all]
        for k in range(1, len(ps) - 1):
            if (ps[k] - ps[k - 1]) * (ps[k + 1] - ps[k]) < 0:
                tk = us_all[k + 1] - us_all[k - 1]
                tk /= np.linalg.norm(tk)
                try:
                    uf = _refine_fold(tr, us_all[k], tk,
                                      -np.linalg.norm(us_all[k] - us_all[k - 1]),
                                      np.linalg.norm(us_all[k + 1] - us_all[k]), 1e-4)
                except ContinuationError:
                    uf = us_all[k]
                pf, of = tr.orbit_at(uf)
                br.markers.append(Bifurcation("fold", param, pf, bid, of))
    br.markers.sort(key=lambda m: (m.kind != "pitchfork", m.value))
    return br


def _append_asym(br, tr, us, bid):
    for u in us:
        try:
            p, o = tr.orbit_at(u)
        except OrbitNotFound:
            continue
        br.points.append(BranchPoint(p, o, bid))
        dpx = _set(tr.dp, tr.name, p)
        try:
            br.points.append(BranchPoint(p, conjugate_orbit(o, dpx, tr.cfg), bid + 1))
        except (OrbitNotFound, IntegrationError):
            pass


def _trace_natural(tr: _Tracker, start, p0, p_end, step, max_points):
    """Natural-parameter steps, handing over to pseudo-arclength after two failures."""
    us = [np.concatenate([np.array(start.z_star), [p0 / tr.pscale]])]
    h = math.copysign(step, p_end - p0)
    failures = 0
    while len(us) < max_points and (p_end - us[-1][3] * tr.pscale) * h > 1e-12:
        p = us[-1][3] * tr.pscale
        p_new = p + h
        if (p_end - p_new) * h < 0:
            p_new = p_end
        z_pred = us[-1][:3].copy()
        if len(us) > 1:
            dz = (us[-1][:3] - us[-2][:3]) / ((us[-1][3] - us[-2][3]) * tr.pscale)
            z_pred = z_pred + dz * (p_new - p)
        try:
            orb = find_periodic_orbit(z_pred, _set(tr.dp, tr.name, p_new), cfg=tr.cfg,
                                      max_iter=20)
            if orb.symmetric:
                raise OrbitNotFound("jumped to the symmetric branch")
        except (OrbitNotFound, IntegrationError):
            failures += 1
            if failures >= 2 and len(us) > 1:
                tvec = us[-1] - us[-2]
                more, _ = _trace_arclength(tr, us[-1], tvec,
                                           ds=np.linalg.norm(tvec),
                                           max_points=max_points - len(us))
                return us + more[1:]
            h *= 0.5
            if abs(h) < 1e-6:
                break
            continue
        failures = 0
        us.append(np.concatenate([np.array(orb.z_star), [p_new / tr.pscale]]))
    return us


# ----------------------------------------------------------------------------
# stability boundary

def _boundary_point(args):
    delta, dp, lo, hi, n_scan, tol, cfg = args
    dpd = dp.replace(delta=delta)
    try:
        orb = symmetric_orbit(dpd.replace(omega=hi), cfg=cfg)
    except OrbitNotFound as exc:
        return delta, math.nan, f"no symmetric orbit at omega={hi}: {exc}"
    if orb.rho >= 1:
        return delta, math.nan, f"symmetric orbit unstable at upper bracket omega={hi}"
    tr = _Tracker(dpd, "omega", lo, hi, cfg)
    grid = np.linspace(hi, lo, n_scan + 1)
    prev_p, prev_o = hi, orb
    for p in grid[1:]:
        try:
            o = find_periodic_orbit(np.array(prev_o.z_star), dpd.replace(omega=p),
                                    symmetric_constraint=True, cfg=cfg)
        except OrbitNotFound:
            try:
                seg = _trace_symmetric(tr, np.array(prev_o.z_star), prev_p, p,
                                       (prev_p - p) / 4)
            except ContinuationError as exc:
                return delta, math.nan, str(exc)
            o = seg[-1][1]
        if o.rho >= 1:
            p_star, _ = _bisect_pitchfork(tr, prev_p, prev_o, p, o, tol)
            return delta, p_star, "ok"
        prev_p, prev_o = p, o
    return delta, math.nan, f"no stability change in [{lo}, {hi}]"


def stability_boundary(delta_grid, dp: DimlessParams, omega_bracket=(3.0, 14.0),
                       cfg: IntegratorConfig | None = None, tol=1e-3, n_scan=44,
                       jobs=1):
    """Pitchfork frequency of the symmetric orbit for each delta.

    For every delta the symmetric orbit is followed downward from the upper
    end of ``omega_bracket`` (where it must be stable) until its largest
    multiplier exceeds one; the crossing is then bisected to ``tol``.

    Returns
    -------
    list of (delta, omega_star, status)
        ``omega_star`` is NaN and ``status`` explains why when a grid point
        fails; other points are unaffected.
    """
    lo, hi = omega_bracket
    tasks = [(float(d), dp, lo, hi, n_scan, tol, cfg) for d in delta_grid]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_boundary_point, tasks))
    return [_boundary_point(t) for t in tasks]
