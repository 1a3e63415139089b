import io
import json
import math

import numpy as np
import pytest

from twistcar import poincare as pm
from twistcar.dynamics import REVERSAL, propagate

Z_SYM_688 = (-0.44314092, -0.61262235, 0.03575222)


@pytest.fixture(scope="module")
def sym688(dp):
    return pm.symmetric_orbit(dp)


@pytest.fixture(scope="module")
def orbits54(dp):
    d = dp.replace(omega=5.4)
    return d, pm.orbit_census(d)


def test_symmetric_orbit_688(dp, sym688):
    o = sym688
    assert np.allclose(o.z_star, Z_SYM_688, atol=1e-7)
    assert o.symmetric and o.stable
    assert np.max(np.abs(pm.stroboscopic_map(o.z_star, dp) - o.z_star)) <= 1e-9
    assert abs(o.phi_bar) <= 1e-7 and abs(o.theta_drift) <= 1e-7
    assert np.max(np.abs(REVERSAL * pm.half_map(o.z_star, dp) - o.z_star)) <= 1e-7
    assert o.rho == pytest.approx(0.90219, abs=1e-4)


def test_unconstrained_newton_finds_same_orbit(dp, sym688):
    o = pm.find_periodic_orbit(np.array(Z_SYM_688) + 0.01, dp)
    assert np.allclose(o.z_star, sym688.z_star, atol=1e-8)


def test_fd_and_variational_jacobians(dp, sym688):
    for z in (sym688.z_star, (0.3, -0.2, 0.02), (-1.0, 0.4, 0.0)):
        _, Jv = pm.map_jacobian(z, dp, method="variational")
        _, Jf = pm.map_jacobian(z, dp, method="fd")
        assert np.max(np.abs(Jv - Jf)) < 1e-5
    lam_fd = pm.floquet(sym688, dp, method="fd")
    assert np.allclose(np.abs(lam_fd), np.abs(sym688.multipliers), atol=1e-5)


def test_unactuated_map(dp):
    d0 = dp.replace(A=0.0)
    assert np.array_equal(pm.stroboscopic_map(np.zeros(3), d0), np.zeros(3))
    z = pm.stroboscopic_map(np.array([0.2, 0.3, 0.1]), d0)
    assert abs(z[1]) < 0.3 and abs(z[2]) < 0.1
    # linearized decay map at the origin: phi is neutral, sigma and v decay
    q = 2 * d0.alpha ** 2 / (d0.delta ** 2 + d0.eta)
    T = d0.period
    lam = np.sort(np.abs(pm.floquet(np.zeros(3), d0)))
    assert lam == pytest.approx(np.sort([1.0, math.exp(-q * T), math.exp(-3 * T)]), abs=1e-9)


def test_asymmetric_coexistence(orbits54):
    d, orbits = orbits54
    sym = [o for o in orbits if o.symmetric]
    assert len(sym) == 1 and not sym[0].stable
    stable = [o for o in orbits if o.stable]
    assert len(stable) == 2
    assert stable[0].phi_bar == pytest.approx(-stable[1].phi_bar, abs=1e-8)
    # net rotation per period is small but far above the symmetric orbit's zero
    assert all(abs(o.theta_drift) > 1e-4 for o in stable)
    assert abs(sym[0].theta_drift) < 1e-7


def test_map_iteration_reaches_asymmetric(orbits54):
    d, orbits = orbits54
    z = np.array([1.0, 0.0, 0.0])
    for _ in range(400):
        z = pm.stroboscopic_map(z, d)
    target = [o for o in orbits if o.stable and o.phi_bar > 0][0]
    assert np.max(np.abs(z - target.z_star)) < 1e-4


def test_conjugates(orbits54):
    d, orbits = orbits54
    for o in orbits:
        if o.symmetric:
            continue
        c = pm.conjugate_orbit(o, d)
        assert c.phi_bar == pytest.approx(-o.phi_bar, abs=1e-8)
        assert c.theta_drift == pytest.approx(-o.theta_drift, abs=1e-8)
        assert np.sort(np.abs(c.multipliers)) == pytest.approx(np.sort(np.abs(o.multipliers)),
                                                              abs=1e-7)


def test_perturbed_stability(orbits54):
    d, orbits = orbits54
    rng = np.random.default_rng(5)
    for o in orbits:
        z0 = np.array(o.z_star) + 1e-4 * rng.standard_normal(3)
        # unstable orbits are followed until the perturbation has grown
        n = 200 if o.stable else 150
        z = propagate(z0, 0.0, n * d.period, d)
        dev = np.max(np.abs(z - o.z_star))
        if o.stable:
            assert dev < 1e-2
        else:
            assert dev > 1e-1


def test_newton_failure_reported(dp):
    with pytest.raises(pm.OrbitNotFound):
        pm.find_periodic_orbit([2.5, 3.0, 0.5], dp, max_iter=1)
    with pytest.raises(pm.OrbitNotFound):
        pm.find_periodic_orbit([np.nan, 0, 0], dp)


def test_no_markers_far_above_fold(dp):
    d8 = dp.replace(omega=8.0)
    br = pm.continue_branch(pm.symmetric_orbit(d8), "omega", (7.5, 8.0), d8)
    assert not br.markers
    assert {p.branch_id for p in br.points} == {0}
    assert all(p.orbit.symmetric and p.orbit.stable for p in br.points)


@pytest.fixture(scope="module")
def omega_branch(dp):
    d8 = dp.replace(omega=8.0)
    return pm.continue_branch(pm.symmetric_orbit(d8), "omega", (5.0, 8.0), d8)


def test_branch_markers(omega_branch):
    kinds = {m.kind: m.value for m in omega_branch.markers}
    assert kinds["pitchfork"] == pytest.approx(6.041943, abs=1e-3)
    assert kinds["fold"] == pytest.approx(6.810977, abs=1e-3)
    pf = [m for m in omega_branch.markers if m.kind == "pitchfork"][0]
    lead = pf.orbit.leading_multiplier
    assert abs(lead.imag) < 1e-9 and abs(lead.real - 1) <= 1e-3


def test_branch_connected_and_mirrored(omega_branch):
    ids = sorted({p.branch_id for p in omega_branch.points})
    assert ids[0] == 0 and len(ids) >= 3
    for bid in ids[1:]:
        if bid % 2:
            a = omega_branch.branch(bid)
            b = omega_branch.branch(bid + 1)
            assert len(a) == len(b)
            for pa, pb in zip(a, b):
                assert pa.param == pb.param
                assert pa.orbit.phi_bar == pytest.approx(-pb.orbit.phi_bar, abs=1e-7)
    sym = omega_branch.branch(0)
    w = [p.param for p in sym]
    assert w == sorted(w)
    assert max(np.diff(w)) <= 3.0 / 40 + 1e-12


def test_branch_exports(omega_branch):
    buf = io.StringIO()
    omega_branch.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ("param,phi_bar,v_bar,theta_drift,re_l1,im_l1,re_l2,im_l2,"
                        "re_l3,im_l3,stable,branch_id")
    assert len(lines) == len(omega_branch.points) + 1
    assert all(len(l.split(",")) == 12 for l in lines)
    marks = json.loads(omega_branch.markers_json())
    assert {m["kind"] for m in marks} == {"pitchfork", "fold"}
    assert all(set(m) == {"kind", "param", "value"} for m in marks)


def test_pitchfork_neighbourhood(dp):
    w_star = 6.041943
    below = dp.replace(omega=w_star - 0.05)
    orbits = pm.orbit_census(below)
    asym = [o for o in orbits if not o.symmetric]
    assert len(asym) == 2 and asym[0].phi_bar * asym[1].phi_bar < 0
    assert not [o for o in orbits if o.symmetric][0].stable
    above = pm.orbit_census(dp.replace(omega=w_star + 0.05))
    assert [o for o in above if o.symmetric][0].stable
    # the pitchfork is subcritical: the small-|phi_bar| unstable pair lives above it
    near = [o for o in above if not o.symmetric and abs(o.phi_bar) < 0.2]
    assert len(near) == 2 and not any(o.stable for o in near)


def test_stability_boundary_monotone(dp):
    deltas = [0.05, 0.0735, 0.1, 0.15, 0.2, 0.3]
    res = pm.stability_boundary(deltas, dp)
    assert all(s == "ok" for _, _, s in res)
    w = [x for _, x, _ in res]
    assert all(a > b for a, b in zip(w, w[1:]))
    assert w[1] == pytest.approx(6.88, abs=0.02)
    assert w[2] == pytest.approx(6.03, abs=0.05)


def test_stability_boundary_reports_bad_bracket(dp):
    (d, w, status), = pm.stability_boundary([0.1], dp, omega_bracket=(3.0, 5.0))
    assert math.isnan(w) and "unstable" in status
