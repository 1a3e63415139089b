"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the full list is printed in the
``acceptance criteria`` section of the pytest terminal summary.
"""
import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from criteria import record
from oracle import galerkin, oracle_deviation, random_draw
from test_hbalance import _r_sigma, _r_speed, _r_steer
from twistcar import hbalance as hb
from twistcar import poincare as pm
from twistcar.asymptotics import mean_speed_asymptotic, optimal_delta
from twistcar.dynamics import REVERSAL, rhs_dimless
from twistcar.model import TABLE1, nondimensionalize, redimensionalize

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def dp():
    return nondimensionalize(TABLE1, 1.72)


@pytest.fixture(scope="module")
def omega_branch(dp):
    t0 = time.perf_counter()
    d8 = dp.replace(omega=8.0)
    br = pm.continue_branch(pm.symmetric_orbit(d8), "omega", (5.0, 8.0), d8)
    return br, time.perf_counter() - t0


@pytest.fixture(scope="module")
def delta_branch(dp):
    d = dp.replace(delta=0.15)
    return pm.continue_branch(pm.symmetric_orbit(d), "delta", (0.03, 0.15), d)


def _marker(br, kind):
    vals = [m.value for m in br.markers if m.kind == kind]
    return vals[0] if vals else float("nan")


def test_1_frequency_bifurcations(omega_branch):
    br, elapsed = omega_branch
    pf, fold = _marker(br, "pitchfork"), _marker(br, "fold")
    ok = abs(pf - 6.03) <= 0.05 and abs(fold - 6.81) <= 0.05 and elapsed < 300
    record("1", ok, f"pitchfork omega={pf:.4f} (6.03+-0.05), fold omega={fold:.4f} "
                    f"(6.81+-0.05), {elapsed:.1f} s")
    assert ok


def test_2_com_bifurcations(delta_branch):
    pf, fold = _marker(delta_branch, "pitchfork"), _marker(delta_branch, "fold")
    ok = abs(pf - 0.0735) <= 0.003 and abs(fold - 0.098) <= 0.003
    record("2", ok, f"pitchfork delta={pf:.5f} (0.0735+-0.003), fold delta={fold:.5f} "
                    f"(0.098+-0.003)")
    assert ok


def test_3_asymmetric_mean_angle():
    d = nondimensionalize(TABLE1, 1.35)
    orbits = pm.orbit_census(d)
    asym = [o for o in orbits if o.stable and not o.symmetric]
    sym = [o for o in orbits if o.symmetric]
    phi = max(abs(o.phi_bar) for o in asym) if asym else float("nan")
    drift = min(abs(o.theta_drift) for o in asym) if asym else 0.0
    sym_unstable = bool(sym) and not sym[0].stable
    ok = abs(phi - 1.0343) <= 0.01 and drift > 0 and sym_unstable
    record("3", ok, f"omega={d.omega:.3f}: stable asymmetric |phi_bar|={phi:.4f} (1.0343+-0.01), "
                    f"|theta drift|={drift:.2e} per period, symmetric rho="
                    f"{sym[0].rho if sym else float('nan'):.4f}")
    assert ok


def test_4_mean_speed():
    out = []
    for d1, target in ((0.06, 0.01), (0.12, 2e-3)):
        d = nondimensionalize(TABLE1.replace(d1=d1), 1.72)
        attractors = pm.seed_attractors(d)
        orb = attractors[0]
        v = redimensionalize(d, orb.v_bar)
        out.append((d1, v, target, abs(v - target) <= 0.25 * target, len(attractors),
                    orb.symmetric))
    ok = all(o[3] for o in out)
    record("4", ok, "; ".join(f"d1={a}: v_bar={v:.5f} m/s vs {t:g}+-25% "
                              f"({'ok' if g else 'out'}, {n} attractor(s), "
                              f"{'symmetric' if s else 'asymmetric'})"
                              for a, v, t, g, n, s in out))
    assert ok


def test_5_multistability(dp):
    d = dp.replace(omega=6.4)
    orbits = pm.orbit_census(d)
    sym = [o for o in orbits if o.symmetric]
    asym = [o for o in orbits if not o.symmetric]
    stable_pairs = {round(abs(o.phi_bar), 6) for o in asym if o.stable}
    unstable_pairs = {round(abs(o.phi_bar), 6) for o in asym if not o.stable}
    conj_ok = all(any(abs(o.phi_bar + p.phi_bar) < 1e-6 for p in asym) for o in asym)
    ok = (len(sym) == 1 and sym[0].stable and len(stable_pairs) == 1
          and len(unstable_pairs) == 1 and len(asym) == 4 and conj_ok)
    record("5", ok, f"{len(sym)} symmetric (stable={sym[0].stable if sym else None}), "
                    f"stable asymmetric |phi_bar|={sorted(stable_pairs)}, unstable asymmetric "
                    f"|phi_bar|={sorted(unstable_pairs)}, {len(orbits)} orbits in total")
    assert ok


def test_6_asymptotics_vs_numerics(dp):
    d = dp.replace(A=0.1)
    worst = (0.0, None)
    for delta in (0.05, 0.1, 0.2):
        for w in np.linspace(4.0, 8.0, 9):
            dw = d.replace(delta=delta, omega=w)
            v_num = pm.symmetric_orbit(dw).v_bar
            err = abs(mean_speed_asymptotic(dw) - v_num) / v_num
            if err > worst[0]:
                worst = (err, (delta, float(w)))
    d688 = d.replace(omega=6.88)
    res = minimize_scalar(lambda x: -pm.symmetric_orbit(d688.replace(delta=x)).v_bar,
                          bounds=(0.05, 0.3), method="bounded", options={"xatol": 1e-5})
    d_opt = optimal_delta(d688)[0]
    err_opt = abs(res.x - d_opt) / d_opt
    ok = worst[0] <= 0.03 and err_opt <= 0.05
    record("6", ok, f"max mean-speed error {100 * worst[0]:.2f}% at (delta, omega)={worst[1]} "
                    f"(<=3%); numeric delta_opt={res.x:.5f} vs closed form {d_opt:.5f} "
                    f"({100 * err_opt:.2f}%, <=5%)")
    assert ok


def test_7_stability_curve_triple(dp):
    d = dp.replace(A=0.1)
    deltas = [0.05, 0.1, 0.15, 0.2, 0.25]
    rows = []
    prev = None
    for (x, w_p, status) in pm.stability_boundary(deltas, d):
        w_hb = hb.pitchfork_frequency_hb(x, d, omega_guess=prev)
        w_b9 = hb.pitchfork_frequency_asymptotic(x, d, source="B9_fixture", reference=w_hb)
        prev = w_hb
        rows.append((x, w_p, w_hb, w_b9, abs(w_hb - w_p) / w_p, abs(w_b9 - w_p) / w_p))
    hb_worst = max(r[4] for r in rows)
    b9_worst = max(r[5] for r in rows)
    ok = hb_worst <= 0.02 and b9_worst <= 0.05
    table = ", ".join(f"d={r[0]:.2f}: P={r[1]:.3f} HB={r[2]:.3f} B9={r[3]:.3f}" for r in rows)
    record("7", ok, f"max |HB-P|/P={100 * hb_worst:.1f}% (<=2%), max |B9-P|/P="
                    f"{100 * b9_worst:.1f}% (<=5%); {table}")
    assert ok


def test_8_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    devs = [oracle_deviation(*random_draw(rng), periods=10) for _ in range(50)]
    ok = max(devs) <= 1e-8
    record("8", ok, f"50 draws x 10 periods, max sup-norm gap {max(devs):.2e} (<=1e-8)")
    assert ok


def test_9a_reversal_symmetry(dp):
    worst = 0.0
    for t in np.linspace(0.0, dp.period, 13):
        for phi in np.linspace(-3.0, 3.0, 7):
            for sg in np.linspace(-2.0, 2.0, 5):
                for v in np.linspace(-0.5, 0.5, 5):
                    z = np.array([phi, sg, v])
                    lhs = REVERSAL * rhs_dimless(t, z, dp)
                    rhs = rhs_dimless(t + dp.period / 2, REVERSAL * z, dp)
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    ok = worst <= 1e-12
    record("9.1", ok, f"reversal identity on 2275 (t, z) points, max gap {worst:.1e} (<=1e-12)")
    assert ok


def test_9b_half_period_relation(dp):
    worst = 0.0
    for w in (5.4, 6.4, 6.88, 8.0):
        d = dp.replace(omega=w)
        o = pm.symmetric_orbit(d)
        worst = max(worst, float(np.max(np.abs(REVERSAL * pm.half_map(o.z_star, d) - o.z_star))))
    ok = worst <= 1e-7
    record("9.2", ok, f"symmetric orbits at omega in (5.4, 6.4, 6.88, 8): max half-period "
                      f"residual {worst:.1e} (<=1e-7)")
    assert ok


def test_9c_galerkin_closed_form(dp):
    rng = np.random.default_rng(9)
    worst = {"F1": 0.0, "sigma": 0.0, "speed": 0.0}
    for _ in range(100):
        w = rng.uniform(2, 12)
        d = dp.replace(omega=w)
        a, b, c = rng.uniform(-0.8, 0.8, 3), rng.uniform(-2, 2, 3), rng.uniform(-0.5, 0.5, 5)
        g = galerkin(_r_steer(a, b, c, d), w)
        worst["F1"] = max(worst["F1"], abs(hb.f1_closed_form(a, b, c, d.beta) + d.beta * g["mean"]))
        M, F, _ = hb.hb_sigma_system(a, d)
        g = galerkin(_r_sigma(a, b, d), w)
        worst["sigma"] = max(worst["sigma"], float(np.max(np.abs(
            M @ b - F + np.array([g["mean"], g["s1"], g["c1"]])))))
        M, F, _ = hb.hb_speed_system(a, b, d)
        g = galerkin(_r_speed(a, b, c, d), w)
        worst["speed"] = max(worst["speed"], float(np.max(np.abs(
            M @ c - F - np.array([g["mean"], g["c1"], g["s1"], g["c2"], g["s2"]])))))
    ok = max(worst.values()) <= 1e-10
    record("9.3", ok, "100 random points, max gap F1 {F1:.1e}, sigma system {sigma:.1e}, "
                      "speed system {speed:.1e} (<=1e-10)".format(**worst))
    assert ok


def test_9d_multiplier_at_pitchforks(dp, omega_branch, delta_branch):
    pitchforks = [m for br in (omega_branch[0], delta_branch) for m in br.markers
                  if m.kind == "pitchfork"]
    gaps = [abs(m.orbit.leading_multiplier - 1) for m in pitchforks]
    ok = len(gaps) >= 2 and max(gaps) <= 1e-3
    record("9.4", ok, f"{len(gaps)} pitchforks, max |lambda_max - 1| = {max(gaps):.1e} (<=1e-3)")
    assert ok


def test_9e_jacobian_routes(dp):
    worst = 0.0
    for w, z in ((6.88, pm.symmetric_orbit(dp).z_star), (5.4, (1.1, -0.05, 0.02)),
                 (6.4, (0.3, -0.4, 0.03))):
        d = dp.replace(omega=w)
        _, Jv = pm.map_jacobian(z, d, method="variational")
        _, Jf = pm.map_jacobian(z, d, method="fd")
        worst = max(worst, float(np.max(np.abs(Jv - Jf))))
    ok = worst <= 1e-5
    record("9.5", ok, f"finite-difference vs variational map Jacobian, max entry gap "
                      f"{worst:.1e} (<=1e-5)")
    assert ok
