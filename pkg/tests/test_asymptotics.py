import io
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from oracle import galerkin
from twistcar.asymptotics import (first_order_signals, mean_speed_asymptotic, optimal_delta,
                                  perturbation_coefficients, write_asymptotics_csv)
from twistcar.dynamics import propagate
from twistcar.poincare import symmetric_orbit


def test_coefficients_reference(dp_round):
    k = perturbation_coefficients(dp_round)
    assert k.q == pytest.approx(10.194, abs=1e-3)
    assert k.b1 == pytest.approx(3.092, abs=1e-3)
    assert k.b2 == pytest.approx(-2.087, abs=1e-3)
    assert k.a1 == pytest.approx(-0.6066, abs=1e-4)
    assert k.epsilon == pytest.approx(1.0 * 0.0118 * 6.88 ** 2)
    assert k.q > 0 and k.c0 > 0


def test_beta_one_freezes_steering(dp_round):
    k = perturbation_coefficients(dp_round.replace(beta=1.0))
    assert k.a1 == 0 and k.a2 == 0


@pytest.mark.parametrize("omega", [2.0, 4.0, 6.88, 10.0])
@pytest.mark.parametrize("delta", [0.02, 0.1, 0.3])
def test_c0_closed_form(dp_round, omega, delta):
    d = dp_round.replace(omega=omega, delta=delta)
    k = perturbation_coefficients(d)
    closed = delta / (6 * (4 * d.alpha ** 4 + (delta ** 2 + d.eta) ** 2 * omega ** 2))
    assert k.c0 == pytest.approx(closed, rel=1e-12)
    assert mean_speed_asymptotic(d) == pytest.approx(k.epsilon ** 2 * k.c0, rel=1e-12)


def test_coefficients_against_small_amplitude_orbit(dp):
    # Fourier components of a numerically computed weak-forcing orbit
    d = dp.replace(A=1e-4)
    k = perturbation_coefficients(d)
    orb = symmetric_orbit(d)
    tr = propagate(orb.z_star, 0.0, d.period, d, dense=True)
    eps = k.epsilon
    phi = galerkin(lambda t: tr(t)[:, 0], d.omega)
    sig = galerkin(lambda t: tr(t)[:, 1], d.omega)
    v = galerkin(lambda t: tr(t)[:, 2], d.omega)
    assert 2 * phi["s1"] / eps == pytest.approx(k.a1, rel=1e-3)
    assert 2 * phi["c1"] / eps == pytest.approx(k.a2, rel=1e-3)
    assert 2 * sig["s1"] / eps == pytest.approx(k.b1, rel=1e-3)
    assert 2 * sig["c1"] / eps == pytest.approx(k.b2, rel=1e-3)
    assert v["mean"] / eps ** 2 == pytest.approx(k.c0, rel=1e-3)
    assert 2 * v["s2"] / eps ** 2 == pytest.approx(k.c1, rel=1e-3)
    assert 2 * v["c2"] / eps ** 2 == pytest.approx(k.c2, rel=1e-3)


def test_mean_speed_examples(dp_round):
    assert mean_speed_asymptotic(dp_round.replace(delta=0.0)) == 0.0
    assert mean_speed_asymptotic(dp_round.replace(A=0.5)) == pytest.approx(0.0181, abs=1e-4)
    a = mean_speed_asymptotic(dp_round.replace(A=0.3))
    assert mean_speed_asymptotic(dp_round.replace(A=0.6)) == pytest.approx(4 * a, rel=1e-14)


def test_optimal_delta(dp_round):
    d_opt, v_max = optimal_delta(dp_round)
    assert d_opt == pytest.approx(0.128, abs=5e-4)
    res = minimize_scalar(lambda x: -mean_speed_asymptotic(dp_round.replace(delta=x)),
                          bounds=(0.01, 0.5), method="bounded", options={"xatol": 1e-9})
    assert res.x == pytest.approx(d_opt, rel=1e-6)
    assert v_max == pytest.approx(-res.fun, rel=1e-12)


def test_optimal_delta_small_alpha(dp_round):
    d = dp_round.replace(alpha=1e-6)
    assert optimal_delta(d)[0] == pytest.approx(math.sqrt(d.eta / 3), rel=1e-6)


def test_optimal_delta_decreases_with_omega(dp_round):
    vals = [optimal_delta(dp_round.replace(omega=w))[0] for w in np.linspace(2, 10, 17)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_first_order_signals_match_orbit(dp):
    d = dp.replace(A=0.05)
    orb = symmetric_orbit(d)
    t = np.linspace(0.0, d.period, 300)
    sim = propagate(orb.z_star, 0.0, d.period, d, dense=True)(t)
    approx = first_order_signals(d, t)
    rel = np.max(np.abs(sim - approx), axis=0) / np.max(np.abs(sim), axis=0)
    assert np.all(rel <= 0.05)


def test_error_shrinks_with_amplitude(dp):
    errs = []
    for A in (1.0, 0.5, 0.1):
        d = dp.replace(A=A)
        v_num = symmetric_orbit(d).v_bar
        errs.append(abs(v_num - mean_speed_asymptotic(d)) / v_num)
    assert errs[0] > errs[1] > errs[2]


def test_large_amplitude_optimum_exceeds_asymptotic(dp):
    d = dp.replace(A=1.0)
    res = minimize_scalar(lambda x: -symmetric_orbit(d.replace(delta=x)).v_bar,
                          bounds=(0.08, 0.4), method="bounded", options={"xatol": 1e-4})
    assert res.x > optimal_delta(d)[0] * 1.1


def test_csv_export(dp_round):
    buf = io.StringIO()
    write_asymptotics_csv(buf, [dp_round.replace(omega=w) for w in (4.0, 6.0)])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "omega,delta,v_bar_asym,delta_opt,v_bar_max"
    assert [float(x) for x in lines[2].split(",")][:2] == [6.0, 0.1]
