import os
import subprocess
import sys

import numpy as np
import pytest

from twistcar import kernels
from twistcar.dynamics import jacobian_dimless, rhs_dimless
from twistcar.integrator import IntegratorConfig, integrate

needs_ext = pytest.mark.skipif("cython" not in kernels.available_backends(),
                               reason="compiled extension not built")


def _y0(mode):
    y = np.array([0.3, -0.2, 0.01])
    if mode == 1:
        return np.concatenate([y, [0.5, -0.1, 0.2]])
    if mode == 2:
        return np.concatenate([y, np.eye(3).ravel()])
    return y


@needs_ext
@pytest.mark.parametrize("mode", [0, 1, 2])
def test_backends_agree(dp, mode):
    args = (_y0(mode), 0.0, 3 * dp.period, dp.as_tuple(), 1e-10, 1e-12, 0.0, 0.0, 10 ** 6, mode, True)
    a = kernels.get_flow("cython")(*args)
    b = kernels.get_flow("python")(*args)
    assert a[0] == b[0] == 0
    assert np.max(np.abs(a[2] - b[2])) < 1e-12
    assert len(a[5]) == len(b[5])
    assert np.allclose(a[5], b[5], rtol=1e-6, atol=0)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_state_mode_matches_generic_integrator(dp, backend):
    flow = kernels.get_flow(backend)
    y = flow(_y0(0), 0.0, 2 * dp.period, dp.as_tuple(), 1e-11, 1e-13, 0.0, 0.0, 10 ** 6, 0, False)[2]
    ref = integrate(lambda t, z: rhs_dimless(t, z, dp), (0.0, 2 * dp.period), _y0(0),
                    IntegratorConfig(rtol=1e-12, atol=1e-14), dense=False).y[-1]
    assert np.max(np.abs(y - ref)) < 1e-9


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_stm_mode_matches_variational(dp, backend):
    flow = kernels.get_flow(backend)
    T = dp.period

    def aug(t, y):
        Phi = y[3:].reshape(3, 3)
        return np.concatenate([rhs_dimless(t, y[:3], dp),
                               (jacobian_dimless(t, y[:3], dp) @ Phi).ravel()])
    y = flow(_y0(2), 0.0, T, dp.as_tuple(), 1e-11, 1e-13, 0.0, 0.0, 10 ** 6, 2, False)[2]
    ref = integrate(aug, (0.0, T), _y0(2), IntegratorConfig(rtol=1e-12, atol=1e-14),
                    dense=False).y[-1]
    assert np.max(np.abs(y - ref)) < 1e-8


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_chart_exit_status(dp, backend):
    flow = kernels.get_flow(backend)
    out = flow(np.array([3.1, -5.0, 0.0]), 0.0, 5.0, dp.as_tuple(), 1e-8, 1e-10, 0.0, 0.0,
               10 ** 6, 0, False)
    assert out[0] == 3 and abs(out[2][0]) >= np.pi


def test_env_var_forces_fallback():
    env = dict(os.environ, TWISTCAR_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import twistcar; print(twistcar.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_flow("fortran")
