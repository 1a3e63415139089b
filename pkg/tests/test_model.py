import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistcar.model import (TABLE1, DimlessParams, ParameterError, PhysicalParams,
                            dimensional_frequency, nondimensionalize, redimensionalize)


def test_table1_scaling(table1):
    dp = nondimensionalize(table1, 1.72)
    assert dp.alpha == pytest.approx(1 / 3)
    assert dp.beta == pytest.approx(1 / 3)
    assert dp.delta == pytest.approx(0.1)
    assert dp.t_c == pytest.approx(4.0)
    assert dp.omega == pytest.approx(6.88)
    assert dp.eta == pytest.approx(0.0118, abs=5e-5)
    assert dp.alpha1 == pytest.approx(1 + 4 / 9)


def test_d1_doubles_delta(table1):
    a = nondimensionalize(table1, 1.72)
    b = nondimensionalize(table1.replace(d1=0.12), 1.72)
    assert b.delta == pytest.approx(0.2)
    assert (b.alpha, b.beta, b.eta, b.omega) == (a.alpha, a.beta, a.eta, a.omega)


def test_unit_case():
    p = PhysicalParams(l1=1, l2=1, d1=0, d2=0, s=0, m_r=1, I_r=1, c=1, A=1)
    dp = nondimensionalize(p, 1.0)
    assert (dp.alpha, dp.delta, dp.beta, dp.eta, dp.t_c, dp.omega) == (0, 0, 1, 1, 1, 1)


def test_redimensionalize():
    unit = DimlessParams(alpha=0.3, beta=0.3, delta=0.1, eta=0.01, A=1, omega=1)
    assert redimensionalize(unit, 1.0) == 1.0
    dp = nondimensionalize(TABLE1, 1.72)
    assert redimensionalize(dp, 0.0667) == pytest.approx(0.01, rel=1e-3)
    assert dimensional_frequency(dp) == pytest.approx(1.72)


@pytest.mark.parametrize("field,value", [("l1", 0.0), ("m_r", -1.0), ("c", 0.0),
                                         ("I_r", 0.0), ("A", -0.1), ("d1", -0.01)])
def test_invalid_physical(table1, field, value):
    with pytest.raises(ParameterError):
        table1.replace(**{field: value})


def test_invalid_frequency(table1):
    with pytest.raises(ParameterError):
        nondimensionalize(table1, 0.0)


def test_dimless_validation():
    with pytest.raises(ParameterError):
        DimlessParams(alpha=0.3, beta=0.0, delta=0.1, eta=0.01, A=1, omega=1)
    with pytest.raises(ParameterError):
        DimlessParams(alpha=0.3, beta=0.3, delta=0.1, eta=0.01, A=1, omega=0)


def test_from_mapping_paths(table1):
    data = table1.to_mapping()
    assert PhysicalParams.from_mapping(data) == table1
    bad = dict(data, extra=1)
    with pytest.raises(ParameterError, match=r"params\.extra"):
        PhysicalParams.from_mapping(bad)
    missing = {k: v for k, v in data.items() if k != "m_r"}
    with pytest.raises(ParameterError, match=r"params\.m_r"):
        PhysicalParams.from_mapping(missing)


_pos = st.floats(0.05, 5.0)


@settings(max_examples=100, deadline=None)
@given(l1=_pos, l2=_pos, d1=st.floats(0, 1), s=_pos, m=_pos, I=_pos, c=_pos,
       Om=st.floats(0.1, 10), v=st.floats(-5, 5))
def test_round_trip(l1, l2, d1, s, m, I, c, Om, v):
    p = PhysicalParams(l1=l1, l2=l2, d1=d1, d2=0.1, s=s, m_r=m, I_r=I, c=c, A=1.0)
    dp = nondimensionalize(p, Om)
    # dimensional -> dimensionless -> dimensional
    v_tilde = v * dp.t_c / l1
    assert redimensionalize(dp, v_tilde) == pytest.approx(v, rel=1e-14, abs=1e-15)
    assert dimensional_frequency(dp) == pytest.approx(Om, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(d2=st.floats(0.0, 3.0))
def test_d2_is_inert(d2):
    a = nondimensionalize(TABLE1, 1.72)
    b = nondimensionalize(TABLE1.replace(d2=d2), 1.72)
    assert a == b


def test_params_are_immutable(table1, dp):
    with pytest.raises(Exception):
        table1.l1 = 2.0
    with pytest.raises(Exception):
        dp.omega = 2.0
    assert math.isclose(dp.period, 2 * np.pi / dp.omega)
