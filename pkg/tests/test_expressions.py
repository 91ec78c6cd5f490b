import numpy as np
import pytest

from specproc.errors import ConfigError
from specproc.expressions import Expression


def test_eval_vectorized():
    e = Expression("2*abs(u)**0.5 + 1")
    u = np.array([0.0, 1.0, 4.0])
    assert np.allclose(e(u), [1.0, 3.0, 5.0])


def test_constants_pi_e():
    e = Expression("pi*u + e")
    assert np.isclose(float(e(np.array([1.0]))[0]), np.pi + np.e)


def test_scalar_input():
    e = Expression("u*u")
    assert float(e(3.0)) == 9.0


@pytest.mark.parametrize("bad", [
    "__import__('os')",
    "u.real",
    "lambda x: x",
    "u if u > 0 else -u",
    "min(u, 1)",
    "v + 1",
    "u ** u",
])
def test_whitelist_rejects(bad):
    with pytest.raises(ConfigError):
        Expression(bad)


def test_asymptotics_constant():
    a = Expression("3").asymptotics
    assert a.power == 0 and a.coeff == 3 and a.monomial


def test_asymptotics_monomial():
    a = Expression("0.32*abs(u)**-0.4").asymptotics
    assert a.monomial
    assert np.isclose(a.power, -0.4)
    assert np.isclose(a.coeff, 0.32)
    assert np.isclose(a.zero_exponent, -0.4)


def test_asymptotics_gaussian():
    a = Expression("exp(-u**2)").asymptotics
    assert a.gauss == -1.0 and a.polynomial_bounded


def test_asymptotics_growth():
    a = Expression("exp(u**2)").asymptotics
    assert a.gauss == 1.0 and not a.polynomial_bounded


def test_asymptotics_sum_dominance():
    a = Expression("u**4 + u**2 + 1").asymptotics
    assert a.power == 4 and not a.monomial
    assert a.sign == 1.0


def test_asymptotics_product():
    a = Expression("u**2 * exp(-u**2)").asymptotics
    assert a.power == 2 and a.gauss == -1.0


def test_nonnegative_check():
    Expression("u**2").check_nonnegative()
    with pytest.raises(ConfigError):
        Expression("u").check_nonnegative()
    with pytest.raises(ConfigError):
        Expression("1 - u**2").check_nonnegative()
