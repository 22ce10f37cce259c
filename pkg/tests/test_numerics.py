import math

import numpy as np
import pytest

from topochain.numerics import (
    NormWeight,
    QuadratureSpec,
    convergence_study,
    integrate_component,
    mc_rule,
    tensor_rule,
    time_derivative,
)


def gauss(xb):
    return np.exp(-0.5 * np.sum(xb ** 2, axis=(-1, -2)))


@pytest.mark.parametrize("n", [1, 2])
def test_tensor_gaussian(n):
    val, err = integrate_component(gauss, n, QuadratureSpec(points=24, q_panels=2, p_panels=2, p_box=(-9.0, 9.0)))
    assert val == pytest.approx((2 * math.pi) ** n, rel=1e-10)
    assert err < 1e-8


def test_mc_gaussian_within_error():
    spec = QuadratureSpec(mode="mc", samples=200_000)
    val, se = integrate_component(gauss, 2, spec)
    assert abs(val - (2 * math.pi) ** 2) < 5 * se


def test_mc_deterministic():
    spec = QuadratureSpec(mode="mc", samples=1000, seed=3)
    a, _ = mc_rule(2, spec)
    b, _ = mc_rule(2, spec)
    np.testing.assert_array_equal(a, b)


def test_tensor_rule_weights_sum_to_volume():
    spec = QuadratureSpec(points=4, q_box=(-1, 1), p_box=(0, 3))
    nodes, w = tensor_rule(2, spec)
    assert nodes.shape == (256, 2, 2)
    assert w.sum() == pytest.approx(36.0)


def test_richardson_derivative():
    assert time_derivative(np.sin, 0.3, 1e-2) == pytest.approx(math.cos(0.3), abs=1e-8)


def test_convergence_order():
    study = convergence_study(lambda h: 1.0 + h ** 2, 1.0, [0.1, 0.05, 0.025])
    assert study.min_order == pytest.approx(2.0)
    assert study.finest_error == pytest.approx(0.025 ** 2)


def test_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(mode="bogus")
    with pytest.raises(ValueError):
        QuadratureSpec(q_box=(1.0, -1.0))
    with pytest.raises(ValueError):
        NormWeight(1.0)
    with pytest.raises(ValueError):
        time_derivative(lambda t: math.inf, 0.0)
