import math

import numpy as np
import pytest

from topochain import bbgky
from topochain.ensembles import GrandState, chain_ensemble
from topochain.numerics import QuadratureSpec
from topochain.star import DoubleSequence

SPEC = QuadratureSpec(points=24, q_panels=2, p_panels=2, p_box=(-9.0, 9.0), q_box=(-9.0, 9.0))


def normal(xb):
    return np.exp(-0.5 * np.sum(xb ** 2, axis=(-1, -2))) / (2 * math.pi) ** xb.shape[1]


def product_sequence(bound, a=0.5):
    """Unmasked ``a^n prod N(x_i)``: every marginal integral is closed form."""
    return DoubleSequence({(n1, n - n1): (lambda xb, n=n: a ** n * normal(xb))
                           for n in range(1, bound + 1) for n1 in range(n + 1)}, 1.0, bound)


def test_c_alpha():
    assert bbgky.c_alpha(4.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        bbgky.c_alpha(2.0)


@pytest.mark.parametrize("side", ["+", "-"])
def test_annihilation_closed_form(side):
    f = product_sequence(2)
    af = bbgky.annihilate(f, side, SPEC)
    x = np.array([[[0.3, -0.4]]])
    assert af.evaluate(1, 0, x)[0] == pytest.approx(0.25 * normal(x)[0], rel=1e-9)
    assert af.scalar0 == pytest.approx(0.5, rel=1e-9)
    assert af.support_bound == 1


def test_annihilation_resolvent_and_inverse():
    f = product_sequence(2)
    r = bbgky.annihilation_resolvent(f, "+", SPEC)
    x = np.array([[[0.3, -0.4]]])
    # a f = 0.5 f on (1, 0), so the resolvent multiplies it by 1 + 0.5
    assert r.evaluate(1, 0, x)[0] == pytest.approx(1.5 * 0.5 * normal(x)[0], rel=1e-9)
    back = bbgky.one_minus_annihilation(r, "+", SPEC)
    assert back.evaluate(1, 0, x)[0] == pytest.approx(f.evaluate(1, 0, x)[0], rel=1e-8)


def test_annihilate_requires_support():
    with pytest.raises(ValueError):
        bbgky.annihilate(DoubleSequence(lambda a, b: None, 0.0, None), "+", SPEC)
    with pytest.raises(ValueError):
        bbgky.annihilate(product_sequence(1), "x", SPEC)


def test_partition_function_closed_form():
    # (n + 1) arities of size n, each integrating to a^n
    st = GrandState(product_sequence(2, 0.3), 2)
    assert bbgky.partition_function(st, SPEC) == pytest.approx(1 + 2 * 0.3 + 3 * 0.09, rel=1e-9)


def test_initial_reduced_distribution_is_normalized_marginal():
    st = GrandState(product_sequence(2, 0.3), 2)
    Z = bbgky.partition_function(st, SPEC)
    x = np.array([[[0.2, 0.1]]])
    F = bbgky.reduced_distribution_direct(0.0, st, (0, 1), x, SPEC, bbgky.PotentialSpec(), bbgky.IntegratorConfig(), Z)
    # window (0,1) picks D_{0+1}, D_{1+1} and D_{0+2} marginals
    assert F[0] == pytest.approx((0.3 + 2 * 0.09) * normal(x)[0] / Z, rel=1e-9)


def test_window_validation():
    with pytest.raises(ValueError):
        bbgky._outer_arities((0, 0), 3)


def test_degenerate_ensemble():
    st = GrandState(DoubleSequence({}, 0.0, 1), 1)
    with pytest.raises(ValueError):
        bbgky.partition_function(st, SPEC)


def test_truncate():
    f = chain_ensemble(n_max=3).D0
    t = bbgky.truncate(f, 2)
    assert t.support_bound == 2 and t.component(2, 1) is None and t.component(1, 1) is not None
