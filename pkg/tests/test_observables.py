import numpy as np
import pytest

from topochain import observables
from topochain.ensembles import chain_ensemble
from topochain.numerics import QuadratureSpec
from topochain.suites import allowed_chain


@pytest.fixture
def A0():
    return observables.bump_observables(2, scalar=0.7)


def test_creation_drops_outer_particle(A0):
    x = np.array([[[-1.0, 0.2], [1.0, 0.1], [2.5, -0.3]]])
    assert observables.create_right(A0).evaluate(1, 2, x)[0] == pytest.approx(A0.evaluate(1, 1, x[:, :2])[0])
    assert observables.create_left(A0).evaluate(1, 2, x)[0] == pytest.approx(A0.evaluate(0, 2, x[:, 1:])[0])
    assert observables.create_right(A0).evaluate(0, 1, x[:, :1])[0] == 0.7


@pytest.mark.parametrize("side", ["+", "-"])
def test_creation_resolvent_inverse(A0, side):
    r = observables.creation_resolvent(A0, side, 3)
    back = observables.one_minus_creation(r, side)
    x = np.array([[[-1.0, 0.2], [1.0, 0.1]]])
    assert back.evaluate(1, 1, x)[0] == pytest.approx(A0.evaluate(1, 1, x)[0])


def test_dual_series_at_zero_and_reduced_route(A0, pot, cfg, rng):
    B0 = observables.reduced_observable_sequence(0.0, A0, pot, cfg, 3)
    xs = np.stack([allowed_chain(rng, 2, pot.sigma) for _ in range(5)])
    np.testing.assert_allclose(observables.dual_solution_series(0.0, B0, (1, 1), xs, pot, cfg),
                               B0.evaluate(1, 1, xs), atol=1e-12)
    a = observables.dual_solution_series(0.6, B0, (1, 1), xs, pot, cfg)
    b = observables.reduced_observables(0.6, A0, (1, 1), xs, pot, cfg)
    c = observables.dual_solution_alternate(0.6, B0, (1, 1), xs, pot, cfg)
    np.testing.assert_allclose(a, b, atol=1e-9)
    np.testing.assert_allclose(a, c, atol=1e-9)


def test_adjoint_group_is_forward_flow(A0, pot, cfg):
    from topochain.dynamics import hamiltonian_flow

    x = np.array([[-1.0, 0.5], [1.2, -0.5]])
    f = lambda y: y[:, 0, 0] + 2 * y[:, 1, 1]
    y = hamiltonian_flow(x, 0.8, pot, cfg)
    assert observables.adjoint_group(0.8, f, x[None], pot, cfg)[0] == pytest.approx(y[0, 0] + 2 * y[1, 1])


@pytest.mark.parametrize("side", ["+", "-"])
def test_creation_adjointness(A0, pot, side):
    st = chain_ensemble(n_max=2, activity=0.5, delta=0.5)
    f = type(st.D0)(st.D0.component, 0.3, 2, pot.sigma)
    lhs, rhs = observables.adjointness_creation(A0, f, side, QuadratureSpec(points=12, q_panels=2), 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_duality_result_flags():
    r = observables.DualityResult(0.5, 1.0, 1.0001, 1e-3, 1e-3, 1e-4)
    assert r.abs_err == pytest.approx(1e-4)
    assert r.passed
