import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topochain.ensembles import chain_ensemble, smooth_step, split_ensemble
from topochain.phase import gaps, is_allowed, make_configuration


@given(st.floats(-2, 3))
def test_smooth_step_range(u):
    v = float(smooth_step(u))
    assert 0.0 <= v <= 1.0
    if u <= 0:
        assert v == 0.0
    if u >= 1:
        assert v == 1.0


def test_smooth_step_symmetry():
    u = np.linspace(0.01, 0.99, 11)
    np.testing.assert_allclose(smooth_step(u) + smooth_step(1 - u), 1.0)


def test_chain_ensemble_vanishes_near_core():
    st_ = chain_ensemble(n_max=2, activity=0.5, delta=0.5)
    near = make_configuration([0.0, 1.2], [0.0, 0.0])
    far = make_configuration([0.0, 2.5], [0.0, 0.0])
    assert st_.D0.evaluate(1, 1, near[None])[0] == 0.0
    assert st_.D0.evaluate(1, 1, far[None])[0] > 0.0


def test_split_ensemble_factorizes():
    st_ = split_ensemble(m_max=1, activity=0.1)
    x = np.array([[[-2.0, 0.1], [2.0, -0.2]]])
    both = st_.D0.evaluate(1, 1, x)[0]
    left = st_.D0.evaluate(1, 0, x[:, :1])[0]
    right = st_.D0.evaluate(0, 1, x[:, 1:])[0]
    assert both == pytest.approx(left * right)


def test_phase_helpers():
    x = make_configuration([0.0, 1.0, 3.0], [0, 0, 0])
    assert gaps(x[None]).tolist() == [[1.0, 2.0]]
    assert bool(is_allowed(x[None], 1.0)[0])
    assert not bool(is_allowed(x[None], 1.5)[0])
