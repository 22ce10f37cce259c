import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topochain.dynamics import (
    ForbiddenConfigurationError,
    IntegratorConfig,
    PotentialSpec,
    apply_group,
    conserved_quantities,
    hamiltonian_flow,
    liouville_apply,
    simulate,
)
from topochain.suites import allowed_chain, hard_rod_pair


def test_potential_tail_is_smooth_at_range(pot):
    assert pot.phi(pot.range) == 0 and pot.dphi(pot.range) == 0 and pot.d2phi(pot.range) == 0
    assert pot.phi(pot.sigma) == pytest.approx(pot.epsilon)
    d, h = 1.2, 1e-6
    assert pot.dphi(d) == pytest.approx((pot.phi(d + h) - pot.phi(d - h)) / (2 * h), rel=1e-7)


def test_free_flight_closed_form(cfg):
    # far apart, no forces: q + p t
    free = PotentialSpec(epsilon=0.0)
    x = np.array([[0.0, 0.3], [5.0, 0.2], [10.0, -0.1]])
    np.testing.assert_allclose(hamiltonian_flow(x, 2.0, free, cfg), x + np.array([[0.6, 0], [0.4, 0], [-0.2, 0]]),
                               atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 1.5), st.floats(0.3, 1.0), st.floats(-1.5, 0.0), st.floats(0.1, 3.0))
def test_hard_rod_oracle(p1, q2, p2, t):
    rods = PotentialSpec(epsilon=0.0)
    x = np.array([[-1.0, p1], [q2, p2]])
    np.testing.assert_allclose(hamiltonian_flow(x, t, rods, IntegratorConfig()), hard_rod_pair(x, t), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_conservation_and_reversal(seed, n):
    pot, cfg = PotentialSpec(), IntegratorConfig()
    x = allowed_chain(np.random.default_rng(seed), n, pot.sigma, (0.1, 0.6))
    e0, m0 = conserved_quantities(x, pot)
    y = hamiltonian_flow(x, 2.0, pot, cfg)
    e1, m1 = conserved_quantities(y, pot)
    assert abs(e1 - e0) <= 1e-8 * abs(e0)
    assert m1 == pytest.approx(m0, abs=1e-10)
    np.testing.assert_allclose(hamiltonian_flow(y, -2.0, pot, cfg), x, atol=1e-8)
    assert np.all(np.diff(y[:, 0]) >= pot.sigma - 1e-10)


def test_group_property(pot, cfg, rng):
    xs = np.stack([allowed_chain(rng, 3, pot.sigma) for _ in range(20)])
    a = hamiltonian_flow(hamiltonian_flow(xs, 0.4, pot, cfg), 0.9, pot, cfg)
    np.testing.assert_allclose(a, hamiltonian_flow(xs, 1.3, pot, cfg), atol=1e-6)


def test_forbidden_rejected(pot, cfg):
    with pytest.raises(ForbiddenConfigurationError):
        hamiltonian_flow(np.array([[0.0, 0.0], [0.5, 0.0]]), 1.0, pot, cfg)


def test_apply_group_zero_on_forbidden(pot, cfg):
    x = np.array([[[0.0, 0.0], [0.5, 0.0]], [[0.0, 1.0], [3.0, 0.0]]])
    vals = apply_group(1.0, lambda y: y[:, 0, 0], x, pot, cfg)
    assert vals[0] == 0.0 and vals[1] == pytest.approx(-1.0)


def test_liouville_of_conserved_energy_vanishes(pot, rng):
    x = np.stack([allowed_chain(rng, 3, pot.sigma, (0.1, 0.4)) for _ in range(5)])
    vals = liouville_apply(lambda y: conserved_quantities(y, pot)[0], x, pot)
    np.testing.assert_allclose(vals, 0.0, atol=1e-7)


def test_liouville_sign_matches_flow(pot, cfg, rng):
    # d/dt f(X(-t, x)) at t = 0 equals L* f
    x = allowed_chain(rng, 2, pot.sigma, (0.2, 0.3))
    f = lambda y: np.sin(y[:, 0, 0]) * y[:, 1, 1] + y[:, 0, 1] ** 2
    h = 1e-4
    fd = (apply_group(h, f, x[None], pot, cfg) - apply_group(-h, f, x[None], pot, cfg)) / (2 * h)
    assert fd[0] == pytest.approx(liouville_apply(f, x[None], pot)[0], abs=1e-6)


def test_simulate_rows(pot, cfg, rng):
    rows, drift = simulate(allowed_chain(rng, 3, pot.sigma), 1.0, pot, cfg, frames=4)
    assert len(rows) == 15 and len(drift) == 5
    assert rows[0][1] == 1 and max(drift) < 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        PotentialSpec(sigma=1.0, range=0.5)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0)
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="euler")
