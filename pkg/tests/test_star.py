import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topochain.combinatorics import ClusteredIndexSet, canonical_labels
from topochain.ensembles import random_numeric_sequence
from topochain.star import (
    DoubleSequence,
    cluster_expand,
    cluster_to_particle_relation_check,
    cumulant_transform,
    star_inverse_resolvent,
    star_product,
    star_resolvent,
    symbolic_terms,
)


def const_seq(values, bound):
    """Constant components ``values[n]`` for arity sum ``n``."""
    return DoubleSequence({(n1, n - n1): (lambda xb, v=values[n]: np.full(xb.shape[0], v))
                           for n in range(1, bound + 1) for n1 in range(n + 1)}, 0.0, bound)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_roundtrips(seed, bound):
    rng = np.random.default_rng(seed)
    D = random_numeric_sequence(rng, bound)
    g = cumulant_transform(D)
    for n in range(1, bound + 1):
        for n1 in range(n + 1):
            x = rng.normal(size=(5, n, 2))
            np.testing.assert_allclose(cluster_expand(g).evaluate(n1, n - n1, x), D.evaluate(n1, n - n1, x),
                                       rtol=0, atol=1e-12)
            np.testing.assert_allclose(cumulant_transform(cluster_expand(D)).evaluate(n1, n - n1, x),
                                       D.evaluate(n1, n - n1, x), rtol=0, atol=1e-12)


def test_constant_cluster_expansion_counts_compositions():
    # with g = 1 everywhere, D_n counts compositions: 2^(n-1)
    g = const_seq({n: 1.0 for n in range(1, 6)}, 5)
    D = cluster_expand(g)
    for n in range(1, 6):
        assert D.evaluate(0, n, np.zeros((1, n, 2)))[0] == 2 ** (n - 1)


def test_cumulant_of_product_state_vanishes():
    # D_n = c^n factorizes, so every connected part above one particle is 0
    c = 0.7
    D = const_seq({n: c ** n for n in range(1, 6)}, 5)
    g = cumulant_transform(D)
    assert g.evaluate(1, 0, np.zeros((1, 1, 2)))[0] == pytest.approx(c)
    for n in range(2, 6):
        assert abs(g.evaluate(1, n - 1, np.zeros((1, n, 2)))[0]) < 1e-14


def test_resolvent_matches_cluster_expansion(rng):
    g = random_numeric_sequence(rng, 4)
    R = star_resolvent(g)
    D = cluster_expand(g)
    inv = star_inverse_resolvent(D)
    for n1, n2 in ((1, 0), (1, 1), (2, 1), (2, 2)):
        x = rng.normal(size=(4, n1 + n2, 2))
        np.testing.assert_allclose(R.evaluate(n1, n2, x), D.evaluate(n1, n2, x), atol=1e-12)
        np.testing.assert_allclose(inv.evaluate(n1, n2, x), g.evaluate(n1, n2, x), atol=1e-12)
    assert R.scalar0 == 1.0


def test_star_product_associative(rng):
    a, b, c = (random_numeric_sequence(rng, 2) for _ in range(3))
    left = star_product(star_product(a, b), c)
    right = star_product(a, star_product(b, c))
    x = rng.normal(size=(6, 4, 2))
    np.testing.assert_allclose(left.evaluate(2, 2, x), right.evaluate(2, 2, x), atol=1e-12)


def test_star_unit(rng):
    a = random_numeric_sequence(rng, 3)
    x = rng.normal(size=(3, 3, 2))
    u = DoubleSequence.unit()
    np.testing.assert_allclose(star_product(u, a).evaluate(1, 2, x), a.evaluate(1, 2, x))
    np.testing.assert_allclose(star_product(a, u).evaluate(1, 2, x), a.evaluate(1, 2, x))


def test_resolvent_needs_zero_scalar():
    with pytest.raises(ValueError):
        star_resolvent(DoubleSequence.unit())


def test_clustered_relation(rng):
    g = random_numeric_sequence(rng, 4)
    labels = canonical_labels(1, 3)
    c = ClusteredIndexSet(labels[:1], labels[1:3], labels[3:])
    lhs, rhs = cluster_to_particle_relation_check(g, c, rng.normal(size=(5, 4, 2)))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_masking_zeroes_forbidden():
    D = DoubleSequence({(0, 2): lambda xb: np.ones(xb.shape[0])}, 0.0, 2, sigma=1.0)
    x = np.array([[[0.0, 0.0], [0.5, 0.0]], [[0.0, 0.0], [1.5, 0.0]]])
    assert D.evaluate(0, 2, x).tolist() == [0.0, 1.0]


def test_symbolic_terms_cluster_marked():
    terms = symbolic_terms((-1, 1, 2), "cumulant", cluster=(1, 2))
    assert [(t["sign"], t["blocks"]) for t in terms] == [(1, [[-1, 1, 2]]), (-1, [[-1], [1, 2]])]
    with pytest.raises(ValueError):
        symbolic_terms((-1, 1, 2), "cumulant", cluster=(-1, 2))
    with pytest.raises(ValueError):
        symbolic_terms((1,), "bogus")
