import pytest
from hypothesis import given
from hypothesis import strategies as st

from topochain.combinatorics import (
    ClusteredIndexSet,
    arity,
    canonical_labels,
    compositions,
    declusterize,
    enumerate_clustered_partitions,
    enumerate_interval_partitions,
    enumerate_two_block_splits,
    mobius_sign,
    partition_to_json,
    successor,
)


def label_lists(max_size=8):
    return st.lists(st.integers(-6, 6).filter(bool), min_size=1, max_size=max_size, unique=True).map(sorted)


@pytest.mark.parametrize("n", range(1, 13))
def test_composition_count(n):
    assert len(compositions(range(n))) == 2 ** (n - 1)


@given(label_lists())
def test_compositions_are_contiguous_covers(labels):
    parts = enumerate_interval_partitions(labels)
    assert len(set(parts)) == len(parts)
    for p in parts:
        assert all(p)
        assert sum(p, ()) == tuple(labels)


@given(label_lists())
def test_mobius_signs_cancel(labels):
    # alternating sum over compositions is 1 for a singleton, 0 otherwise
    total = sum(mobius_sign(p) for p in enumerate_interval_partitions(labels))
    assert total == (1 if len(labels) == 1 else 0)


@given(st.integers(0, 4), st.integers(0, 4), st.integers(1, 3))
def test_clustered_count(n1, n2, k):
    labels = canonical_labels(n1 + 1, n2 + k - 1)
    c = ClusteredIndexSet(labels[:n1], labels[n1:n1 + k], labels[n1 + k:])
    parts = enumerate_clustered_partitions(c)
    assert len(parts) == 2 ** (n1 + n2)
    # the cluster is never split
    for p in parts:
        assert any(c.cluster in block for block in p)


def test_canonical_labels_and_arity():
    assert canonical_labels(2, 3) == (-2, -1, 1, 2, 3)
    assert canonical_labels(0, 0) == ()
    assert arity((-2, -1, 1)) == (2, 1)
    assert successor(-1) == 1 and successor(-3) == -2 and successor(2) == 3


def test_two_block_splits_pairs():
    splits = enumerate_two_block_splits((-1, 1, 2))
    assert [s[2] for s in splits] == [(-1, 1), (1, 2)]
    assert splits[0][:2] == ((-1,), (1, 2))


def test_invalid_labels():
    with pytest.raises(ValueError):
        enumerate_interval_partitions((1, 0, 2))
    with pytest.raises(ValueError):
        enumerate_interval_partitions((2, 1))
    with pytest.raises(ValueError):
        compositions(())
    with pytest.raises(ValueError):
        canonical_labels(-1, 2)
    with pytest.raises(ValueError):
        ClusteredIndexSet((1,), (), ()).elements()


def test_empty_cluster_element_allowed_on_request():
    c = ClusteredIndexSet((-1,), (), (1,))
    assert c.elements(allow_empty=True) == ((-1,), (), (1,))
    assert len(enumerate_clustered_partitions(c, allow_empty=True)) == 4


def test_json_form():
    c = ClusteredIndexSet((-1,), (1, 2))
    p = enumerate_clustered_partitions(c)[-1]
    assert partition_to_json(p) == [[-1], [1, 2]]
    assert declusterize(((-1,), (1, 2))) == (-1, 1, 2)
    assert partition_to_json(((-1, 1), (2,))) == [[-1, 1], [2]]
