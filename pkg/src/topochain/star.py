"""Double sequences of component functions and the star-product algebra.

A :class:`DoubleSequence` maps an arity ``(n1, n2)`` to an evaluator acting on
batches of ``n1 + n2``-particle configurations.  A block of labels inside a
bigger configuration is evaluated with the component whose arity counts the
block's negative and positive labels, arguments in ascending label order.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .combinatorics import (
    ClusteredIndexSet,
    arity,
    check_index_set,
    compositions,
    declusterize,
    mobius_sign,
)
from .phase import as_batch, is_allowed, unbatch

Evaluator = Callable[[np.ndarray], np.ndarray]


class DoubleSequence:
    """Finitely or lazily supported double sequence ``{f_{n1+n2}}``.

    Parameters
    ----------
    components : mapping ``(n1, n2) -> evaluator`` or a factory callable
        returning an evaluator or ``None`` (zero component).
    scalar0 : the ``(0, 0)`` component.
    support_bound : largest ``n1 + n2`` with a non-zero component, ``None``
        when unbounded.
    sigma : hard-core length; when given, every component is masked to zero
        on forbidden configurations.
    """

    def __init__(self, components=None, scalar0: float = 0.0,
                 support_bound: int | None = -1, sigma: float | None = None):
        self.scalar0 = float(scalar0)
        self.sigma = sigma
        if components is None:
            components = {}
        if callable(components) and not isinstance(components, Mapping):
            self._factory = components
            self._table = None
            self.support_bound = support_bound if support_bound != -1 else None
        else:
            self._factory = None
            self._table = {tuple(k): v for k, v in components.items() if v is not None}
            if support_bound == -1:
                support_bound = max((sum(k) for k in self._table), default=0)
            self.support_bound = support_bound
        self._cache: dict[tuple[int, int], Evaluator | None] = {}

    @classmethod
    def unit(cls) -> "DoubleSequence":
        return cls({}, scalar0=1.0, support_bound=0)

    @classmethod
    def zero(cls) -> "DoubleSequence":
        return cls({}, scalar0=0.0, support_bound=0)

    def component(self, n1: int, n2: int) -> Evaluator | None:
        key = (n1, n2)
        if key in self._cache:
            return self._cache[key]
        if self.support_bound is not None and n1 + n2 > self.support_bound:
            comp = None
        elif self._table is not None:
            comp = self._table.get(key)
        else:
            comp = self._factory(n1, n2)
        self._cache[key] = comp
        return comp

    def evaluate(self, n1: int, n2: int, x) -> np.ndarray:
        """Component ``(n1, n2)`` on a batch ``(B, n1+n2, 2)``."""
        xb = np.asarray(x, dtype=float)
        if n1 + n2 == 0:
            return np.full(xb.shape[0], self.scalar0)
        comp = self.component(n1, n2)
        if comp is None:
            return np.zeros(xb.shape[0])
        vals = np.asarray(comp(xb), dtype=float)
        if self.sigma is not None:
            vals = np.where(is_allowed(xb, self.sigma), vals, 0.0)
        return vals

    def block(self, labels: Sequence[int], xb: np.ndarray) -> np.ndarray:
        """Evaluate on a block of labels (block evaluation rule)."""
        return self.evaluate(*arity(labels), xb)

    def __call__(self, labels: Sequence[int], x):
        xb, single = as_batch(x)
        return unbatch(self.block(check_index_set(labels), xb), single)

    def with_sigma(self, sigma: float | None) -> "DoubleSequence":
        return DoubleSequence(self.component, self.scalar0, self.support_bound, sigma)

    def arities(self, max_particles: int | None = None):
        """Arity keys with ``1 <= n1 + n2 <= bound``."""
        bound = self.support_bound if max_particles is None else max_particles
        if bound is None:
            raise ValueError("unbounded sequence needs max_particles")
        return [(n1, n - n1) for n in range(1, bound + 1) for n1 in range(n + 1)]


def _split_arity(n1: int, k: int) -> tuple[int, int]:
    """Arity of the first ``k`` labels of the canonical ``(n1, n2)`` list."""
    neg = min(k, n1)
    return neg, k - neg


def _bound_sum(a, b):
    return None if a is None or b is None else a + b


def star_product(f1: DoubleSequence, f2: DoubleSequence) -> DoubleSequence:
    """``(f1*f2)(X) = sum over left intervals Y of X of f1(Y) f2(X \\ Y)``."""

    def factory(n1, n2):
        n = n1 + n2

        def comp(xb):
            total = np.zeros(xb.shape[0])
            for k in range(n + 1):
                a1 = _split_arity(n1, k)
                a2 = (n1 - a1[0], n2 - a1[1])
                if k and f1.component(*a1) is None:
                    continue
                if k < n and f2.component(*a2) is None:
                    continue
                total += f1.evaluate(*a1, xb[:, :k]) * f2.evaluate(*a2, xb[:, k:])
            return total

        return comp

    return DoubleSequence(factory, f1.scalar0 * f2.scalar0,
                          _bound_sum(f1.support_bound, f2.support_bound))


def _require_vanishing_scalar(f: DoubleSequence):
    if f.scalar0 != 0.0:
        raise ValueError("resolvent requires vanishing scalar component")


def _power_series(f: DoubleSequence, coeff: Callable[[int], float], scalar0: float) -> DoubleSequence:
    powers = [f]

    def power(k):
        while len(powers) < k:
            powers.append(star_product(powers[-1], f))
        return powers[k - 1]

    def factory(n1, n2):
        n = n1 + n2
        terms = [(coeff(k), power(k)) for k in range(1, n + 1)]

        def comp(xb):
            total = np.zeros(xb.shape[0])
            for c, pw in terms:
                if pw.component(n1, n2) is not None:
                    total += c * pw.evaluate(n1, n2, xb)
            return total

        return comp

    return DoubleSequence(factory, scalar0, 0 if f.support_bound == 0 else None)


def star_resolvent(f: DoubleSequence) -> DoubleSequence:
    """``I + sum_{n>=1} f^{*n}``; component ``n`` needs powers up to ``n``."""
    _require_vanishing_scalar(f)
    return _power_series(f, lambda k: 1.0, 1.0)


def star_inverse_resolvent(f: DoubleSequence) -> DoubleSequence:
    """``sum_{n>=1} (-1)^{n-1} f^{*n}``."""
    _require_vanishing_scalar(f)
    return _power_series(f, lambda k: -1.0 if k % 2 == 0 else 1.0, 0.0)


@lru_cache(maxsize=None)
def _position_partitions(n1: int, n2: int):
    """Compositions of positions ``0..n-1`` as (sign, [(start, stop, arity)])."""
    n = n1 + n2
    labels = tuple(range(-n1, 0)) + tuple(range(1, n2 + 1))
    out = []
    for part in compositions(range(n)):
        blocks = [(b[0], b[-1] + 1, arity(labels[b[0]:b[-1] + 1])) for b in part]
        out.append((mobius_sign(part), blocks))
    return tuple(out)


def _partition_sum(seq: DoubleSequence, signed: bool, sigma) -> DoubleSequence:
    def factory(n1, n2):
        parts = _position_partitions(n1, n2)

        def comp(xb):
            total = np.zeros(xb.shape[0])
            for sign, blocks in parts:
                if any(seq.component(*a) is None for _, _, a in blocks):
                    continue
                term = np.ones(xb.shape[0])
                for a, b, ar in blocks:
                    term = term * seq.evaluate(*ar, xb[:, a:b])
                total += (sign if signed else 1) * term
            return total

        return comp

    return DoubleSequence(factory, 0.0, None, sigma=sigma)


def cluster_expand(g: DoubleSequence) -> DoubleSequence:
    """``D(X) = sum over interval partitions of prod g(blocks)``."""
    _require_vanishing_scalar(g)
    return _partition_sum(g, signed=False, sigma=g.sigma)


def cumulant_transform(D: DoubleSequence) -> DoubleSequence:
    """``g(X) = sum over interval partitions of (-1)^{|P|-1} prod D(blocks)``."""
    _require_vanishing_scalar(D)
    return _partition_sum(D, signed=True, sigma=D.sigma)


def element_partition_sum(seq: DoubleSequence, elements: Sequence[tuple[int, ...]], xb: np.ndarray,
                          signed: bool = True) -> np.ndarray:
    """Sum over compositions of ``elements`` of (signed) products of ``seq``
    evaluated on the declusterized blocks.

    ``xb`` holds the configuration of the flattened labels, shape ``(B, n, 2)``.
    Empty elements are permitted and carry no particles.
    """
    flat = declusterize(elements)
    pos = {v: i for i, v in enumerate(flat)}
    total = np.zeros(xb.shape[0])
    for part in compositions(elements):
        term = np.ones(xb.shape[0])
        for block in part:
            labels = declusterize(block)
            if not labels:
                term = term * seq.scalar0
                continue
            cols = [pos[v] for v in labels]
            term = term * seq.block(labels, xb[:, cols])
        total += (mobius_sign(part) if signed else 1) * term
    return total


def clustered_cumulant(D: DoubleSequence, c: ClusteredIndexSet, x, restrict: bool = True):
    """Correlation of a cluster and particles, built from ``D``.

    With ``restrict`` the value is zero on forbidden configurations; integral
    routes use ``restrict=False`` so outer particles range over all space.
    """
    xb, single = as_batch(x)
    vals = element_partition_sum(D, c.elements(), xb, signed=True)
    if restrict and D.sigma is not None:
        vals = np.where(is_allowed(xb, D.sigma), vals, 0.0)
    return unbatch(vals, single)


def cluster_to_particle_relation_check(g: DoubleSequence, c: ClusteredIndexSet, x):
    """Return ``(lhs, rhs)`` for the cluster/particle correlation relation.

    ``lhs`` goes through :func:`cluster_expand` then :func:`clustered_cumulant`;
    ``rhs`` is the nested double partition sum over ``g`` directly.
    """
    xb, single = as_batch(x)
    lhs = element_partition_sum(cluster_expand(g.with_sigma(None)), c.elements(), xb, signed=True)
    flat = c.flatten()
    pos = {v: i for i, v in enumerate(flat)}
    rhs = np.zeros(xb.shape[0])
    for part in compositions(c.elements()):
        outer = np.ones(xb.shape[0])
        for block in part:
            labels = declusterize(block)
            inner = np.zeros(xb.shape[0])
            for sub in compositions(labels):
                term = np.ones(xb.shape[0])
                for z in sub:
                    term = term * g.block(z, xb[:, [pos[v] for v in z]])
                inner += term
            outer = outer * inner
        rhs += mobius_sign(part) * outer
    return unbatch(lhs, single), unbatch(rhs, single)


def symbolic_terms(labels: Sequence[int], kind: str = "cumulant", cluster: Sequence[int] | None = None):
    """Term list ``[{sign, blocks}]`` for an expansion over ``labels``.

    ``kind`` is ``"cluster"`` (all signs +) or ``"cumulant"`` (Mobius signs).
    With ``cluster`` given, that contiguous run of labels is one element.
    """
    if kind not in ("cluster", "cumulant"):
        raise ValueError(f"unknown expansion kind {kind!r}")
    labels = check_index_set(labels)
    if cluster:
        cluster = tuple(cluster)
        i = labels.index(cluster[0])
        if labels[i:i + len(cluster)] != cluster:
            raise ValueError("cluster must be a contiguous run of labels")
        elements = ClusteredIndexSet(labels[:i], cluster, labels[i + len(cluster):]).elements()
    else:
        elements = tuple((v,) for v in labels)
    out = []
    for part in compositions(elements):
        sign = mobius_sign(part) if kind == "cumulant" else 1
        out.append({"sign": sign, "blocks": [list(declusterize(b)) for b in part]})
    return out
