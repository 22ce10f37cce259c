"""Cumulants of the evolution groups and solutions of the correlation hierarchy.

An operator expansion is stored as a list of terms ``(coef, spans)`` where
``spans`` are ``(start, stop)`` position ranges of the flattened chain.  A
term acts on ``f`` by flowing each span as an isolated sub-chain and
evaluating ``f`` on the result; a forbidden span contributes zero.
"""
from __future__ import annotations

from itertools import product
from typing import Callable, Sequence

import numpy as np

from .combinatorics import (
    ClusteredIndexSet,
    check_index_set,
    compositions,
    declusterize,
    enumerate_two_block_splits,
    mobius_sign,
)
from .dynamics import (
    IntegratorConfig,
    PotentialSpec,
    flow_batch,
    interaction_apply,
    liouville_apply,
)
from .numerics import ConvergenceStudy, central_difference, convergence_study
from .phase import as_batch, is_allowed, unbatch
from .star import DoubleSequence, cluster_expand, element_partition_sum

Term = tuple[float, tuple[tuple[int, int], ...]]


class GroupFlows:
    """Sub-chain flows of one batch, cached by position range.

    ``forward=False`` realizes ``S*(t)`` (flow by ``-t``); ``forward=True``
    realizes ``S(t) = S*(-t)``.
    """

    def __init__(self, xb: np.ndarray, t: float, pot: PotentialSpec,
                 cfg: IntegratorConfig = IntegratorConfig(), forward: bool = False):
        self.xb = xb
        self.tau = t if forward else -t
        self.pot = pot
        self.cfg = cfg
        self._cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def block(self, a: int, b: int):
        key = (a, b)
        if key not in self._cache:
            sub = self.xb[:, a:b]
            ok = is_allowed(sub, self.pot.sigma)
            out = sub.copy()
            if self.tau != 0 and b > a and ok.any():
                q, p = flow_batch(sub[ok, :, 0], sub[ok, :, 1], self.tau, self.pot, self.cfg)
                out[ok] = np.stack([q, p], axis=-1)
            self._cache[key] = (out, ok)
        return self._cache[key]

    def apply(self, spans, f: Callable) -> np.ndarray:
        """``(prod_k S_{span_k}) f`` on the batch."""
        y = self.xb.copy()
        mask = np.ones(self.xb.shape[0], dtype=bool)
        for a, b in spans:
            if b == a:
                continue
            out, ok = self.block(a, b)
            y[:, a:b] = out
            mask &= ok
        vals = np.asarray(f(y), dtype=float)
        return np.where(mask, vals, 0.0)

    def expand(self, terms: Sequence[Term], f: Callable) -> np.ndarray:
        total = np.zeros(self.xb.shape[0])
        for coef, spans in terms:
            total += coef * self.apply(spans, f)
        return total


def element_spans(elements) -> list[tuple[int, int]]:
    spans, pos = [], 0
    for el in elements:
        spans.append((pos, pos + len(el)))
        pos += len(el)
    return spans


def cumulant_terms(elements, offset: int = 0, signed: bool = True) -> list[Term]:
    """Terms of the group cumulant over ``elements`` (each a label tuple)."""
    spans = element_spans(elements)
    idx = list(range(len(elements)))
    out = []
    for part in compositions(idx):
        coef = mobius_sign(part) if signed else 1
        out.append((float(coef), tuple((spans[b[0]][0] + offset, spans[b[-1]][1] + offset) for b in part)))
    return out


def product_terms(factors: Sequence[Sequence[Term]]) -> list[Term]:
    out = []
    for combo in product(*factors):
        coef = 1.0
        spans = []
        for c, s in combo:
            coef *= c
            spans.extend(s)
        out.append((coef, tuple(spans)))
    return out


def _block_product_terms(part, offset_elements=None) -> list[Term]:
    """Product over blocks of ``part`` of the cumulants over each block's elements."""
    factors, pos = [], 0
    for block in part:
        factors.append(cumulant_terms(block, offset=pos))
        pos += len(declusterize(block))
    return product_terms(factors)


def _evaluator(f, labels) -> Callable:
    if isinstance(f, DoubleSequence):
        return lambda y: f.block(labels, y)
    return f


def operator_cumulant_blocks(t: float, clusters, f, x, pot: PotentialSpec,
                             cfg: IntegratorConfig = IntegratorConfig(), forward: bool = False):
    """Cumulant of the groups over an ordered list of elements (label tuples),
    each element acting as one index; applied to ``f`` and evaluated at ``x``."""
    clusters = tuple(tuple(c) for c in clusters)
    labels = check_index_set(declusterize(clusters))
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg, forward)
    return unbatch(flows.expand(cumulant_terms(clusters), _evaluator(f, labels)), single)


def operator_cumulant(t: float, s, f, x, pot: PotentialSpec,
                      cfg: IntegratorConfig = IntegratorConfig(), forward: bool = False):
    """Cumulant of order ``|s|`` of the groups over the labels ``s``."""
    s = check_index_set(s)
    return operator_cumulant_blocks(t, [(v,) for v in s], f, x, pot, cfg, forward)


def clustered_operator_cumulant(t: float, c: ClusteredIndexSet, f, x, pot: PotentialSpec,
                                cfg: IntegratorConfig = IntegratorConfig(), forward: bool = False,
                                allow_empty: bool = False):
    """Cumulant over ``left + {cluster} + right`` with the cluster kept whole."""
    elements = c.elements(allow_empty=allow_empty)
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg, forward)
    return unbatch(flows.expand(cumulant_terms(elements), _evaluator(f, c.flatten())), single)


def group_cluster_expansion(t: float, elements, f, x, pot: PotentialSpec,
                            cfg: IntegratorConfig = IntegratorConfig(), forward: bool = False):
    """Return ``(group, expansion)``: the whole-chain group applied to ``f`` and
    the sum over compositions of ``elements`` of products of block cumulants."""
    elements = tuple(tuple(e) for e in elements)
    labels = declusterize(elements)
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg, forward)
    fe = _evaluator(f, labels)
    lhs = flows.apply(((0, len(labels)),), fe)
    rhs = np.zeros(xb.shape[0])
    for part in compositions(elements):
        rhs += flows.expand(_block_product_terms(part), fe)
    return unbatch(lhs, single), unbatch(rhs, single)


def _product_of_blocks(seq: DoubleSequence, part) -> Callable:
    spans = element_spans(part)

    def h(y):
        out = np.ones(y.shape[0])
        for block, (a, b) in zip(part, spans):
            out = out * seq.block(block, y[:, a:b])
        return out

    return h


def _solve_flat(flows: GroupFlows, g0: DoubleSequence, s) -> np.ndarray:
    total = np.zeros(flows.xb.shape[0])
    for part in compositions(s):
        total += flows.expand(cumulant_terms(part), _product_of_blocks(g0, part))
    return total


def solve_correlations(t: float, g0: DoubleSequence, s, x, pot: PotentialSpec,
                       cfg: IntegratorConfig = IntegratorConfig()):
    """Correlation function at time ``t``: sum over compositions of ``s`` of the
    cumulant over the blocks (as elements) applied to the product of ``g0``."""
    s = check_index_set(s)
    xb, single = as_batch(x)
    return unbatch(_solve_flat(GroupFlows(xb, t, pot, cfg), g0, s), single)


def solve_correlations_clustered(t: float, g0: DoubleSequence, s, x, pot: PotentialSpec,
                                 cfg: IntegratorConfig = IntegratorConfig()):
    """Products of flat block cumulants acting on the clustered initial
    correlation of the blocks."""
    s = check_index_set(s)
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg)
    D0 = cluster_expand(g0)
    total = np.zeros(xb.shape[0])
    for part in compositions(s):
        terms = _block_product_terms(tuple(tuple((v,) for v in block) for block in part))
        clustered = lambda y, part=part: element_partition_sum(D0, part, y, signed=True)
        total += flows.expand(terms, clustered)
    return unbatch(total, single)


def evolved_correlations_direct(t: float, g0: DoubleSequence, s, x, pot: PotentialSpec,
                                cfg: IntegratorConfig = IntegratorConfig()):
    """Cumulants of the evolved distributions ``S*(t) D0`` with ``D0`` the
    cluster expansion of ``g0``; every block evolves as its own chain."""
    s = check_index_set(s)
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg)
    D0 = cluster_expand(g0)
    total = np.zeros(xb.shape[0])
    for part in compositions(s):
        term = np.ones(xb.shape[0])
        pos = 0
        for block in part:
            a, b = pos, pos + len(block)
            out, ok = flows.block(a, b)
            term = term * np.where(ok, D0.block(block, out), 0.0)
            pos = b
        total += mobius_sign(part) * term
    return unbatch(total, single)


def correlations_at(t: float, g0: DoubleSequence, pot: PotentialSpec,
                    cfg: IntegratorConfig = IntegratorConfig(), max_particles: int | None = None) -> DoubleSequence:
    """The sequence ``g(t)`` as lazily evaluated components."""
    from .combinatorics import canonical_labels

    def factory(n1, n2):
        labels = canonical_labels(n1, n2)
        return lambda xb: _solve_flat(GroupFlows(xb, t, pot, cfg), g0, labels)

    bound = max_particles if max_particles is not None else g0.support_bound
    return DoubleSequence(factory, 0.0, bound)


def liouville_hierarchy_rhs(t: float, g_t: DoubleSequence, s, x, pot: PotentialSpec, h: float = 1e-4):
    """Right-hand side of the correlation hierarchy at ``x`` for ``g_t = g(t)``."""
    s = check_index_set(s)
    xb, single = as_batch(x)
    out = np.asarray(liouville_apply(lambda y: g_t.block(s, y), xb, pot, h))
    for x1, x2, _ in enumerate_two_block_splits(s):
        k = len(x1)
        prod = lambda y, x1=x1, x2=x2, k=k: g_t.block(x1, y[:, :k]) * g_t.block(x2, y[:, k:])
        out = out + np.asarray(interaction_apply(prod, xb, k - 1, pot, h))
    return unbatch(out, single)


def hierarchy_generator_check(t: float, g0: DoubleSequence, s, x, pot: PotentialSpec,
                              cfg: IntegratorConfig = IntegratorConfig(),
                              steps=(0.04, 0.02, 0.01), h: float = 1e-4) -> ConvergenceStudy:
    """Central-difference time derivatives of the solution against the
    hierarchy right-hand side, one error per step size (single configuration)."""
    s = check_index_set(s)
    x = np.asarray(x, dtype=float)
    g_t = correlations_at(t, g0, pot, cfg, max_particles=len(s))
    target = float(liouville_hierarchy_rhs(t, g_t, s, x, pot, h))
    sol = lambda u: float(solve_correlations(u, g0, s, x, pot, cfg))
    return convergence_study(lambda tau: central_difference(sol, t, tau), target, steps)
