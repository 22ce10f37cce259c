"""Reduced distribution functions and the BBGKY hierarchy.

Integrals over "outer" particles (``n1`` prepended on the left, ``n2``
appended on the right of an ``s1 + s2`` window) use the rules of
:mod:`topochain.numerics`.  Series are finite because every initial
sequence has a finite support.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combinatorics import ClusteredIndexSet, canonical_labels, compositions, mobius_sign
from .dynamics import IntegratorConfig, PotentialSpec, liouville_apply
from .ensembles import GrandState
from .hierarchy import GroupFlows, cumulant_terms, element_spans, _solve_flat
from .numerics import (
    NormWeight,
    QuadratureSpec,
    central_difference,
    convergence_study,
    integrate_component,
    integrate_outer,
)
from .phase import as_batch, unbatch
from .star import DoubleSequence, cluster_expand, cumulant_transform, element_partition_sum


def c_alpha(alpha: float) -> float:
    if not alpha > 2:
        raise ValueError("the c_alpha bound needs alpha > 2")
    return 1.0 / (1.0 - 2.0 / alpha)


def _outer_arities(s, bound):
    s1, s2 = s
    if s1 < 0 or s2 < 0 or s1 + s2 < 1:
        raise ValueError("window needs s1 + s2 >= 1")
    return [(n1, n - n1) for n in range(0, bound - s1 - s2 + 1) for n1 in range(n + 1)]


def _window_elements(n1, s1, s2, n2):
    labels = canonical_labels(n1 + s1, s2 + n2)
    cluster = ClusteredIndexSet(labels[:n1], labels[n1:n1 + s1 + s2], labels[n1 + s1 + s2:])
    return labels, cluster


def partition_function(state: GrandState, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Scalar component plus the integrals of all components."""
    D0 = state.D0
    total = D0.scalar0
    for n1, n2 in D0.arities(state.n_max):
        if D0.component(n1, n2) is not None:
            total += integrate_component(lambda y, a=(n1, n2): D0.evaluate(*a, y), n1 + n2, spec,
                                         estimate_error=False)[0]
    if not total > 0:
        raise ValueError("degenerate ensemble")
    return float(total)


def _group_value(t, seq, labels, pot, cfg):
    """Integrand ``y -> (S*(t) seq)(y)`` on the whole chain ``labels``."""
    n = len(labels)

    def fn(y):
        if t == 0:
            return seq.block(labels, y)
        return GroupFlows(y, t, pot, cfg).apply(((0, n),), lambda z: seq.block(labels, z))

    return fn


def reduced_distribution_direct(t: float, state: GrandState, s, x, spec: QuadratureSpec,
                                pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig(),
                                Z: float | None = None):
    """Normalized sum over outer particles of integrals of the evolved ensemble."""
    s1, s2 = s
    xb, single = as_batch(x)
    Z = partition_function(state, spec) if Z is None else Z
    total = np.zeros(xb.shape[0])
    for n1, n2 in _outer_arities(s, state.n_max):
        if state.D0.component(n1 + s1, s2 + n2) is None:
            continue
        labels = canonical_labels(n1 + s1, s2 + n2)
        total += integrate_outer(_group_value(t, state.D0, labels, pot, cfg), xb, n1, n2, spec)
    return unbatch(total / Z, single)


def reduced_sequence(t: float, state: GrandState, spec: QuadratureSpec, pot: PotentialSpec,
                     cfg: IntegratorConfig = IntegratorConfig(), Z: float | None = None) -> DoubleSequence:
    """``F(t)`` from the ensemble as a lazily integrated sequence; ``F_0 = 1``."""
    Z = partition_function(state, spec) if Z is None else Z

    def factory(n1, n2):
        return lambda xb: reduced_distribution_direct(t, state, (n1, n2), xb, spec, pot, cfg, Z)

    return DoubleSequence(factory, 1.0, state.n_max)


def annihilate(f: DoubleSequence, side: str, spec: QuadratureSpec) -> DoubleSequence:
    """Integrate one extra particle appended on the right (``side="+"``) or
    prepended on the left (``side="-"``)."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    right = side == "+"
    bound = f.support_bound
    if bound is None:
        raise ValueError("annihilation needs a finite support")

    def factory(n1, n2):
        src = (n1, n2 + 1) if right else (n1 + 1, n2)
        if f.component(*src) is None and sum(src) > 0:
            return None
        return lambda xb: integrate_outer(lambda y: f.evaluate(*src, y), xb,
                                          0 if right else 1, 1 if right else 0, spec)

    def scalar():
        src = (0, 1) if right else (1, 0)
        if f.component(*src) is None:
            return 0.0
        return integrate_component(lambda y: f.evaluate(*src, y), 1, spec, estimate_error=False)[0]

    return DoubleSequence(factory, scalar(), max(bound - 1, 0))


def annihilate_right(f: DoubleSequence, spec: QuadratureSpec = QuadratureSpec()) -> DoubleSequence:
    return annihilate(f, "+", spec)


def annihilate_left(f: DoubleSequence, spec: QuadratureSpec = QuadratureSpec()) -> DoubleSequence:
    return annihilate(f, "-", spec)


def _add(a: DoubleSequence, b: DoubleSequence, cb: float = 1.0) -> DoubleSequence:
    bound = max(a.support_bound or 0, b.support_bound or 0)

    def factory(n1, n2):
        ca, cbb = a.component(n1, n2), b.component(n1, n2)
        if ca is None and cbb is None:
            return None
        return lambda xb: a.evaluate(n1, n2, xb) + cb * b.evaluate(n1, n2, xb)

    return DoubleSequence(factory, a.scalar0 + cb * b.scalar0, bound)


def annihilation_resolvent(f: DoubleSequence, side: str, spec: QuadratureSpec = QuadratureSpec()) -> DoubleSequence:
    """``sum_n a^n f``; the sum stops at the support bound."""
    total, power = f, f
    for _ in range(f.support_bound or 0):
        power = annihilate(power, side, spec)
        total = _add(total, power)
    return total


def one_minus_annihilation(f: DoubleSequence, side: str, spec: QuadratureSpec = QuadratureSpec()) -> DoubleSequence:
    return _add(f, annihilate(f, side, spec), -1.0)


def _series(t, F0, s, x, spec, pot, cfg, integrand_terms):
    s1, s2 = s
    xb, single = as_batch(x)
    total = np.zeros(xb.shape[0])
    for n1, n2 in _outer_arities(s, F0.support_bound):
        if F0.component(n1 + s1, s2 + n2) is None:
            continue
        labels, cluster = _window_elements(n1, s1, s2, n2)
        terms = integrand_terms(n1, s1, s2, n2, cluster)
        f = lambda y, labels=labels: F0.block(labels, y)
        fn = lambda y, terms=terms, f=f: GroupFlows(y, t, pot, cfg).expand(terms, f)
        total += integrate_outer(fn, xb, n1, n2, spec)
    return unbatch(total, single)


def bbgky_solution_series(t: float, F0: DoubleSequence, s, x, spec: QuadratureSpec, pot: PotentialSpec,
                          cfg: IntegratorConfig = IntegratorConfig()):
    """Series over outer particles of clustered group cumulants applied to ``F0``."""
    return _series(t, F0, s, x, spec, pot, cfg, lambda n1, s1, s2, n2, c: cumulant_terms(c.elements()))


def reduced_group_terms(n1, s1, s2, n2):
    """Terms of the reduced generating operator: alternating removal of at most
    one boundary particle on each side that has outer particles."""
    n = n1 + s1 + s2 + n2
    out = []
    for k1 in range(min(1, n1) + 1):
        for k2 in range(min(1, n2) + 1):
            out.append((float((-1) ** (k1 + k2)), ((k1, n - k2),)))
    return out


def bbgky_solution_reduced(t: float, F0: DoubleSequence, s, x, spec: QuadratureSpec, pot: PotentialSpec,
                           cfg: IntegratorConfig = IntegratorConfig()):
    return _series(t, F0, s, x, spec, pot, cfg, lambda n1, s1, s2, n2, c: reduced_group_terms(n1, s1, s2, n2))


def cluster_correlation_at(t: float, g0: DoubleSequence, c: ClusteredIndexSet, x, pot: PotentialSpec,
                           cfg: IntegratorConfig = IntegratorConfig()):
    """Correlation of a cluster and particles at time ``t`` from initial
    correlations: cumulants over the blocks of every composition of the
    elements, acting on products of clustered initial correlations."""
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg)
    D0 = cluster_expand(g0)
    total = np.zeros(xb.shape[0])
    for part in compositions(c.elements()):
        spans = element_spans([sum(block, ()) for block in part])
        flat = [tuple(v for el in block for v in el) for block in part]

        def h(y, part=part, spans=spans):
            out = np.ones(y.shape[0])
            for block, (a, b) in zip(part, spans):
                out = out * element_partition_sum(D0, block, y[:, a:b], signed=True)
            return out

        total += flows.expand(cumulant_terms(flat), h)
    return unbatch(total, single)


def initial_correlations(state: GrandState) -> DoubleSequence:
    """Cumulants of the ensemble components (scalar part dropped)."""
    D0 = state.D0
    return cumulant_transform(DoubleSequence(D0.component, 0.0, D0.support_bound, D0.sigma))


def reduced_distribution_via_correlations(t: float, g0: DoubleSequence, s, x, spec: QuadratureSpec,
                                          pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig(),
                                          n_outer: int = 2):
    """Sum over up to ``n_outer`` outer particles of integrals of the cluster
    correlation functions (no normalization factor)."""
    s1, s2 = s
    xb, single = as_batch(x)
    total = np.zeros(xb.shape[0])
    for n1, n2 in _outer_arities(s, s1 + s2 + n_outer):
        _, cluster = _window_elements(n1, s1, s2, n2)
        fn = lambda y, c=cluster: cluster_correlation_at(t, g0, c, y, pot, cfg)
        total += integrate_outer(fn, xb, n1, n2, spec)
    return unbatch(total, single)


def reduced_correlations_from_F(F: DoubleSequence, s, x):
    """Cumulants of the reduced distributions over the window ``s``."""
    labels = canonical_labels(*s)
    xb, single = as_batch(x)
    total = np.zeros(xb.shape[0])
    for part in compositions(labels):
        term = np.ones(xb.shape[0])
        pos = 0
        for block in part:
            term = term * F.block(block, xb[:, pos:pos + len(block)])
            pos += len(block)
        total += mobius_sign(part) * term
    return unbatch(total, single)


def reduced_correlations_series(t: float, g0: DoubleSequence, s, x, spec: QuadratureSpec, pot: PotentialSpec,
                                cfg: IntegratorConfig = IntegratorConfig(), n_outer: int = 2):
    """Sum over outer particles of integrals of the evolved correlations of the
    whole chain."""
    s1, s2 = s
    xb, single = as_batch(x)
    total = np.zeros(xb.shape[0])
    for n1, n2 in _outer_arities(s, s1 + s2 + n_outer):
        labels = canonical_labels(n1 + s1, s2 + n2)
        fn = lambda y, labels=labels: _solve_flat(GroupFlows(y, t, pot, cfg), g0, labels)
        total += integrate_outer(fn, xb, n1, n2, spec)
    return unbatch(total, single)


def _dp(f, xb, i, h):
    """Richardson central difference in ``p_i``."""
    def at(d):
        y = xb.copy()
        y[:, i, 1] += d
        return np.asarray(f(y), dtype=float)

    d1 = (at(h) - at(-h)) / (2 * h)
    d2 = (at(h / 2) - at(-h / 2)) / h
    return (4 * d2 - d1) / 3


def collision_integral(F: DoubleSequence, s, x, side: str, spec: QuadratureSpec, pot: PotentialSpec,
                       h: float = 1e-4):
    """Boundary term: one extra particle next to the window, force on the
    adjacent window particle times the momentum derivative of ``F_{s+1}``."""
    s1, s2 = s
    xb, single = as_batch(x)
    if side == "-":
        labels, n1, n2, j, k = canonical_labels(s1 + 1, s2), 1, 0, 1, 0
    else:
        labels, n1, n2 = canonical_labels(s1, s2 + 1), 0, 1
        j, k = s1 + s2 - 1, s1 + s2
    if F.component(*((s1 + 1, s2) if side == "-" else (s1, s2 + 1))) is None:
        return unbatch(np.zeros(xb.shape[0]), single)

    def fn(y):
        coef = pot.pair_coefficient(y[:, j, 0], y[:, k, 0])
        keep = coef != 0
        out = np.zeros(y.shape[0])
        if keep.any():
            out[keep] = coef[keep] * _dp(lambda z: F.block(labels, z), y[keep], j, h)
        return out

    return unbatch(integrate_outer(fn, xb, n1, n2, spec), single)


def bbgky_rhs(F_t: DoubleSequence, s, x, spec: QuadratureSpec, pot: PotentialSpec, h: float = 1e-4):
    labels = canonical_labels(*s)
    xb, single = as_batch(x)
    out = np.asarray(liouville_apply(lambda y: F_t.block(labels, y), xb, pot, h))
    out = out + np.asarray(collision_integral(F_t, s, xb, "-", spec, pot, h))
    out = out + np.asarray(collision_integral(F_t, s, xb, "+", spec, pot, h))
    return unbatch(out, single)


def bbgky_rhs_check(t: float, state: GrandState, s, x, spec: QuadratureSpec, pot: PotentialSpec,
                    cfg: IntegratorConfig = IntegratorConfig(), steps=(0.02, 0.01, 0.005), h: float = 1e-4):
    """Time derivative of the reduced distribution against the hierarchy
    right-hand side at one configuration; returns a convergence study."""
    x = np.asarray(x, dtype=float)
    Z = partition_function(state, spec)
    target = float(bbgky_rhs(reduced_sequence(t, state, spec, pot, cfg, Z), s, x, spec, pot, h))
    F = lambda u: float(reduced_distribution_direct(u, state, s, x, spec, pot, cfg, Z))
    return convergence_study(lambda tau: central_difference(F, t, tau), target, steps)


@dataclass
class NormReport:
    alpha: float
    cumulant_ratios: dict
    solution_ratio: float
    c_alpha: float
    norm_F0: float
    norm_Ft: float

    def as_records(self):
        recs = [{"check_id": f"cumulant_norm_{k}", "ratio": v, "bound": 2.0 ** sum(map(int, k.split("+")))}
                for k, v in self.cumulant_ratios.items()]
        recs.append({"check_id": "solution_norm", "ratio": self.solution_ratio, "bound": self.c_alpha})
        return recs


def cumulant_norm_ratio(t: float, f: DoubleSequence, s, n, spec: QuadratureSpec, pot: PotentialSpec,
                        cfg: IntegratorConfig = IntegratorConfig()):
    """``||A_{1+n1+n2}(t) f|| / ||f||`` on the ``s + n`` particle component."""
    s1, s2 = s
    n1, n2 = n
    labels, cluster = _window_elements(n1, s1, s2, n2)
    terms = cumulant_terms(cluster.elements())
    N = len(labels)
    fe = lambda y: f.block(labels, y)
    num = integrate_component(lambda y: np.abs(GroupFlows(y, t, pot, cfg).expand(terms, fe)), N, spec, estimate_error=False)[0]
    den = integrate_component(lambda y: np.abs(fe(y)), N, spec, estimate_error=False)[0]
    return num / den


def truncate(f: DoubleSequence, max_particles: int) -> DoubleSequence:
    """Drop components with more than ``max_particles`` particles."""
    return DoubleSequence(lambda n1, n2: f.component(n1, n2) if n1 + n2 <= max_particles else None,
                          f.scalar0, max_particles, f.sigma)


def norm_bound_checks(t: float, F0: DoubleSequence, alpha: float, spec: QuadratureSpec, pot: PotentialSpec,
                      cfg: IntegratorConfig = IntegratorConfig(), inner_spec: QuadratureSpec | None = None,
                      s=(0, 1), max_outer: int = 2, solution_support: int | None = None) -> NormReport:
    """Measured cumulant-norm ratios (up to ``max_outer`` outer particles) and
    the weighted norm ratio of the series solution against ``F0``, the latter
    on ``F0`` truncated to ``solution_support`` particles."""
    ca = c_alpha(alpha)
    w = NormWeight(alpha)
    inner_spec = spec if inner_spec is None else inner_spec
    ratios = {}
    for n1, n2 in _outer_arities(s, min(F0.support_bound, sum(s) + max_outer)):
        if F0.component(n1 + s[0], s[1] + n2) is None:
            continue
        ratios[f"{n1}+{n2}"] = cumulant_norm_ratio(t, F0, s, (n1, n2), spec, pot, cfg)
    G0 = F0 if solution_support is None else truncate(F0, solution_support)
    norm0 = abs(G0.scalar0)
    normt = abs(G0.scalar0)
    for a in G0.arities():
        if G0.component(*a) is None:
            continue
        n = sum(a)
        norm0 += w.alpha ** n * integrate_component(lambda y: np.abs(G0.evaluate(*a, y)), n, spec,
                                                    estimate_error=False)[0]
        Ft = lambda y, a=a: bbgky_solution_series(t, G0, a, y, inner_spec, pot, cfg)
        normt += w.alpha ** n * integrate_component(lambda y: np.abs(Ft(y)), n, spec, estimate_error=False)[0]
    return NormReport(alpha, ratios, normt / norm0, ca, norm0, normt)
