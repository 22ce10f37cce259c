"""Observables: creation operators, forward groups, reduced observables and
the dual hierarchy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bbgky import partition_function
from .combinatorics import ClusteredIndexSet, canonical_labels
from .dynamics import IntegratorConfig, PotentialSpec, check_stencil, gradient, interaction_apply, liouville_from_gradient
from .ensembles import GrandState
from .hierarchy import GroupFlows, cumulant_terms
from .numerics import QuadratureSpec, central_difference, convergence_study, integrate_component, mc_rule
from .phase import as_batch, unbatch
from .star import DoubleSequence


@dataclass(frozen=True)
class BumpObservable:
    """``coef * prod_i poly(p_i) * exp(-(q_i - c_i)^2 / (2 w^2))``."""

    coef: float
    q_centres: tuple[float, ...]
    q_width: float = 1.0
    p_poly: tuple[float, ...] = (1.0,)

    def __call__(self, xb):
        q, p = xb[..., 0], xb[..., 1]
        bump = np.exp(-0.5 * np.sum(((q - np.asarray(self.q_centres)) / self.q_width) ** 2, axis=-1))
        poly = np.polynomial.polynomial.polyval(p, self.p_poly)
        return self.coef * bump * np.prod(poly, axis=-1)


def bump_observables(max_particles: int, coef=0.5, scalar: float = 1.0, sigma: float = 1.0, spacing: float = 1.6,
                     q_width: float = 1.2, p_poly=(1.0, 0.3, 0.2), rng: np.random.Generator | None = None) -> DoubleSequence:
    """Observable sequence of products of polynomials in ``p`` and Gaussian bumps
    in ``q``; components vanish on forbidden configurations."""
    comps = {}
    for n in range(1, max_particles + 1):
        for n1 in range(n + 1):
            c = coef ** n if rng is None else coef ** n * rng.uniform(0.5, 1.5)
            shift = 0.0 if rng is None else rng.uniform(-0.3, 0.3)
            centres = tuple(shift + spacing * (i - n1 + 0.5) for i in range(n))
            poly = tuple(p_poly) if rng is None else tuple(np.asarray(p_poly) * rng.uniform(0.5, 1.5, len(p_poly)))
            comps[(n1, n - n1)] = BumpObservable(c, centres, q_width, poly)
    return DoubleSequence(comps, scalar, max_particles, sigma)


def _create(b: DoubleSequence, right: bool) -> DoubleSequence:
    def factory(n1, n2):
        src = (n1, n2 - 1) if right else (n1 - 1, n2)
        if min(src) < 0:
            return None
        if sum(src) == 0:
            return lambda xb: np.full(xb.shape[0], b.scalar0)
        if b.component(*src) is None:
            return None
        return lambda xb: b.evaluate(*src, xb[:, :-1] if right else xb[:, 1:])

    bound = None if b.support_bound is None else b.support_bound + 1
    return DoubleSequence(factory, 0.0, bound, b.sigma)


def create_right(b: DoubleSequence) -> DoubleSequence:
    """Component ``(n1, n2)`` is ``b_{(n1, n2-1)}`` of all but the rightmost particle."""
    return _create(b, True)


def create_left(b: DoubleSequence) -> DoubleSequence:
    """Component ``(n1, n2)`` is ``b_{(n1-1, n2)}`` of all but the leftmost particle."""
    return _create(b, False)


def _sum(a: DoubleSequence, b: DoubleSequence, cb: float = 1.0) -> DoubleSequence:
    def factory(n1, n2):
        if a.component(n1, n2) is None and b.component(n1, n2) is None:
            return None
        return lambda xb: a.evaluate(n1, n2, xb) + cb * b.evaluate(n1, n2, xb)

    bounds = [v for v in (a.support_bound, b.support_bound) if v is not None]
    return DoubleSequence(factory, a.scalar0 + cb * b.scalar0, max(bounds) if bounds else None, a.sigma)


def one_minus_creation(b: DoubleSequence, side: str) -> DoubleSequence:
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    return _sum(b, create_right(b) if side == "+" else create_left(b), -1.0)


def creation_resolvent(b: DoubleSequence, side: str, max_particles: int) -> DoubleSequence:
    """``sum_n (a^+)^n b`` restricted to at most ``max_particles`` particles."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    op = create_right if side == "+" else create_left
    total, power = b, b
    for _ in range(max_particles):
        power = op(power)
        total = _sum(total, power)
    return DoubleSequence(lambda n1, n2: total.component(n1, n2) if n1 + n2 <= max_particles else None,
                          total.scalar0, max_particles, b.sigma)


def adjoint_group(t: float, b, x, pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig()):
    """``(S(t) b)(x) = b(X(t, x))``; zero on forbidden configurations."""
    xb, single = as_batch(x)
    n = xb.shape[1]
    return unbatch(GroupFlows(xb, t, pot, cfg, forward=True).apply(((0, n),), b), single)


def _component(seq: DoubleSequence, n1: int, n2: int):
    if n1 + n2 == 0:
        return lambda y: np.full(y.shape[0], seq.scalar0)
    return lambda y: seq.evaluate(n1, n2, y)


def reduced_observable_terms(s):
    """``(sign, (k1, k2))`` for the boundary differences of the window ``s``."""
    s1, s2 = s
    return [(float((-1) ** (k1 + k2)), (k1, k2))
            for k1 in range(min(1, s1) + 1) for k2 in range(min(1, s2) + 1)]


def reduced_observables(t: float, A0: DoubleSequence, s, x, pot: PotentialSpec,
                        cfg: IntegratorConfig = IntegratorConfig()):
    """Alternating boundary differences of forward-evolved ``A0``."""
    s1, s2 = s
    xb, single = as_batch(x)
    n = s1 + s2
    flows = GroupFlows(xb, t, pot, cfg, forward=True)
    total = np.zeros(xb.shape[0])
    for sign, (k1, k2) in reduced_observable_terms(s):
        a, b = k1, n - k2
        f = _component(A0, s1 - k1, s2 - k2)
        total += sign * flows.apply(((a, b),), lambda y, a=a, b=b, f=f: f(y[:, a:b]))
    return unbatch(total, single)


def reduced_observable_sequence(t: float, A0: DoubleSequence, pot: PotentialSpec,
                                cfg: IntegratorConfig = IntegratorConfig(), max_particles: int | None = None) -> DoubleSequence:
    bound = A0.support_bound + 2 if max_particles is None else max_particles

    def factory(n1, n2):
        return lambda xb: reduced_observables(t, A0, (n1, n2), xb, pot, cfg)

    return DoubleSequence(factory, A0.scalar0, bound, A0.sigma)


def _dual_clusters(s):
    """``(n1, n2, ClusteredIndexSet)`` for every inner cluster of the window;
    the cluster is empty when ``n1 + n2 = 0``."""
    s1, s2 = s
    labels = canonical_labels(s1, s2)
    out = []
    for n1 in range(s1 + 1):
        for n2 in range(s2 + 1):
            a, b = s1 - n1, s1 + n2
            out.append((n1, n2, ClusteredIndexSet(labels[:a], labels[a:b], labels[b:])))
    return out


def dual_solution_series(t: float, B0: DoubleSequence, s, x, pot: PotentialSpec,
                         cfg: IntegratorConfig = IntegratorConfig()):
    """Sum over inner clusters of clustered cumulants of the forward groups
    applied to ``B0`` of the cluster."""
    s1, s2 = s
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg, forward=True)
    total = np.zeros(xb.shape[0])
    for n1, n2, c in _dual_clusters(s):
        a = s1 - n1
        f = _component(B0, n1, n2)
        terms = cumulant_terms(c.elements(allow_empty=True))
        total += flows.expand(terms, lambda y, a=a, b=s1 + n2, f=f: f(y[:, a:b]))
    return unbatch(total, single)


def dual_solution_alternate(t: float, B0: DoubleSequence, s, x, pot: PotentialSpec,
                            cfg: IntegratorConfig = IntegratorConfig()):
    """Same solution as boundary differences of forward groups acting on each
    inner component of ``B0``."""
    s1, s2 = s
    n = s1 + s2
    xb, single = as_batch(x)
    flows = GroupFlows(xb, t, pot, cfg, forward=True)
    total = np.zeros(xb.shape[0])
    for n1 in range(s1 + 1):
        for n2 in range(s2 + 1):
            f = _component(B0, n1, n2)
            a, b = s1 - n1, s1 + n2
            for k1 in range(min(1, s1 - n1) + 1):
                for k2 in range(min(1, s2 - n2) + 1):
                    total += (-1) ** (k1 + k2) * flows.apply(((k1, n - k2),),
                                                            lambda y, a=a, b=b, f=f: f(y[:, a:b]))
    return unbatch(total, single)


def dual_sequence(t: float, B0: DoubleSequence, pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig(),
                  max_particles: int | None = None) -> DoubleSequence:
    bound = B0.support_bound if max_particles is None else max_particles

    def factory(n1, n2):
        return lambda xb: dual_solution_series(t, B0, (n1, n2), xb, pot, cfg)

    return DoubleSequence(factory, B0.scalar0, bound, B0.sigma)


def dual_hierarchy_rhs(B_t: DoubleSequence, s, x, pot: PotentialSpec, h: float = 1e-4):
    """Generator of the forward groups on ``B_s`` plus the interaction terms
    coupling to ``B_{s-1}`` at each boundary."""
    s1, s2 = s
    n = s1 + s2
    xb, single = as_batch(x)
    check_stencil(xb, pot, h)
    own = lambda y: B_t.evaluate(s1, s2, y)
    out = -liouville_from_gradient(xb, gradient(own, xb, h), pot)
    if n > 1 and s1 >= 1:
        low = _component(B_t, s1 - 1, s2)
        out = out - np.asarray(interaction_apply(lambda y: low(y[:, 1:]), xb, 0, pot, h))
    if n > 1 and s2 >= 1:
        low = _component(B_t, s1, s2 - 1)
        out = out - np.asarray(interaction_apply(lambda y: low(y[:, :-1]), xb, n - 2, pot, h))
    return unbatch(out, single)


def dual_generator_check(t: float, B0: DoubleSequence, s, x, pot: PotentialSpec,
                         cfg: IntegratorConfig = IntegratorConfig(), steps=(0.04, 0.02, 0.01), h: float = 1e-4):
    x = np.asarray(x, dtype=float)
    target = float(dual_hierarchy_rhs(dual_sequence(t, B0, pot, cfg), s, x, pot, h))
    sol = lambda u: float(dual_solution_series(u, B0, s, x, pot, cfg))
    return convergence_study(lambda tau: central_difference(sol, t, tau), target, steps)


def mean_value(B: DoubleSequence, F: DoubleSequence, spec: QuadratureSpec = QuadratureSpec(),
               max_particles: int | None = None) -> float:
    """``B_0 F_0 + sum_s integral B_s F_s``."""
    bounds = [v for v in (B.support_bound, F.support_bound, max_particles) if v is not None]
    if not bounds:
        raise ValueError("mean value needs a finite support")
    total = B.scalar0 * F.scalar0
    for n1, n2 in F.arities(min(bounds)):
        if B.component(n1, n2) is None or F.component(n1, n2) is None:
            continue
        total += integrate_component(lambda y, a=(n1, n2): B.evaluate(*a, y) * F.evaluate(*a, y),
                                     n1 + n2, spec, estimate_error=False)[0]
    return float(total)


@dataclass
class DualityResult:
    t: float
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    se_diff: float

    @property
    def abs_err(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.abs_err < 3 * self.se_diff


def _windows(m1, m2):
    for s1 in range(m1 + 1):
        for s2 in range(m2 + 1):
            yield s1, s2, slice(m1 - s1, m1 + s2)


def duality_check(t: float, state: GrandState, A0: DoubleSequence, spec: QuadratureSpec, pot: PotentialSpec,
                  cfg: IntegratorConfig = IntegratorConfig(), Z: float | None = None) -> DualityResult:
    """``<B(t), F(0)>`` against ``<B(0), F(t)>`` with common random numbers.

    Both pairings are written over the ensemble components: the sum over all
    windows of a component of ``B`` paired with ``D0/Z`` (resp. the evolved
    ``D0/Z``).  Each component is integrated on one shared Monte Carlo sample.
    """
    Z = partition_function(state, spec) if Z is None else Z
    D0 = state.D0
    B0 = reduced_observable_sequence(0.0, A0, pot, cfg, state.n_max)
    lhs = rhs = D0.scalar0 * A0.scalar0 / Z
    var_l = var_r = var_d = 0.0
    rng = np.random.default_rng(spec.seed)
    for m1, m2 in D0.arities(state.n_max):
        if D0.component(m1, m2) is None:
            continue
        m = m1 + m2
        nodes, w = mc_rule(m, spec, rng)
        vol = w[0] * len(w)
        d0 = D0.evaluate(m1, m2, nodes)
        dt_ = GroupFlows(nodes, t, pot, cfg).apply(((0, m),), lambda y: D0.evaluate(m1, m2, y))
        bt = np.zeros(len(w))
        b0 = np.zeros(len(w))
        for s1, s2, win in _windows(m1, m2):
            sub = nodes[:, win]
            if s1 + s2 == 0:
                bt += A0.scalar0
                b0 += A0.scalar0
                continue
            bt += reduced_observables(t, A0, (s1, s2), sub, pot, cfg)
            b0 += B0.evaluate(s1, s2, sub)
        vl = vol * d0 * bt / Z
        vr = vol * dt_ * b0 / Z
        N = len(w)
        lhs += vl.mean()
        rhs += vr.mean()
        var_l += vl.var(ddof=1) / N
        var_r += vr.var(ddof=1) / N
        var_d += (vl - vr).var(ddof=1) / N
    return DualityResult(t, float(lhs), float(rhs), math.sqrt(var_l), math.sqrt(var_r), math.sqrt(var_d))


def adjointness_creation(b: DoubleSequence, f: DoubleSequence, side: str, spec: QuadratureSpec,
                         max_particles: int):
    """``(<a^+ b, f>, <b, a f>)`` on a shared tensor rule."""
    from .bbgky import annihilate

    ab = create_right(b) if side == "+" else create_left(b)
    lhs = mean_value(ab, f, spec, max_particles)
    rhs = mean_value(b, annihilate(f, side, spec), spec, max_particles - 1)
    return lhs, rhs


def adjointness_group(t: float, b, f, n_particles: int, spec: QuadratureSpec, pot: PotentialSpec,
                      cfg: IntegratorConfig = IntegratorConfig()):
    """``(<S(t) b, f>, <b, S*(t) f>)`` with standard errors of both and of the
    difference, on one Monte Carlo sample."""
    nodes, w = mc_rule(n_particles, spec)
    vol = w[0] * len(w)
    n = n_particles
    sb = GroupFlows(nodes, t, pot, cfg, forward=True).apply(((0, n),), b)
    sf = GroupFlows(nodes, t, pot, cfg).apply(((0, n),), f)
    vl = vol * sb * np.asarray(f(nodes))
    vr = vol * np.asarray(b(nodes)) * sf
    N = len(w)
    se = lambda v: float(v.std(ddof=1) / math.sqrt(N))
    return float(vl.mean()), float(vr.mean()), se(vl), se(vr), se(vl - vr)
