"""Verification suites producing report records."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bbgky, hierarchy, observables
from .combinatorics import ClusteredIndexSet, canonical_labels, compositions
from .dynamics import IntegratorConfig, PotentialSpec, conserved_quantities, hamiltonian_flow
from .ensembles import chain_ensemble, random_numeric_sequence, random_sequence, split_ensemble
from .numerics import QuadratureSpec
from .star import cluster_expand, cluster_to_particle_relation_check, cumulant_transform, symbolic_terms

SUITES = ("combinatorics", "star", "dynamics", "hierarchy", "bbgky", "observables")


@dataclass
class RunConfig:
    sigma: float = 1.0
    range: float = 1.5
    epsilon: float = 1.0
    dt: float = 1e-3
    event_tol: float = 1e-10
    quadrature: dict = field(default_factory=dict)
    n_max: int = 4
    alpha: float = 4.0
    seed: int = 42
    t: float | None = None

    @property
    def pot(self) -> PotentialSpec:
        return PotentialSpec(self.sigma, self.range, self.epsilon)

    @property
    def cfg(self) -> IntegratorConfig:
        return IntegratorConfig(self.dt, self.event_tol)

    def spec(self, **kw) -> QuadratureSpec:
        base = dict(self.quadrature)
        for k in ("q_box", "p_box"):
            if k in base:
                base[k] = tuple(base[k])
        base.setdefault("seed", self.seed)
        base.update(kw)
        return QuadratureSpec(**base)


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def record(check_id: str, params: dict, lhs, rhs, tolerance: float, bound: bool = False) -> dict:
    """One report entry.  ``bound=True`` checks ``lhs <= rhs`` (the error is
    the excess) instead of ``lhs == rhs``."""
    lhs, rhs = float(lhs), float(rhs)
    err = max(0.0, lhs - rhs) if bound else abs(lhs - rhs)
    rel = err / max(abs(rhs), 1e-300)
    return {"check_id": check_id, "params": params, "lhs": _num(lhs), "rhs": _num(rhs),
            "abs_err": _num(err), "rel_err": _num(rel), "tolerance": tolerance,
            "pass": bool(math.isfinite(err) and err <= tolerance)}


def allowed_chain(rng: np.random.Generator, n: int, sigma: float = 1.0, gap=(0.05, 0.6), p_scale: float = 1.0):
    q = np.cumsum(np.concatenate([[0.0], sigma + rng.uniform(*gap, n - 1)]))
    return np.stack([q - q.mean(), p_scale * rng.normal(size=n)], axis=-1)


# golden term lists: (sign, blocks) with blocks as label lists
GOLDEN = {
    ("cluster", (1, 1)): [(1, [[-1, 1]]), (1, [[-1], [1]])],
    ("cluster", (1, 2)): [(1, [[-1, 1, 2]]), (1, [[-1, 1], [2]]), (1, [[-1], [1, 2]]), (1, [[-1], [1], [2]])],
    ("cumulant", (1, 1)): [(1, [[-1, 1]]), (-1, [[-1], [1]])],
    ("cumulant", (1, 2)): [(1, [[-1, 1, 2]]), (-1, [[-1, 1], [2]]), (-1, [[-1], [1, 2]]), (1, [[-1], [1], [2]])],
}


def _term_set(terms):
    return sorted((t["sign"], tuple(tuple(b) for b in t["blocks"])) for t in terms)


def suite_combinatorics(rc: RunConfig) -> list[dict]:
    out = []
    for n in range(1, 13):
        out.append(record("interval_partition_count", {"n": n}, len(compositions(tuple(range(n)))), 2 ** (n - 1), 0.0))
    for n1, n2 in ((0, 0), (1, 0), (1, 1), (2, 1), (1, 2), (2, 2), (3, 2)):
        for k in (1, 2, 3):
            labels = canonical_labels(n1 + 1, n2 + k - 1)
            c = ClusteredIndexSet(labels[:n1], labels[n1:n1 + k], labels[n1 + k:])
            out.append(record("clustered_partition_count", {"n1": n1, "n2": n2, "cluster": list(c.cluster)},
                              len(compositions(c.elements())), 2 ** (n1 + n2), 0.0))
    for (kind, s), gold in GOLDEN.items():
        for name in ((("D",) if kind == "cluster" else ("g", "A"))):
            got = _term_set(symbolic_terms(canonical_labels(*s), kind))
            want = sorted((sg, tuple(tuple(b) for b in bl)) for sg, bl in gold)
            out.append(record("golden_expansion", {"name": f"{name}_{s[0]}+{s[1]}", "kind": kind},
                              float(got == want), 1.0, 0.0))
    return out


def suite_star(rc: RunConfig, n_sequences: int = 20) -> list[dict]:
    rng = np.random.default_rng(rc.seed)
    bound = min(rc.n_max + 1, 5)
    err_c = err_g = err_rel = 0.0
    for _ in range(n_sequences):
        D = random_numeric_sequence(rng, bound)
        g = cumulant_transform(D)
        back = cluster_expand(g)
        g2 = cumulant_transform(cluster_expand(D))
        for n in range(1, bound + 1):
            for n1 in range(n + 1):
                x = rng.normal(size=(8, n, 2))
                err_c = max(err_c, np.max(np.abs(back.evaluate(n1, n - n1, x) - D.evaluate(n1, n - n1, x))))
                err_g = max(err_g, np.max(np.abs(g2.evaluate(n1, n - n1, x) - D.evaluate(n1, n - n1, x))))
        labels = canonical_labels(2, 2)
        c = ClusteredIndexSet(labels[:1], labels[1:3], labels[3:])
        lhs, rhs = cluster_to_particle_relation_check(D, c, rng.normal(size=(8, 4, 2)))
        err_rel = max(err_rel, np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
    p = {"sequences": n_sequences, "support": bound}
    return [record("cluster_of_cumulant_roundtrip", p, err_c, 0.0, 1e-12),
            record("cumulant_of_cluster_roundtrip", p, err_g, 0.0, 1e-12),
            record("clustered_relation", p, err_rel, 0.0, 1e-12)]


def hard_rod_pair(x, t, sigma: float = 1.0):
    """Two free rods of unit mass colliding elastically: momenta swap at contact."""
    (q1, p1), (q2, p2) = x
    tc = (q2 - q1 - sigma) / (p1 - p2) if p1 > p2 else math.inf
    if t <= tc:
        return np.array([[q1 + p1 * t, p1], [q2 + p2 * t, p2]])
    a, b = q1 + p1 * tc, q2 + p2 * tc
    return np.array([[a + p2 * (t - tc), p2], [b + p1 * (t - tc), p1]])


def suite_dynamics(rc: RunConfig, n_points: int = 100) -> list[dict]:
    rng = np.random.default_rng(rc.seed)
    pot, cfg = rc.pot, rc.cfg
    out = []
    T = 5.0 if rc.t is None else rc.t
    xs = np.stack([allowed_chain(rng, 4, pot.sigma, (0.1, 0.6)) for _ in range(8)])
    e0, _ = conserved_quantities(xs, pot)
    xt = hamiltonian_flow(xs, T, pot, cfg)
    e1, _ = conserved_quantities(xt, pot)
    back = hamiltonian_flow(xt, -T, pot, cfg)
    p = {"particles": 4, "t": T, "chains": 8}
    out.append(record("energy_drift", p, float(np.max(np.abs(e1 - e0) / np.abs(e0))), 0.0, 1e-8))
    out.append(record("time_reversal", p, float(np.max(np.abs(back - xs))), 0.0, 1e-8))
    rods = PotentialSpec(pot.sigma, pot.range, 0.0)
    err = 0.0
    for _ in range(20):
        x = np.array([[-1.0, rng.uniform(0.2, 1.5)], [rng.uniform(0.3, 1.0), rng.uniform(-1.5, 0.0)]])
        for t in (0.5, 1.0, 2.0):
            err = max(err, np.max(np.abs(hamiltonian_flow(x, t, rods, cfg) - hard_rod_pair(x, t, pot.sigma))))
    out.append(record("hard_rod_pair_oracle", {"pairs": 20}, err, 0.0, 1e-9))
    xs = np.stack([allowed_chain(rng, 3, pot.sigma) for _ in range(n_points)])
    a = hamiltonian_flow(hamiltonian_flow(xs, 0.7, pot, cfg), 0.6, pot, cfg)
    b = hamiltonian_flow(xs, 1.3, pot, cfg)
    out.append(record("group_property", {"points": n_points, "t": [0.7, 0.6]}, float(np.max(np.abs(a - b))), 0.0, 1e-6))
    return out


def suite_hierarchy(rc: RunConfig, n_points: int = 50) -> list[dict]:
    rng = np.random.default_rng(rc.seed)
    pot, cfg = rc.pot, rc.cfg
    out = []
    nmax = min(rc.n_max, 4)
    times = (0.5, 1.0, 2.0) if rc.t is None else (rc.t,)
    f = random_sequence(rng, nmax, pot.sigma, masked=False)
    for n in range(2, nmax + 1):
        labels = canonical_labels(n // 2, n - n // 2)
        xs = np.stack([allowed_chain(rng, n, pot.sigma) for _ in range(n_points)])
        for t in times:
            lhs, rhs = hierarchy.group_cluster_expansion(t, [(v,) for v in labels], f, xs, pot, cfg)
            out.append(record("group_cluster_expansion", {"n": n, "t": t}, float(np.max(np.abs(lhs - rhs))), 0.0, 1e-9))
            i = n // 2 - 1
            c = ClusteredIndexSet(labels[:i], labels[i:i + 2], labels[i + 2:])
            lhs, rhs = hierarchy.group_cluster_expansion(t, c.elements(), f, xs, pot, cfg)
            out.append(record("clustered_group_cluster_expansion", {"n": n, "t": t, "cluster": list(c.cluster)},
                              float(np.max(np.abs(lhs - rhs))), 0.0, 1e-9))
    g0 = random_sequence(rng, 3, pot.sigma, delta=0.1, scale=0.3)
    for s in ((0, 1), (1, 1), (0, 2), (1, 2), (2, 1)):
        xs = np.stack([allowed_chain(rng, sum(s), pot.sigma, (0.3, 0.8)) for _ in range(10)])
        labels = canonical_labels(*s)
        t = times[0]
        a = hierarchy.solve_correlations(t, g0, labels, xs, pot, cfg)
        b = hierarchy.solve_correlations_clustered(t, g0, labels, xs, pot, cfg)
        c = hierarchy.evolved_correlations_direct(t, g0, labels, xs, pot, cfg)
        scale = max(float(np.max(np.abs(c))), 1e-300)
        p = {"s": list(s), "t": t}
        out.append(record("correlations_clustered_route", p, float(np.max(np.abs(a - b))) / scale, 0.0, 1e-8))
        out.append(record("correlations_direct_route", p, float(np.max(np.abs(a - c))) / scale, 0.0, 1e-8))
    x = allowed_chain(rng, 2, pot.sigma, (0.4, 0.45))
    study = hierarchy.hierarchy_generator_check(0.3, g0, (-1, 1), x, pot, cfg, steps=(0.02, 0.01, 0.005))
    p = {"s": [1, 1], "t": 0.3, "steps": study.steps}
    out.append(record("liouville_hierarchy_residual", p, study.finest_error, 0.0, 1e-4))
    out.append(record("liouville_hierarchy_order", p, 2.0, study.min_order, 0.0, bound=True))
    return out


def suite_bbgky(rc: RunConfig) -> list[dict]:
    pot, cfg = rc.pot, IntegratorConfig(min(rc.dt, 1e-2), rc.event_tol)
    out = []
    t = 0.5 if rc.t is None else rc.t
    spec = rc.spec(points=16, q_panels=32, p_panels=2, tensor_particles=1)
    zspec = rc.spec(points=16, q_panels=4, p_panels=2, tensor_particles=2)
    xs = np.array([[[0.3, 0.2]], [[-0.5, -1.0]]])
    for s, x in (((0, 1), xs), ((1, 0), xs), ((1, 1), np.array([[[-0.8, 0.3], [0.8, -0.2]]]))):
        st = chain_ensemble(n_max=sum(s) + 1, activity=0.5, delta=0.5)
        Z = bbgky.partition_function(st, zspec)
        F0 = bbgky.reduced_sequence(0.0, st, spec, pot, cfg, Z)
        ms = bbgky.reduced_distribution_direct(t, st, s, x, spec, pot, cfg, Z)
        bh = bbgky.bbgky_solution_series(t, F0, s, x, spec, pot, cfg)
        rs = bbgky.bbgky_solution_reduced(t, F0, s, x, spec, pot, cfg)
        p = {"s": list(s), "t": t, "n_max": st.n_max, "points": len(x)}
        out.append(record("series_vs_direct", p, float(np.max(np.abs(bh - ms))), 0.0, 1e-6))
        out.append(record("series_vs_reduced", p, float(np.max(np.abs(bh - rs))), 0.0, 1e-6))
    st = split_ensemble(m_max=1, activity=0.03, delta=0.5)
    sp = rc.spec(points=16, q_panels=16, p_panels=2, tensor_particles=1, samples=100_000)
    Z = bbgky.partition_function(st, zspec)
    g0 = bbgky.initial_correlations(st)
    x = np.array([[[1.8, 0.2]], [[2.5, -1.0]]])
    ms = bbgky.reduced_distribution_direct(t, st, (0, 1), x, sp, pot, cfg, Z)
    fc = bbgky.reduced_distribution_via_correlations(t, g0, (0, 1), x, sp, pot, cfg, n_outer=2)
    out.append(record("correlation_route_vs_direct", {"s": [0, 1], "t": t, "activity": 0.03, "n_outer": 2},
                      float(np.max(np.abs(fc - ms))), 0.0, 1e-6))
    st = split_ensemble(m_max=2, activity=0.05, delta=0.5)
    Z = bbgky.partition_function(st, zspec)
    g0 = bbgky.initial_correlations(st)
    x = np.array([[[1.5, 0.2], [3.3, 0.1]], [[2.0, -1.0], [3.6, 0.5]]])
    F = bbgky.reduced_sequence(t, st, sp, pot, cfg, Z)
    ga = bbgky.reduced_correlations_from_F(F, (0, 2), x)
    gb = bbgky.reduced_correlations_series(t, g0, (0, 2), x, sp, pot, cfg, n_outer=1)
    out.append(record("reduced_correlation_routes", {"s": [0, 2], "t": t, "n_outer": 1},
                      float(np.max(np.abs(ga - gb))), 0.0, 1e-3))
    stiff = PotentialSpec(pot.sigma, pot.range, 20.0)
    scfg = IntegratorConfig(5e-4, rc.event_tol)
    st = chain_ensemble(n_max=2, activity=0.5, delta=0.5)
    errs = []
    panels = (16, 32)
    for qp in panels:
        study = bbgky.bbgky_rhs_check(0.3, st, (0, 1), np.array([[0.3, 0.2]]),
                                      rc.spec(points=16, q_panels=qp, p_panels=2), stiff, scfg, steps=(0.01,))
        errs.append(study.finest_error)
    p = {"s": [0, 1], "t": 0.3, "epsilon": 20.0, "q_panels": list(panels), "errors": errs}
    out.append(record("bbgky_residual", p, errs[-1], 0.0, 1e-3))
    out.append(record("bbgky_residual_refinement", p, errs[-1], errs[0], 0.0, bound=True))
    return out


def suite_norm_bounds(rc: RunConfig) -> list[dict]:
    pot, cfg = rc.pot, IntegratorConfig(min(rc.dt, 1e-2), rc.event_tol)
    t = 1.0 if rc.t is None else rc.t
    st = chain_ensemble(n_max=3, activity=0.5, delta=0.5)
    F0 = bbgky.truncate(st.D0, 3)
    F0 = type(F0)(F0.component, 0.0, 3, pot.sigma)
    spec = rc.spec(points=16, q_panels=2, p_panels=1, samples=100_000, tensor_particles=2)
    rep = bbgky.norm_bound_checks(t, F0, rc.alpha, spec, pot, cfg, s=(0, 1), solution_support=2)
    out = []
    for k, v in rep.cumulant_ratios.items():
        n = sum(map(int, k.split("+")))
        out.append(record("cumulant_norm_ratio", {"n": k, "t": t}, v, 2.0 ** n, 2.0 ** n * 1e-6, bound=True))
    out.append(record("solution_norm_ratio", {"alpha": rc.alpha, "t": t, "norm_F0": rep.norm_F0, "norm_Ft": rep.norm_Ft},
                      rep.solution_ratio, rep.c_alpha, 1e-3, bound=True))
    return out


def suite_observables(rc: RunConfig) -> list[dict]:
    rng = np.random.default_rng(rc.seed)
    pot, cfg = rc.pot, rc.cfg
    t = 0.7 if rc.t is None else rc.t
    A0 = observables.bump_observables(2, scalar=0.7, sigma=pot.sigma, rng=rng)
    B0 = observables.reduced_observable_sequence(0.0, A0, pot, cfg, 4)
    out = []
    for s in ((0, 1), (1, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2)):
        xs = np.stack([allowed_chain(rng, sum(s), pot.sigma) for _ in range(20)])
        a = observables.dual_solution_series(t, B0, s, xs, pot, cfg)
        b = observables.reduced_observables(t, A0, s, xs, pot, cfg)
        c = observables.dual_solution_alternate(t, B0, s, xs, pot, cfg)
        z = observables.dual_solution_series(0.0, B0, s, xs, pot, cfg)
        p = {"s": list(s), "t": t}
        out.append(record("dual_series_vs_reduced_observables", p, float(np.max(np.abs(a - b))), 0.0, 1e-9))
        out.append(record("dual_series_vs_alternate", p, float(np.max(np.abs(a - c))), 0.0, 1e-9))
        out.append(record("dual_series_initial", p, float(np.max(np.abs(z - B0.evaluate(*s, xs)))), 0.0, 1e-12))
    x = allowed_chain(rng, 2, pot.sigma, (0.3, 0.4))
    for s in ((1, 1), (0, 2)):
        study = observables.dual_generator_check(0.4, B0, s, x, pot, cfg, steps=(0.02, 0.01))
        out.append(record("dual_hierarchy_residual", {"s": list(s), "t": 0.4, "steps": study.steps},
                          study.finest_error, 0.0, 1e-4))
    st = chain_ensemble(n_max=2, activity=0.5, delta=0.5)
    f = type(st.D0)(st.D0.component, 0.3, 2, pot.sigma)
    spec = rc.spec(points=16, q_panels=4, p_panels=2, tensor_particles=2)
    for side in ("+", "-"):
        lhs, rhs = observables.adjointness_creation(A0, f, side, spec, 2)
        out.append(record("creation_adjointness", {"side": side}, lhs, rhs, 1e-12))
    return out


def suite_duality(rc: RunConfig, samples: int = 100_000) -> list[dict]:
    pot, cfg = rc.pot, rc.cfg
    st = chain_ensemble(n_max=2, activity=0.5, delta=0.5)
    A0 = observables.bump_observables(2, scalar=0.7, sigma=pot.sigma)
    Z = bbgky.partition_function(st, rc.spec(points=16, q_panels=4, p_panels=2, tensor_particles=2))
    spec = rc.spec(mode="mc", samples=samples)
    out = []
    for t in ((0.5, 1.0) if rc.t is None else (rc.t,)):
        r = observables.duality_check(t, st, A0, spec, pot, cfg, Z)
        out.append(record("duality", {"t": t, "samples": samples, "se_lhs": r.se_lhs, "se_rhs": r.se_rhs,
                                      "se_diff": r.se_diff}, r.lhs, r.rhs, 3 * r.se_diff))
    return out


RUNNERS = {
    "combinatorics": suite_combinatorics,
    "star": suite_star,
    "dynamics": suite_dynamics,
    "hierarchy": suite_hierarchy,
    "bbgky": suite_bbgky,
    "observables": suite_observables,
    "norm-bounds": suite_norm_bounds,
    "duality": suite_duality,
}
