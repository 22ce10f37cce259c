"""Phase-space quadrature, weighted sequence norms and time derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

MAX_DIMENSION = 12


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings for particle phase variables.

    ``q_box``/``p_box`` bound every particle's position/momentum.  Tensor
    rules use ``points`` Gauss-Legendre nodes per panel and ``q_panels`` /
    ``p_panels`` equal panels per axis.  In ``auto`` mode integrals over at
    most ``tensor_particles`` particles use the tensor rule, larger ones Monte
    Carlo.
    """

    mode: str = "auto"
    points: int = 16
    q_panels: int = 1
    p_panels: int = 1
    samples: int = 200_000
    q_box: tuple[float, float] = (-8.0, 8.0)
    p_box: tuple[float, float] = (-6.0, 6.0)
    seed: int = 42
    chunk: int = 400_000
    tensor_particles: int = 2

    def __post_init__(self):
        if self.mode not in ("auto", "tensor", "mc"):
            raise ValueError(f"unknown quadrature mode {self.mode!r}")
        for lo, hi in (self.q_box, self.p_box):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError("quadrature boxes must be finite and non-empty")

    def refined(self, **kw) -> "QuadratureSpec":
        return replace(self, **kw)

    def use_tensor(self, n_particles: int) -> bool:
        if self.mode == "tensor":
            return True
        if self.mode == "mc":
            return False
        return n_particles <= self.tensor_particles


@dataclass(frozen=True)
class NormWeight:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")


@lru_cache(maxsize=None)
def _composite_gauss(lo: float, hi: float, points: int, panels: int):
    x, w = leggauss(points)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def particle_rule(spec: QuadratureSpec):
    """Tensor nodes ``(M, 2)`` and weights for one particle."""
    qn, qw = _composite_gauss(*spec.q_box, spec.points, spec.q_panels)
    pn, pw = _composite_gauss(*spec.p_box, spec.points, spec.p_panels)
    Q, P = np.meshgrid(qn, pn, indexing="ij")
    W = np.outer(qw, pw)
    return np.stack([Q.ravel(), P.ravel()], axis=-1), W.ravel()


def tensor_rule(n_particles: int, spec: QuadratureSpec):
    """Nodes ``(N, n, 2)`` and weights ``(N,)`` of the product rule."""
    if n_particles == 0:
        return np.zeros((1, 0, 2)), np.ones(1)
    return next(tensor_chunks(n_particles, spec, None))


def tensor_chunks(n_particles: int, spec: QuadratureSpec, chunk: int | None = None):
    """The product rule in consecutive pieces of at most ``chunk`` nodes."""
    nodes1, w1 = particle_rule(spec)
    M = len(w1)
    total = M ** n_particles
    chunk = total if chunk is None else chunk
    for a in range(0, total, chunk):
        idx = np.stack(np.unravel_index(np.arange(a, min(a + chunk, total)), (M,) * n_particles), axis=-1)
        yield nodes1[idx], np.prod(w1[idx], axis=-1)


def mc_rule(n_particles: int, spec: QuadratureSpec, rng: np.random.Generator | None = None,
            samples: int | None = None):
    """Uniform samples in the box with equal weights ``volume / N``."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    n = spec.samples if samples is None else samples
    lo = np.array([spec.q_box[0], spec.p_box[0]])
    hi = np.array([spec.q_box[1], spec.p_box[1]])
    u = rng.random((n, n_particles, 2))
    vol = float(np.prod(hi - lo)) ** n_particles
    return lo + u * (hi - lo), np.full(n, vol / n)


def _check_dimension(n_particles: int):
    if 2 * n_particles > MAX_DIMENSION:
        raise ValueError("dimension cap")


def _tensor_sum(f, n_particles, spec):
    return sum(float(np.dot(w, np.asarray(f(nodes), dtype=float)))
               for nodes, w in tensor_chunks(n_particles, spec, spec.chunk))


def integrate_component(f: Callable, n_particles: int, spec: QuadratureSpec = QuadratureSpec(),
                        estimate_error: bool = True):
    """Integrate ``f`` over ``n_particles`` phase points; returns ``(value, error)``.

    Tensor mode reports the change against a rule with 3/4 of the points
    (0 when ``estimate_error`` is off); Monte Carlo reports the standard error.
    """
    _check_dimension(n_particles)
    if n_particles == 0:
        return float(np.asarray(f(np.zeros((1, 0, 2))))[0]), 0.0
    if spec.use_tensor(n_particles):
        val = _tensor_sum(f, n_particles, spec)
        if not estimate_error:
            return val, 0.0
        coarse = spec.refined(points=max(2, (3 * spec.points) // 4))
        return val, abs(val - _tensor_sum(f, n_particles, coarse))
    nodes, w = mc_rule(n_particles, spec)
    vals = np.concatenate([np.asarray(f(nodes[a:a + spec.chunk]), dtype=float)
                           for a in range(0, len(w), spec.chunk)])
    vol = w[0] * len(w)
    return float(vol * vals.mean()), float(vol * vals.std(ddof=1) / math.sqrt(len(w)))


def outer_rule(n_outer: int, spec: QuadratureSpec):
    """Rule for integrating ``n_outer`` extra particles (tensor or seeded MC)."""
    _check_dimension(n_outer)
    if n_outer == 0:
        return np.zeros((1, 0, 2)), np.ones(1)
    if spec.use_tensor(n_outer):
        return tensor_rule(n_outer, spec)
    return mc_rule(n_outer, spec)


def integrate_outer(fn: Callable, xb: np.ndarray, n_left: int, n_right: int,
                    spec: QuadratureSpec, rule=None) -> np.ndarray:
    """For each inner configuration in ``xb`` integrate ``fn`` over ``n_left``
    particles prepended and ``n_right`` appended.

    ``fn`` receives full configurations ``(N, n_left + k + n_right, 2)``.
    """
    B, k, _ = xb.shape
    nodes, w = outer_rule(n_left + n_right, spec) if rule is None else rule
    M = len(w)
    out = np.zeros(B)
    per = max(1, spec.chunk // max(M, 1))
    for a in range(0, B, per):
        xs = xb[a:a + per]
        b = xs.shape[0]
        full = np.empty((b, M, n_left + k + n_right, 2))
        full[:, :, :n_left] = nodes[None, :, :n_left]
        full[:, :, n_left:n_left + k] = xs[:, None]
        full[:, :, n_left + k:] = nodes[None, :, n_left:]
        vals = np.asarray(fn(full.reshape(b * M, -1, 2)), dtype=float).reshape(b, M)
        out[a:a + b] = vals @ w
    return out


def l1alpha_norm(f, w: NormWeight, spec: QuadratureSpec = QuadratureSpec(),
                 max_particles: int | None = None) -> float:
    """``sum_n alpha^n * integral |f_n|`` over all arities plus ``|f_0|``."""
    total = abs(f.scalar0)
    for n1, n2 in f.arities(max_particles):
        if f.component(n1, n2) is None:
            continue
        val, _ = integrate_component(lambda x, a=(n1, n2): np.abs(f.evaluate(*a, x)), n1 + n2, spec, estimate_error=False)
        total += w.alpha ** (n1 + n2) * val
    return total


def time_derivative(fn: Callable[[float], float], t: float, h: float = 1e-3) -> float:
    """Central difference with one Richardson level (fourth order)."""
    vals = [fn(t + h), fn(t - h), fn(t + h / 2), fn(t - h / 2)]
    if not all(math.isfinite(v) for v in np.ravel(vals)):
        raise ValueError("non-finite evaluation")
    d1 = (vals[0] - vals[1]) / (2 * h)
    d2 = (vals[2] - vals[3]) / h
    return (4 * d2 - d1) / 3


def central_difference(fn: Callable[[float], float], t: float, h: float) -> float:
    a, b = fn(t + h), fn(t - h)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite evaluation")
    return (a - b) / (2 * h)


@dataclass
class ConvergenceStudy:
    steps: list[float]
    errors: list[float]
    orders: list[float] = field(default_factory=list)

    @property
    def finest_error(self) -> float:
        return self.errors[-1]

    @property
    def min_order(self) -> float:
        return min(self.orders) if self.orders else float("nan")


def convergence_study(approx: Callable[[float], float], target: float, steps) -> ConvergenceStudy:
    """Errors of ``approx(h)`` against ``target`` and observed orders between
    consecutive step sizes."""
    steps = list(steps)
    errors = [abs(approx(h) - target) for h in steps]
    orders = [math.log(e0 / e1) / math.log(h0 / h1) if e1 > 0 and e0 > 0 else float("inf")
              for (h0, e0), (h1, e1) in zip(zip(steps, errors), zip(steps[1:], errors[1:]))]
    return ConvergenceStudy(steps, errors, orders)
