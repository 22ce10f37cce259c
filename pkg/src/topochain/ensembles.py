"""Smooth test sequences vanishing near the hard core.

Every component is a product of Gaussians in ``p`` and ``q`` times a smooth
ramp in each adjacent gap that is 0 for ``gap <= sigma + delta`` and 1 for
``gap >= sigma + 2 delta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .star import DoubleSequence

SQRT2PI = np.sqrt(2 * np.pi)


def smooth_step(u):
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def gap_ramp(gap, sigma: float, delta: float):
    return smooth_step((np.asarray(gap) - sigma - delta) / delta)


@dataclass(frozen=True)
class GaussianChain:
    """``scale * prod N(p_i; p_mean_i, p_width) N(q_i; q_mean_i, q_width) * ramps``.

    With ``ramp_gaps=False`` the component is a plain product; ``q_bounds``
    adds one-sided ramps keeping the first particle right of ``q_bounds[0]``
    and the last particle left of ``q_bounds[1]``.
    """

    scale: float
    q_mean: tuple[float, ...]
    p_mean: tuple[float, ...]
    q_width: float = 1.0
    p_width: float = 1.0
    sigma: float = 1.0
    delta: float = 0.1
    ramp_gaps: bool = True
    q_bounds: tuple[float | None, float | None] = (None, None)

    def __call__(self, xb: np.ndarray) -> np.ndarray:
        q, p = xb[..., 0], xb[..., 1]
        qm = np.asarray(self.q_mean)
        pm = np.asarray(self.p_mean)
        val = np.exp(-0.5 * np.sum(((q - qm) / self.q_width) ** 2 + ((p - pm) / self.p_width) ** 2, axis=-1))
        val = val / (2 * np.pi * self.q_width * self.p_width) ** q.shape[-1]
        if self.ramp_gaps and q.shape[-1] > 1:
            val = val * np.prod(gap_ramp(np.diff(q, axis=-1), self.sigma, self.delta), axis=-1)
        lo, hi = self.q_bounds
        if lo is not None:
            val = val * smooth_step((q[..., 0] - lo) / self.delta - 1.0)
        if hi is not None:
            val = val * smooth_step((hi - q[..., -1]) / self.delta - 1.0)
        return self.scale * val


def chain_component(n: int, scale: float, sigma: float = 1.0, delta: float = 0.1, spacing: float | None = None,
                    q_width: float = 1.0, p_width: float = 1.0, q_shift: float = 0.0, p_mean=None) -> GaussianChain:
    """Component with Gaussian centres ``spacing`` apart, centred at ``q_shift``."""
    spacing = sigma + 3 * delta if spacing is None else spacing
    qm = tuple(q_shift + spacing * (i - (n - 1) / 2) for i in range(n))
    pm = tuple([0.0] * n) if p_mean is None else tuple(p_mean)
    return GaussianChain(scale, qm, pm, q_width, p_width, sigma, delta)


def random_sequence(rng: np.random.Generator, max_particles: int, sigma: float = 1.0, delta: float = 0.1,
                    scale: float = 1.0, masked: bool = True) -> DoubleSequence:
    """Random smooth sequence with arity-dependent parameters up to ``max_particles``."""
    comps = {}
    for n in range(1, max_particles + 1):
        for n1 in range(n + 1):
            spacing = sigma + 2 * delta + rng.uniform(0.2, 0.6)
            comps[(n1, n - n1)] = chain_component(
                n, scale * rng.uniform(0.5, 1.5) * (2 * np.pi) ** n, sigma, delta, spacing,
                q_width=rng.uniform(0.7, 1.2), p_width=rng.uniform(0.7, 1.2),
                q_shift=rng.uniform(-0.3, 0.3), p_mean=rng.uniform(-0.5, 0.5, n))
    return DoubleSequence(comps, 0.0, max_particles, sigma if masked else None)


def random_numeric_sequence(rng: np.random.Generator, max_particles: int) -> DoubleSequence:
    """Random smooth functions without hard-core masking (pure algebra tests)."""
    comps = {}
    for n in range(1, max_particles + 1):
        for n1 in range(n + 1):
            w = rng.normal(size=(n, 2))
            c = rng.normal()
            comps[(n1, n - n1)] = lambda xb, w=w, c=c: c + np.sin(np.sum(w * xb, axis=(-1, -2)))
    return DoubleSequence(comps, 0.0, max_particles)


@dataclass
class GrandState:
    """Initial grand ensemble: scalar ``D_0`` plus components up to ``n_max``."""

    D0: DoubleSequence
    n_max: int
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.D0.support_bound is None or self.D0.support_bound > self.n_max:
            raise ValueError("ensemble support exceeds n_max")


def chain_ensemble(n_max: int = 3, activity: float = 0.5, sigma: float = 1.0, delta: float = 0.3,
                   q_width: float = 1.5, p_width: float = 1.0) -> GrandState:
    """``D_n = activity^n * chain_component(n)`` for every arity, ``D_0 = 1``."""
    comps = {}
    for n in range(1, n_max + 1):
        comp = chain_component(n, activity ** n, sigma, delta, q_width=q_width, p_width=p_width)
        for n1 in range(n + 1):
            comps[(n1, n - n1)] = comp
    return GrandState(DoubleSequence(comps, 1.0, n_max, sigma), n_max, "chain",
                      {"activity": activity, "delta": delta})


def split_ensemble(m_max: int = 1, activity: float = 0.05, sigma: float = 1.0, delta: float = 0.3,
                   q_width: float = 1.0, p_width: float = 1.0, offset: float = 1.5) -> GrandState:
    """Left/right product ensemble ``D_{n1+n2} = A_{n1} B_{n2}``.

    ``A`` lives left of ``-sigma/2`` and ``B`` right of ``+sigma/2`` so the
    product vanishes on forbidden configurations; its partition function
    factorizes into left and right parts.
    """
    half = sigma / 2

    def side(n, left):
        if n == 0:
            return None
        spacing = sigma + 3 * delta
        if left:
            qm = tuple(-offset - spacing * (n - 1 - i) for i in range(n))
            bounds = (None, -half)
        else:
            qm = tuple(offset + spacing * i for i in range(n))
            bounds = (half, None)
        return GaussianChain(activity ** n, qm, tuple([0.0] * n), q_width, p_width, sigma, delta, True, bounds)

    comps = {}
    for n1 in range(m_max + 1):
        for n2 in range(m_max + 1):
            if n1 + n2 == 0:
                continue
            a, b = side(n1, True), side(n2, False)

            def comp(xb, a=a, b=b, n1=n1):
                out = np.ones(xb.shape[0])
                if a is not None:
                    out = out * a(xb[:, :n1])
                if b is not None:
                    out = out * b(xb[:, n1:])
                return out

            comps[(n1, n2)] = comp
    return GrandState(DoubleSequence(comps, 1.0, 2 * m_max, sigma), 2 * m_max, "split",
                      {"activity": activity, "delta": delta})
