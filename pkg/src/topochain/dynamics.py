"""Nearest-neighbour chain dynamics with a hard core.

Particles have unit mass. Neighbours interact through the tail potential
``eps * (R - d)**3 / (R - sigma)**3`` on ``[sigma, R]``; at contact
(``d == sigma``) they exchange momenta elastically.

Trajectories are integrated in batches: ``x`` of shape ``(B, n, 2)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .phase import as_batch, gaps, is_allowed, unbatch

# fourth-order symmetric composition of velocity-Verlet substeps
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
_SCHEMES = {"verlet": (1.0,), "yoshida4": (_W1, _W0, _W1)}


class ForbiddenConfigurationError(ValueError):
    pass


class EventLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    sigma: float = 1.0
    range: float = 1.5
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.range > self.sigma:
            raise ValueError("range must exceed sigma")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    def phi(self, d):
        d = np.asarray(d, dtype=float)
        u = np.clip(self.range - d, 0.0, None) / (self.range - self.sigma)
        return self.epsilon * u ** 3

    def dphi(self, d):
        """Derivative of the tail with respect to the gap."""
        d = np.asarray(d, dtype=float)
        w = self.range - self.sigma
        u = np.clip(self.range - d, 0.0, None) / w
        return -3.0 * self.epsilon * u ** 2 / w

    def d2phi(self, d):
        d = np.asarray(d, dtype=float)
        w = self.range - self.sigma
        u = np.clip(self.range - d, 0.0, None) / w
        return 6.0 * self.epsilon * u / w ** 2

    def pair_coefficient(self, q_a, q_b):
        """``d/dq_a Phi(q_a - q_b)`` for the even extension of the tail."""
        diff = np.asarray(q_a, dtype=float) - np.asarray(q_b, dtype=float)
        return np.sign(diff) * self.dphi(np.abs(diff))


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    event_tol: float = 1e-10
    max_events: int = 10_000
    scheme: str = "yoshida4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.event_tol > 0:
            raise ValueError("event_tol must be positive")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


def forces(q: np.ndarray, pot: PotentialSpec) -> np.ndarray:
    f = np.zeros_like(q)
    if q.shape[-1] < 2 or pot.epsilon == 0:
        return f
    d = pot.dphi(np.diff(q, axis=-1))
    f[..., :-1] += d
    f[..., 1:] -= d
    return f


def _step(q, p, h, pot, weights):
    """One composite step; ``h`` is a scalar or a ``(B, 1)`` array."""
    f = forces(q, pot)
    for w in weights:
        hh = w * h
        p = p + 0.5 * hh * f
        q = q + hh * p
        f = forces(q, pot)
        p = p + 0.5 * hh * f
    return q, p


def _resolve_events(q, p, h, pot, cfg, weights, counts):
    """Advance rows whose step crosses the hard core, handling contacts.

    Contact times are located by bisection on the minimum gap; the pair
    closest at the bracketing end exchanges momenta.
    """
    sigma = pot.sigma
    remaining = np.full(q.shape[0], float(h))
    active = np.ones(q.shape[0], dtype=bool)
    sgn = 1.0 if h > 0 else -1.0
    while active.any():
        idx = np.flatnonzero(active)
        qa, pa, ra = q[idx], p[idx], remaining[idx]
        q1, p1 = _step(qa, pa, ra[:, None], pot, weights)
        hit = np.any(np.diff(q1, axis=1) < sigma, axis=1)
        ok = idx[~hit]
        q[ok], p[ok] = q1[~hit], p1[~hit]
        active[ok] = False
        if not hit.any():
            break
        idx = idx[hit]
        qa, pa, ra = q[idx], p[idx], remaining[idx]
        lo = np.zeros(idx.size)
        hi = np.abs(ra)
        for _ in range(200):
            if np.max(hi - lo) <= cfg.event_tol:
                break
            mid = 0.5 * (lo + hi)
            qm, _ = _step(qa, pa, sgn * mid[:, None], pot, weights)
            inside = np.min(np.diff(qm, axis=1), axis=1) >= sigma
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        qh, _ = _step(qa, pa, sgn * hi[:, None], pot, weights)
        pair = np.argmin(np.diff(qh, axis=1), axis=1)
        qa, pa = _step(qa, pa, sgn * lo[:, None], pot, weights)
        rows = np.arange(idx.size)
        left = pa[rows, pair].copy()
        pa[rows, pair] = pa[rows, pair + 1]
        pa[rows, pair + 1] = left
        q[idx], p[idx] = qa, pa
        remaining[idx] = ra - sgn * lo
        counts[idx] += 1
        if np.any(counts[idx] > cfg.max_events):
            bad = idx[counts[idx] > cfg.max_events][0]
            raise EventLimitError(
                f"event cap {cfg.max_events} exceeded (row {bad}, q={q[bad].tolist()}, p={p[bad].tolist()})")
    return q, p


def flow_batch(q: np.ndarray, p: np.ndarray, t: float, pot: PotentialSpec,
               cfg: IntegratorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Integrate arrays ``q, p`` of shape ``(B, n)`` over time ``t``."""
    q = np.array(q, dtype=float)
    p = np.array(p, dtype=float)
    if t == 0 or q.shape[0] == 0:
        return q, p
    if q.shape[1] == 1:
        return q + p * t, p
    weights = _SCHEMES[cfg.scheme]
    nsteps = max(1, math.ceil(abs(t) / cfg.dt - 1e-9))
    h = t / nsteps
    counts = np.zeros(q.shape[0], dtype=int)
    sigma = pot.sigma
    for _ in range(nsteps):
        q1, p1 = _step(q, p, h, pot, weights)
        hit = np.any(np.diff(q1, axis=1) < sigma, axis=1)
        if hit.any():
            sub = counts[hit]
            qh, ph = _resolve_events(q[hit], p[hit], h, pot, cfg, weights, sub)
            q1[hit], p1[hit] = qh, ph
            counts[hit] = sub
        q, p = q1, p1
    return q, p


def hamiltonian_flow(x, t: float, pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig()):
    """Phase point reached from ``x`` after time ``t`` (``t`` may be negative)."""
    xb, single = as_batch(x)
    if not np.all(is_allowed(xb, pot.sigma, cfg.event_tol)):
        raise ForbiddenConfigurationError("forbidden configuration")
    q, p = flow_batch(xb[..., 0], xb[..., 1], t, pot, cfg)
    out = np.stack([q, p], axis=-1)
    return out[0] if single else out


def apply_group(t: float, f, x, pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig()):
    """``(S*(t) f)(x) = f(X(-t, x))``, zero on forbidden ``x``."""
    xb, single = as_batch(x)
    allowed = is_allowed(xb, pot.sigma)
    vals = np.zeros(xb.shape[0])
    if allowed.any():
        y = hamiltonian_flow(xb[allowed], -t, pot, cfg)
        vals[allowed] = np.asarray(f(y), dtype=float)
    return unbatch(vals, single)


def conserved_quantities(x, pot: PotentialSpec):
    """Return ``(energy, momentum)``."""
    xb, single = as_batch(x)
    q, p = xb[..., 0], xb[..., 1]
    energy = 0.5 * np.sum(p ** 2, axis=-1)
    if q.shape[-1] > 1:
        energy = energy + np.sum(pot.phi(np.diff(q, axis=-1)), axis=-1)
    momentum = np.sum(p, axis=-1)
    if single:
        return float(energy[0]), float(momentum[0])
    return energy, momentum


def gradient(f, xb: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central differences in every coordinate with one Richardson level.

    Returns an array of the shape of ``xb`` holding ``df/dq_i`` and ``df/dp_i``.
    """
    B, n, _ = xb.shape
    offsets = np.array([h, -h, h / 2, -h / 2])
    pts = np.repeat(xb[:, None, None, :, :], 4, axis=2)
    pts = np.repeat(pts, 2 * n, axis=1)  # (B, 2n, 4, n, 2)
    for k in range(2 * n):
        i, c = divmod(k, 2)
        pts[:, k, :, i, c] += offsets
    vals = np.asarray(f(pts.reshape(-1, n, 2)), dtype=float).reshape(B, 2 * n, 4)
    d_h = (vals[..., 0] - vals[..., 1]) / (2 * h)
    d_h2 = (vals[..., 2] - vals[..., 3]) / h
    return ((4 * d_h2 - d_h) / 3).reshape(B, n, 2)


def check_stencil(xb: np.ndarray, pot: PotentialSpec, h: float):
    if xb.shape[1] > 1 and np.any(gaps(xb) <= pot.sigma + 2 * h):
        raise ValueError("stencil crosses forbidden set")


def liouville_from_gradient(xb: np.ndarray, grad: np.ndarray, pot: PotentialSpec) -> np.ndarray:
    """Combine coordinate derivatives into ``L* f``."""
    q, p = xb[..., 0], xb[..., 1]
    out = -np.sum(p * grad[..., 0], axis=-1)
    if xb.shape[1] > 1:
        c = pot.pair_coefficient(q[:, :-1], q[:, 1:])
        out = out + np.sum(c * (grad[:, :-1, 1] - grad[:, 1:, 1]), axis=-1)
    return out


def liouville_apply(f, x, pot: PotentialSpec, h: float = 1e-4):
    """``(L* f)(x)`` by finite differences; the potential factor is analytic."""
    xb, single = as_batch(x)
    check_stencil(xb, pot, h)
    return unbatch(liouville_from_gradient(xb, gradient(f, xb, h), pot), single)


def interaction_apply(f, x, j: int, pot: PotentialSpec, h: float = 1e-4):
    """``L*_int(j, j+1) f`` for the pair at array positions ``j, j+1``."""
    xb, single = as_batch(x)
    check_stencil(xb, pot, h)
    grad = gradient(f, xb, h)
    c = pot.pair_coefficient(xb[:, j, 0], xb[:, j + 1, 0])
    return unbatch(c * (grad[:, j, 1] - grad[:, j + 1, 1]), single)


def simulate(x, t: float, pot: PotentialSpec, cfg: IntegratorConfig = IntegratorConfig(),
             frames: int = 50, labels=None):
    """Trajectory rows ``(t, label, q, p)`` and the relative energy drift per frame."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if labels is None:
        labels = list(range(1, n + 1))
    e0, _ = conserved_quantities(x, pot)
    rows, drift = [], []
    cur = x.copy()
    times = np.linspace(0.0, t, frames + 1)
    for k, tk in enumerate(times):
        if k:
            cur = hamiltonian_flow(cur, tk - times[k - 1], pot, cfg)
        e, _ = conserved_quantities(cur, pot)
        drift.append(abs(e - e0) / max(abs(e0), 1e-300))
        rows.extend((float(tk), int(lab), float(qv), float(pv)) for lab, (qv, pv) in zip(labels, cur))
    return rows, drift


def write_trajectory_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "label", "q", "p"])
        w.writerows(rows)
