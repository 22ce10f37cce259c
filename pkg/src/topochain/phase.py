"""Configuration arrays.

A configuration of ``n`` particles is an array of shape ``(n, 2)`` holding
``(q, p)`` rows in ascending label order.  Batches have shape ``(B, n, 2)``.
"""
from __future__ import annotations

import numpy as np


def as_batch(x) -> tuple[np.ndarray, bool]:
    """Return ``(batch, was_single)`` with batch of shape ``(B, n, 2)``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2:
        return arr[None], True
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"expected shape (n, 2) or (B, n, 2), got {arr.shape}")
    return arr, False


def unbatch(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def gaps(x: np.ndarray) -> np.ndarray:
    return np.diff(x[..., 0], axis=-1)


def is_allowed(x: np.ndarray, sigma: float, tol: float = 0.0) -> np.ndarray:
    """True where every adjacent gap is at least ``sigma - tol``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-2] < 2:
        return np.ones(x.shape[:-2], dtype=bool)
    return np.all(gaps(x) >= sigma - tol, axis=-1)


def make_configuration(q, p) -> np.ndarray:
    return np.stack([np.asarray(q, dtype=float), np.asarray(p, dtype=float)], axis=-1)
