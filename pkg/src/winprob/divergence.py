"""Total variation and Kullback-Leibler divergences between win-probability vectors.

TV is the plain L1 distance ``sum |p - q|`` (range [0, 2], no factor 1/2).
KL uses natural logarithms.
"""

from __future__ import annotations

import numpy as np


def _pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(f"length mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    return p, q


def tv(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.abs(p - q).sum())


def kl(p, q, floor: float | None = None) -> float:
    """KL divergence ``sum p log(p/q)``.

    Returns ``inf`` when some ``p_j > 0`` meets ``q_j = 0``. With ``floor``
    set, entries of ``q`` are clipped from below first (no renormalization).
    """
    return float(kl_rows(p, q, floor))


def tv_rows(p, q) -> np.ndarray:
    """Row-wise TV over the last axis; broadcasts."""
    p, q = _pair(p, q)
    return np.abs(p - q).sum(axis=-1)


def kl_rows(p, q, floor: float | None = None) -> np.ndarray:
    """Row-wise KL over the last axis; broadcasts."""
    p, q = _pair(p, q)
    if floor is not None:
        q = np.maximum(q, floor)
    p, q = np.broadcast_arrays(p, q)
    pos = p > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, p * (np.log(np.where(pos, p, 1.0)) - np.log(q)), 0.0)
    return terms.sum(axis=-1)


def divergence_rows(kind: str, p, q, floor: float | None = None) -> np.ndarray:
    kind = kind.upper()
    if kind == "TV":
        return tv_rows(p, q)
    if kind == "KL":
        return kl_rows(p, q, floor)
    raise ValueError(f"unknown divergence kind {kind!r}")
