"""Weighted rank-count estimators of win probabilities.

The estimate for algorithm ``i`` is ``sum_j w_j * counts[i, j] / n``: a convex
combination of how often ``i`` finished first, second, ... With ``w = (1,)``
it reduces to the plain win fraction (the MLE). Weights are chosen by
minimizing a leave-one-out loss over the (optionally monotone) simplex.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InfeasibleError
from .ranking import EPSILON, BenchmarkSample, RankCountMatrix, compute_rank_counts

log = logging.getLogger(__name__)

DIVERGENCES = ("KL", "TV")

# Largest number of grid points scanned in the first search stage; coarser
# resolutions are used beyond it.
MAX_GRID_POINTS = 200_000
_FALLBACK_RESOLUTIONS = (100, 50, 25, 20, 10, 5, 4, 2, 1)


def validate_weights(w, monotone: bool = False, atol: float = 1e-9) -> np.ndarray:
    """Return ``w`` as a float array after checking it lies on the simplex."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a non-empty 1-D vector")
    if np.any(w < -atol):
        raise ValueError(f"weights must be non-negative, got {w}")
    if abs(w.sum() - 1.0) > atol:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    if monotone and np.any(np.diff(w) > atol):
        raise ValueError(f"weights must be non-increasing, got {w}")
    return w


def mle_win_prob(counts: RankCountMatrix) -> np.ndarray:
    """Fraction of datasets won by each algorithm."""
    return counts.counts[:, 0] / counts.n


def weighted_estimate(counts: RankCountMatrix, w) -> np.ndarray:
    """Win probabilities ``sum_j w_j r^(j) / n`` from the first ``len(w)`` rank columns."""
    w = validate_weights(w)
    if w.size > counts.depth:
        raise InfeasibleError(f"{w.size} weights but only {counts.depth} rank positions observed")
    return counts.counts[:, : w.size] @ w / counts.n


# --------------------------------------------------------------------------
# leave-one-out losses
# --------------------------------------------------------------------------


def _check_kind(kind: str) -> str:
    kind = kind.upper()
    if kind not in DIVERGENCES:
        raise ValueError(f"unknown divergence kind {kind!r}")
    return kind


def loo_loss_batch(sample: BenchmarkSample, W, kind: str = "KL",
                   eps: float = EPSILON) -> np.ndarray:
    """Leave-one-out loss for each row of a ``(G, K)`` weight matrix.

    Each held-out estimate is normalized by ``n - 1`` so it is a distribution.
    For KL the estimate of the held-out winner is floored at ``eps`` before
    the logarithm.
    """
    kind = _check_kind(kind)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    n, K = sample.n, W.shape[1]
    if n < 2:
        raise InfeasibleError("leave-one-out needs at least two observations")
    if K > sample.effective_depth:
        raise InfeasibleError(f"{K} weights exceed the effective rank depth "
                              f"{sample.effective_depth}")
    C = compute_rank_counts(sample, K).counts.astype(float)
    y = sample.winners
    if kind == "KL":
        # the held-out dataset only ever removes its own winner's first place
        A = C[y].copy()
        A[:, 0] -= 1.0
        phat = (A @ W.T) / (n - 1)
        return -np.log(np.maximum(phat, eps)).mean(axis=0)

    m = sample.m
    D = np.broadcast_to(C, (n, m, K)).copy()
    rows = np.repeat(np.arange(n), K)
    D[rows, sample.orders[:, :K].ravel(), np.tile(np.arange(K), n)] -= 1.0
    target = np.zeros((n, m))
    target[np.arange(n), y] = 1.0
    out = np.empty(W.shape[0])
    block = max(1, 2_000_000 // (n * m))
    for s in range(0, W.shape[0], block):
        Wb = W[s:s + block]
        phat = np.einsum("imk,gk->gim", D, Wb) / (n - 1)
        out[s:s + block] = np.abs(target[None] - phat).sum(axis=2).mean(axis=1)
    return out


def loo_loss(sample: BenchmarkSample, w, kind: str = "KL", eps: float = EPSILON) -> float:
    """Average held-out loss of the weighted estimator with weights ``w``.

    KL: ``-(1/n) sum_i log phat[-i][y_i]``; TV: ``(1/n) sum_i sum_a
    |1{y_i = a} - phat[-i][a]|``, where ``phat[-i]`` is built from all
    datasets except the i-th.
    """
    w = validate_weights(w)
    return float(loo_loss_batch(sample, w[None, :], kind, eps)[0])


# --------------------------------------------------------------------------
# simplex search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchResult:
    weights: np.ndarray
    value: float
    iterations: int
    grid_resolution: int
    final_step: float


def _count_grid(K: int, R: int, monotone: bool) -> int:
    if not monotone:
        from math import comb
        return comb(R + K - 1, K - 1)
    # partitions of R into at most K parts
    table = np.zeros(R + 1, dtype=object)
    table[0] = 1
    for part in range(1, K + 1):
        for total in range(part, R + 1):
            table[total] += table[total - part]
    return int(table[R])


@lru_cache(maxsize=32)
def _grid(K: int, R: int, monotone: bool) -> np.ndarray:
    """Integer points summing to R, lexicographically descending."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], left: int, cap: int, slots: int):
        if slots == 1:
            if left <= cap:
                out.append(prefix + (left,))
            return
        lo = -(-left // slots) if monotone else 0
        for a in range(min(cap, left), lo - 1, -1):
            rec(prefix + (a,), left - a, a if monotone else R, slots - 1)

    rec((), R, R, K)
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def simplex_grid(K: int, resolution: int, monotone: bool = True) -> np.ndarray:
    """All weight vectors on the simplex with entries in multiples of 1/resolution.

    Rows are in lexicographically descending order (largest ``w_1`` first).
    """
    return _grid(K, resolution, monotone) / resolution


def _basis(K: int, monotone: bool) -> np.ndarray:
    # monotone weights are exactly the convex combinations of (1/k)(1,..,1,0,..,0)
    if not monotone:
        return np.eye(K)
    j, k = np.indices((K, K))
    return np.where(j <= k, 1.0 / (k + 1), 0.0)


def _to_barycentric(w: np.ndarray, monotone: bool) -> np.ndarray:
    if not monotone:
        return w.copy()
    nxt = np.append(w[1:], 0.0)
    return np.maximum((np.arange(1, w.size + 1)) * (w - nxt), 0.0)


def _first_min(values: np.ndarray) -> int:
    best = values.min()
    tol = 1e-12 * max(1.0, abs(best))
    return int(np.flatnonzero(values <= best + tol)[0])


def simplex_minimize(objective: Callable, K: int, monotone: bool = True, *,
                     batched: bool = False, resolution: int = 100,
                     min_step: float = 1e-6, max_iter: int = 20_000) -> SearchResult:
    """Minimize ``objective`` over weight vectors on the K-simplex.

    Stage one scans every grid point with entries in multiples of
    ``1/resolution`` (monotone non-increasing ones only when ``monotone``).
    Stage two refines the best point by pairwise mass transfers and moves
    toward vertices, halving the step from ``1/resolution`` down to
    ``min_step``. Monotone refinement works in barycentric coordinates over
    the vertices ``(1/k)(1,...,1,0,...,0)`` so every move stays feasible.

    Ties are broken toward lexicographically larger weights (larger ``w_1``
    first), which the grid order makes equivalent to "first minimum".

    Args:
        objective: Maps a weight vector to a real; with ``batched`` it maps a
            ``(G, K)`` array to ``G`` values.
        K: Number of weights.
        monotone: Restrict to ``w_1 >= w_2 >= ... >= w_K``.
        batched: Whether ``objective`` accepts a matrix of candidates.
        resolution: Grid denominator for the first stage.
        min_step: Smallest refinement step.
        max_iter: Cap on accepted refinement moves.
    """
    if K < 1:
        raise ValueError("K must be at least 1")

    def evaluate(W: np.ndarray) -> np.ndarray:
        if batched:
            return np.asarray(objective(W), dtype=float)
        return np.array([objective(row) for row in W], dtype=float)

    if K == 1:
        w = np.ones(1)
        return SearchResult(w, float(evaluate(w[None])[0]), 0, 1, 0.0)

    res = resolution
    if _count_grid(K, res, monotone) > MAX_GRID_POINTS:
        for res in _FALLBACK_RESOLUTIONS:
            if res < resolution and _count_grid(K, res, monotone) <= MAX_GRID_POINTS:
                break
        log.info("grid for K=%d coarsened to 1/%d", K, res)

    grid = simplex_grid(K, res, monotone)
    values = evaluate(grid)
    i = _first_min(values)
    B = _basis(K, monotone)
    lam = _to_barycentric(grid[i], monotone)
    lam /= lam.sum()
    best = float(values[i])

    pairs = [(a, b) for a in range(K) for b in range(K) if a != b]
    step = 1.0 / res
    iterations = 0
    last_step = step
    while step >= min_step and iterations < max_iter:
        last_step = step
        while iterations < max_iter:
            cands = []
            for a, b in pairs:
                move = min(step, lam[a])
                if move <= 0:
                    continue
                c = lam.copy()
                c[a] -= move
                c[b] += move
                cands.append(c)
            for b in range(K):
                c = (1.0 - step) * lam
                c[b] += step
                cands.append(c)
            L = np.array(cands)
            vals = evaluate(L @ B.T)
            j = _first_min(vals)
            if not vals[j] < best - 1e-15 * max(1.0, abs(best)):
                break
            lam, best = L[j], float(vals[j])
            iterations += 1
        step /= 2.0

    w = B @ lam
    w = np.maximum(w, 0.0)
    w /= w.sum()
    return SearchResult(w, float(evaluate(w[None])[0]), iterations, res, last_step)


# --------------------------------------------------------------------------
# leave-one-out weight fitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LooFitResult:
    """Weights minimizing the leave-one-out loss, plus solver bookkeeping."""

    weights: np.ndarray
    loo_loss: float
    kind: str
    monotone: bool
    iterations: int
    grid_resolution: int
    final_step: float


def fit_loo_weights(sample: BenchmarkSample, K: int = 3, kind: str = "KL", *,
                    monotone: bool = True, eps: float = EPSILON,
                    resolution: int = 100) -> LooFitResult:
    """Choose estimator weights by leave-one-out loss minimization.

    Args:
        sample: Benchmark sample with ``n >= 2``.
        K: Number of rank positions used; at most the sample's effective
            depth. ``K = 1`` returns the MLE weights.
        kind: ``"KL"`` (held-out cross-entropy) or ``"TV"``.
        monotone: Require non-increasing weights.
        eps: Probability floor inside the KL logarithm.
        resolution: First-stage grid denominator.

    Raises:
        InfeasibleError: ``K`` outside ``[1, effective depth]`` or ``n < 2``.
    """
    kind = _check_kind(kind)
    if sample.n < 2:
        raise InfeasibleError("leave-one-out needs at least two observations")
    if not 1 <= K <= min(sample.effective_depth, sample.m):
        raise InfeasibleError(f"K={K} must lie in [1, {min(sample.effective_depth, sample.m)}]")
    search = simplex_minimize(lambda W: loo_loss_batch(sample, W, kind, eps), K,
                              monotone, batched=True, resolution=resolution)
    loss = loo_loss(sample, search.weights, kind, eps)
    return LooFitResult(search.weights, loss, kind, monotone, search.iterations,
                        search.grid_resolution, search.final_step)


def loo_estimate(sample: BenchmarkSample, K: int = 3, kind: str = "KL",
                 **kwargs) -> tuple[np.ndarray, LooFitResult]:
    """Fit leave-one-out weights and apply them to the full sample."""
    fit = fit_loo_weights(sample, K, kind, **kwargs)
    counts = compute_rank_counts(sample, K)
    return weighted_estimate(counts, fit.weights), fit
