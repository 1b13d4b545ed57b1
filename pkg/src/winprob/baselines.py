"""Comparison methods: Borda count, average rank, Plackett-Luce and Good-Turing."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, RankingError
from .ranking import BenchmarkSample


def borda(sample: BenchmarkSample) -> tuple[np.ndarray, np.ndarray]:
    """Borda scores and their normalization to a probability vector.

    Position ``j`` (1-based) earns ``m - j``. In a top-K observation the
    unlisted algorithms share the leftover weights equally, each receiving
    their mean ``sum_{j>K} (m - j) / (m - K)``.
    """
    m = sample.m
    scores = np.zeros(m)
    points = m - np.arange(1, m + 1, dtype=float)
    for row, d in zip(sample.orders, sample.depths):
        listed = row[:d]
        scores[listed] += points[:d]
        if d < m:
            mask = np.ones(m, dtype=bool)
            mask[listed] = False
            scores[mask] += points[d:].mean()
    total = scores.sum()
    if total <= 0:
        raise InfeasibleError("Borda scores sum to zero")
    return scores, scores / total


def average_rank(sample: BenchmarkSample) -> np.ndarray:
    """Mean 1-based rank per algorithm; unlisted ones in a top-K row get ``(K+1+m)/2``."""
    m = sample.m
    total = np.zeros(m)
    for row, d in zip(sample.orders, sample.depths):
        listed = row[:d]
        total[listed] += np.arange(1, d + 1)
        if d < m:
            mask = np.ones(m, dtype=bool)
            mask[listed] = False
            total[mask] += (d + 1 + m) / 2.0
    return total / sample.n


# --------------------------------------------------------------------------
# Plackett-Luce
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlackettLuceFit:
    alpha: np.ndarray
    iterations: int
    converged: bool
    log_likelihood: float
    trace: list[float] = field(default_factory=list, repr=False)


def _stages(sample: BenchmarkSample):
    """Yield (chosen, remaining-mask) for every informative choice stage.

    A full ranking's last position is a forced choice and is skipped.
    """
    m = sample.m
    for row, d in zip(sample.orders, sample.depths):
        remaining = np.ones(m, dtype=bool)
        for s in range(min(d, m - 1)):
            yield int(row[s]), remaining.copy()
            remaining[row[s]] = False


def plackett_luce_loglik(sample: BenchmarkSample, alpha) -> float:
    alpha = np.asarray(alpha, dtype=float)
    ll = 0.0
    for chosen, rem in _stages(sample):
        ll += math.log(alpha[chosen]) - math.log(alpha[rem].sum())
    return ll


def plackett_luce_fit(sample: BenchmarkSample, max_iter: int = 10_000, tol: float = 1e-10,
                      pseudocount: float = 0.0) -> PlackettLuceFit:
    """Maximum-likelihood Plackett-Luce strengths by the MM algorithm.

    Each stage of an observation is a choice of the next-ranked algorithm
    among those not yet placed; top-K observations contribute K stages. The
    update is ``alpha_j <- wins_j / sum_{stages containing j} 1 / sum(alpha_remaining)``,
    renormalized to sum to one.

    Args:
        sample: Benchmark sample (full or top-K).
        max_iter: Iteration cap; hitting it sets ``converged=False``.
        tol: Convergence threshold on ``max |delta alpha|``.
        pseudocount: If positive, adds this many virtual wins per algorithm
            and ``pseudocount * m`` to each denominator (a Gamma prior with
            mode ``1/m``); makes algorithms that never win a stage estimable.

    Raises:
        InfeasibleError: Some algorithm is never chosen at any stage and
            ``pseudocount`` is zero.
    """
    m = sample.m
    stages = list(_stages(sample))
    wins = np.zeros(m)
    masks = np.array([rem for _, rem in stages], dtype=float)
    for chosen, _ in stages:
        wins[chosen] += 1
    if pseudocount <= 0 and np.any(wins == 0):
        missing = [sample.names[i] for i in np.flatnonzero(wins == 0)]
        raise InfeasibleError(f"algorithms never chosen at any stage: {missing}; "
                              "enable a pseudocount to fit them")
    alpha = np.full(m, 1.0 / m)
    stage_ll = lambda a: float(np.log(a[[c for c, _ in stages]]).sum()
                               - np.log(masks @ a).sum())
    trace = [stage_ll(alpha)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        denom = masks.T @ (1.0 / (masks @ alpha))
        new = (wins + pseudocount) / (denom + pseudocount * m)
        new /= new.sum()
        delta = np.abs(new - alpha).max()
        alpha = new
        trace.append(stage_ll(alpha))
        if delta < tol:
            converged = True
            break
    return PlackettLuceFit(alpha, it, converged, trace[-1], trace)


# --------------------------------------------------------------------------
# Good-Turing over the ranking alphabet
# --------------------------------------------------------------------------

MAX_GT_ALGORITHMS = 8


def good_turing_win_prob(sample: BenchmarkSample) -> np.ndarray:
    """Win probabilities from a Good-Turing estimate of the full ranking distribution.

    A ranking seen ``r`` times gets ``(r+1) N_{r+1} / (n N_r)`` (or ``r/n``
    when ``N_{r+1} = 0``). The unseen mass ``N_1/n`` is spread over the
    unseen rankings, so winner class j receives a share proportional to
    ``(m-1)! - (distinct rankings seen with j first)``. The result is
    renormalized.
    """
    m, n = sample.m, sample.n
    if not sample.is_full:
        raise RankingError("Good-Turing needs full rankings")
    if m > MAX_GT_ALGORITHMS:
        raise InfeasibleError(f"Good-Turing is limited to m <= {MAX_GT_ALGORITHMS}")
    seen = Counter(tuple(row[:m]) for row in sample.orders)
    freq_of_freq = Counter(seen.values())
    p = np.zeros(m)
    distinct = np.zeros(m)
    for ranking, r in seen.items():
        nxt = freq_of_freq.get(r + 1, 0)
        p[ranking[0]] += (r + 1) * nxt / (n * freq_of_freq[r]) if nxt else r / n
        distinct[ranking[0]] += 1
    unseen = math.factorial(m - 1) - distinct
    if unseen.sum() > 0:
        p += freq_of_freq.get(1, 0) / n * unseen / unseen.sum()
    return p / p.sum()
