"""Named win-probability methods with a uniform ``sample -> MethodResult`` interface."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .baselines import average_rank, borda, good_turing_win_prob, plackett_luce_fit
from .estimators import fit_loo_weights, weighted_estimate
from .minimax import theorem1_weight, theorem3_optimal_weights
from .ranking import EPSILON, BenchmarkSample, compute_rank_counts


@dataclass
class MethodResult:
    """Output of one method on one sample.

    ``win_prob`` is the probability vector used for scoring and top-3 tables;
    ``scores`` holds a method's native scale when it differs (average rank,
    raw Borda points). ``lower_is_better`` flags scores where small wins.
    """

    win_prob: np.ndarray | None
    weights: np.ndarray | None = None
    scores: np.ndarray | None = None
    lower_is_better: bool = False
    extra: dict = field(default_factory=dict)

    def ranking_key(self) -> np.ndarray:
        if self.win_prob is not None:
            return -self.win_prob
        return self.scores if self.lower_is_better else -self.scores


Method = Callable[[BenchmarkSample], MethodResult]


def mle(sample: BenchmarkSample) -> MethodResult:
    return MethodResult(compute_rank_counts(sample, 1).counts[:, 0] / sample.n,
                        weights=np.ones(1))


def uniform(sample: BenchmarkSample) -> MethodResult:
    return MethodResult(np.full(sample.m, 1.0 / sample.m))


def make_loo(K: int = 3, kind: str = "KL", monotone: bool = True, eps: float = EPSILON,
             resolution: int = 100) -> Method:
    def run(sample: BenchmarkSample) -> MethodResult:
        k = min(K, sample.effective_depth)
        fit = fit_loo_weights(sample, k, kind, monotone=monotone, eps=eps,
                              resolution=resolution)
        p = weighted_estimate(compute_rank_counts(sample, k), fit.weights)
        return MethodResult(p, weights=fit.weights,
                            extra={"loo_loss": fit.loo_loss, "iterations": fit.iterations})
    return run


def borda_method(sample: BenchmarkSample) -> MethodResult:
    scores, prob = borda(sample)
    return MethodResult(prob, scores=scores)


def average_rank_method(sample: BenchmarkSample) -> MethodResult:
    return MethodResult(None, scores=average_rank(sample), lower_is_better=True)


def make_pl(pseudocount: float = 0.0) -> Method:
    def run(sample: BenchmarkSample) -> MethodResult:
        fit = plackett_luce_fit(sample, pseudocount=pseudocount)
        return MethodResult(fit.alpha, extra={"iterations": fit.iterations,
                                              "converged": fit.converged,
                                              "log_likelihood": fit.log_likelihood})
    return run


def good_turing_method(sample: BenchmarkSample) -> MethodResult:
    return MethodResult(good_turing_win_prob(sample))


def minimax_t1(sample: BenchmarkSample) -> MethodResult:
    w = theorem1_weight(sample.n)
    weights = np.array([w, 1.0 - w])
    return MethodResult(weighted_estimate(compute_rank_counts(sample, 2), weights), weights)


@lru_cache(maxsize=256)
def _minimax_weights(m: int, n: int, K: int) -> tuple[tuple[float, ...], float]:
    w, bound = theorem3_optimal_weights(m, n, K)
    return tuple(w), bound


def make_minimax_t3(K: int = 3) -> Method:
    def run(sample: BenchmarkSample) -> MethodResult:
        k = min(K, sample.effective_depth)
        w, bound = _minimax_weights(sample.m, sample.n, k)
        w = np.array(w)
        return MethodResult(weighted_estimate(compute_rank_counts(sample, k), w), w,
                            extra={"bound": bound})
    return run


def registry(K: int = 3, pl_pseudocount: float = 0.0, eps: float = EPSILON,
             resolution: int = 100) -> dict[str, Method]:
    """All methods known by name."""
    return {
        "mle": mle,
        "loo-kl": make_loo(K, "KL", eps=eps, resolution=resolution),
        "loo-tv": make_loo(K, "TV", eps=eps, resolution=resolution),
        "borda": borda_method,
        "average-rank": average_rank_method,
        "pl": make_pl(pl_pseudocount),
        "gt": good_turing_method,
        "minimax-t1": minimax_t1,
        "minimax-t3": make_minimax_t3(K),
        "uniform": uniform,
    }


ESTIMATE_DEFAULTS = ("mle", "loo-kl", "loo-tv", "borda", "average-rank", "pl", "gt")
VALIDATE_DEFAULTS = ("mle", "loo-kl", "borda", "pl")


def select(names: Sequence[str], **kwargs) -> dict[str, Method]:
    known = registry(**kwargs)
    unknown = [n for n in names if n not in known]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {sorted(known)}")
    return {n: known[n] for n in names}
