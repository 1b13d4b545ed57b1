"""Synthetic ranking distributions and Monte Carlo risk experiments.

A distribution over the ``M = m!`` rankings is built from a one-dimensional
pmf over ``u = 1..M`` (Zipf, geometric, ...) and a seeded random bijection
between ``u`` and permutations. Permutations are indexed lexicographically
through their Lehmer code.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .divergence import divergence_rows
from .errors import InfeasibleError
from .estimators import (
    fit_loo_weights,
    simplex_minimize,
    weighted_estimate,
)
from .minimax import theorem1_weight, theorem3_optimal_weights
from .ranking import EPSILON, BenchmarkSample, RankingObservation, compute_rank_counts

MAX_M = 8
FAMILIES = ("zipf", "geometric", "negative_binomial", "beta_binomial", "uniform", "step")

DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "zipf": {"s": 1.01},
    "geometric": {"alpha": 0.4},
    "negative_binomial": {"l": 1, "r": 0.003},
    "beta_binomial": {"alpha": 2.0, "beta": 2.0},
    "uniform": {},
    "step": {},
}


def family_pmf(family: str, params: Mapping[str, float] | None, M: int) -> np.ndarray:
    """Probability mass over outcomes ``u = 1..M``.

    Geometric and negative binomial are truncated to ``M`` outcomes and
    renormalized. Beta-binomial lives on ``u - 1 in {0..M-1}`` with ``M - 1``
    trials. Step gives the first ``M // 2`` outcomes twice the mass of the rest.
    """
    if M < 2:
        raise ValueError("alphabet needs at least two outcomes")
    p = dict(DEFAULT_PARAMS.get(family, {}))
    p.update(params or {})
    u = np.arange(1, M + 1, dtype=float)
    if family == "zipf":
        s = p["s"]
        if s <= 0:
            raise ValueError("zipf needs s > 0")
        logw = -s * np.log(u)
    elif family == "geometric":
        a = p["alpha"]
        if not 0 < a < 1:
            raise ValueError("geometric needs 0 < alpha < 1")
        logw = (u - 1) * math.log1p(-a) + math.log(a)
    elif family == "negative_binomial":
        l, r = p["l"], p["r"]
        if l < 1 or not 0 < r < 1:
            raise ValueError("negative binomial needs l >= 1 and 0 < r < 1")
        logw = (special.gammaln(u + l) - special.gammaln(u + 1) - special.gammaln(l)
                + u * math.log(r) + l * math.log1p(-r))
    elif family == "beta_binomial":
        a, b = p["alpha"], p["beta"]
        if a <= 0 or b <= 0:
            raise ValueError("beta-binomial needs alpha, beta > 0")
        logw = stats.betabinom(M - 1, a, b).logpmf(u - 1)
    elif family == "uniform":
        logw = np.zeros(M)
    elif family == "step":
        logw = np.where(u <= M // 2, math.log(2.0), 0.0)
    else:
        raise ValueError(f"unknown family {family!r}")
    w = np.exp(logw - logw.max())
    return w / w.sum()


# --------------------------------------------------------------------------
# permutations <-> indices
# --------------------------------------------------------------------------


def permutation_by_index(idx: int, m: int) -> RankingObservation:
    """Permutation with lexicographic rank ``idx`` (factorial number system)."""
    total = math.factorial(m)
    if not 0 <= idx < total:
        raise IndexError(f"index {idx} outside [0, {total})")
    pool = list(range(m))
    order = []
    for k in range(m - 1, -1, -1):
        digit, idx = divmod(idx, math.factorial(k))
        order.append(pool.pop(digit))
    return RankingObservation(tuple(order), m)


def index_of_permutation(obs: RankingObservation | Sequence[int]) -> int:
    """Inverse of :func:`permutation_by_index`."""
    order = list(obs.order if isinstance(obs, RankingObservation) else obs)
    m = len(order)
    if sorted(order) != list(range(m)):
        raise ValueError(f"{order} is not a permutation of 0..{m - 1}")
    idx = 0
    for i, a in enumerate(order):
        smaller_after = sum(1 for b in order[i + 1:] if b < a)
        idx += smaller_after * math.factorial(m - 1 - i)
    return idx


@lru_cache(maxsize=MAX_M + 1)
def permutation_table(m: int) -> np.ndarray:
    """All ``m!`` permutations as rows, row ``i`` = :func:`permutation_by_index` (i)."""
    if m > MAX_M:
        raise InfeasibleError(f"m={m} exceeds the enumerable limit {MAX_M}")
    table = np.zeros((1, 0), dtype=np.int64)
    # build lexicographic order by prepending each possible leading element
    for size in range(1, m + 1):
        rows = []
        for lead in range(size):
            rest = table + (table >= lead)
            rows.append(np.hstack([np.full((rest.shape[0], 1), lead), rest]))
        table = np.vstack(rows)
    table.setflags(write=False)
    return table


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RankingDistribution:
    """Distribution over the m! rankings of m algorithms.

    ``assignment[u]`` is the permutation index carrying the pmf mass of
    outcome ``u + 1``; it is a uniformly random permutation of ``0..M-1``
    drawn from ``assignment_seed``.
    """

    m: int
    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    assignment_seed: int = 0

    def __post_init__(self):
        if not 2 <= self.m <= MAX_M:
            raise InfeasibleError(f"m must lie in [2, {MAX_M}]")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        merged = dict(DEFAULT_PARAMS[self.family])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)

    @property
    def M(self) -> int:
        return math.factorial(self.m)

    def pmf(self) -> np.ndarray:
        return _pmf_cached(self.family, tuple(sorted(self.params.items())), self.M)

    def assignment(self) -> np.ndarray:
        return _assignment_cached(self.assignment_seed, self.M)

    def ranking_probs(self) -> np.ndarray:
        """Probability of each permutation, indexed by Lehmer index."""
        probs = np.empty(self.M)
        probs[self.assignment()] = self.pmf()
        return probs

    def names(self) -> tuple[str, ...]:
        from .ranking import default_names
        return default_names(self.m)


@lru_cache(maxsize=64)
def _pmf_cached(family, params, M):
    pmf = family_pmf(family, dict(params), M)
    pmf.setflags(write=False)
    return pmf


@lru_cache(maxsize=64)
def _assignment_cached(seed, M):
    perm = np.random.default_rng(seed).permutation(M)
    perm.setflags(write=False)
    return perm


@dataclass(frozen=True, eq=False)
class ExplicitDistribution:
    """Distribution given directly by per-permutation probabilities (Lehmer order)."""

    m: int
    probs: np.ndarray
    family: str = "explicit"

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (math.factorial(self.m),) or np.any(probs < 0):
            raise ValueError("need m! non-negative probabilities")
        object.__setattr__(self, "probs", probs / probs.sum())

    @property
    def M(self) -> int:
        return math.factorial(self.m)

    def ranking_probs(self) -> np.ndarray:
        return self.probs

    def names(self) -> tuple[str, ...]:
        from .ranking import default_names
        return default_names(self.m)


def point_mass(m: int, index: int = 0) -> ExplicitDistribution:
    """All mass on the permutation with Lehmer index ``index``."""
    probs = np.zeros(math.factorial(m))
    probs[index] = 1.0
    return ExplicitDistribution(m, probs)


def true_win_prob(dist: RankingDistribution) -> np.ndarray:
    """Mass of each winner class: ``p_j = sum of P(ranking)`` over rankings led by j."""
    table = permutation_table(dist.m)
    return np.bincount(table[:, 0], weights=dist.ranking_probs(), minlength=dist.m)


def true_rank_marginals(dist: RankingDistribution) -> np.ndarray:
    """``(m, m)`` matrix: probability algorithm i finishes in position j+1."""
    table = permutation_table(dist.m)
    probs = dist.ranking_probs()
    out = np.zeros((dist.m, dist.m))
    for j in range(dist.m):
        out[:, j] = np.bincount(table[:, j], weights=probs, minlength=dist.m)
    return out


def _draw_orders(dist: RankingDistribution, n: int, rng: np.random.Generator,
                 size: tuple[int, ...] = ()) -> np.ndarray:
    cdf = np.cumsum(dist.ranking_probs())
    u = rng.random(size + (n,))
    idx = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), dist.M - 1)
    return permutation_table(dist.m)[idx]


def sample_rankings(dist: RankingDistribution, n: int, sample_seed: int) -> BenchmarkSample:
    """n i.i.d. rankings by inverse-CDF sampling; reproducible from both seeds."""
    rng = np.random.default_rng(sample_seed)
    return BenchmarkSample.from_orders(_draw_orders(dist, n, rng), dist.names())


def _counts_batch(orders: np.ndarray, m: int, K: int) -> np.ndarray:
    """``(R, m, K)`` rank counts for a batch of ``(R, n, m)`` orders."""
    R = orders.shape[0]
    out = np.zeros((R, m, K))
    offset = (np.arange(R) * m)[:, None]
    for j in range(K):
        out[:, :, j] = np.bincount((orders[:, :, j] + offset).ravel(),
                                   minlength=R * m).reshape(R, m)
    return out


def oracle_weights(dist: RankingDistribution, n: int, K: int = 3, kind: str = "KL",
                   R: int = 1000, seed: int = 0, *, monotone: bool = True,
                   eps: float = EPSILON) -> np.ndarray:
    """Weights minimizing a Monte Carlo estimate of the true expected divergence.

    The same ``R`` samples of size ``n`` are reused for every candidate
    weight vector, and the search runs over the same feasible set as
    :func:`~winprob.estimators.fit_loo_weights`.
    """
    if R < 1:
        raise ValueError("R must be positive")
    rng = np.random.default_rng(seed)
    orders = _draw_orders(dist, n, rng, size=(R,))
    counts = _counts_batch(orders, dist.m, K) / n
    p = true_win_prob(dist)
    floor = eps if kind.upper() == "KL" else None

    def objective(W):
        out = np.empty(W.shape[0])
        block = max(1, 4_000_000 // (R * dist.m))
        for s in range(0, W.shape[0], block):
            phat = np.einsum("rmk,gk->grm", counts, W[s:s + block])
            out[s:s + block] = divergence_rows(kind, p, phat, floor).mean(axis=1)
        return out

    return simplex_minimize(objective, K, monotone, batched=True).weights


# --------------------------------------------------------------------------
# risk experiments
# --------------------------------------------------------------------------

Estimator = Callable[[BenchmarkSample], "np.ndarray | tuple[np.ndarray, np.ndarray]"]


def mle_estimator() -> Estimator:
    return lambda s: compute_rank_counts(s, 1).counts[:, 0] / s.n


def loo_estimator(K: int = 3, kind: str = "KL", **kwargs) -> Estimator:
    def run(s):
        fit = fit_loo_weights(s, K, kind, **kwargs)
        return weighted_estimate(compute_rank_counts(s, K), fit.weights), fit.weights
    return run


def minimax_t1_estimator() -> Estimator:
    def run(s):
        w = theorem1_weight(s.n)
        weights = np.array([w, 1.0 - w])
        return weighted_estimate(compute_rank_counts(s, 2), weights), weights
    return run


def minimax_t3_estimator(K: int = 3) -> Estimator:
    cache: dict[tuple[int, int], np.ndarray] = {}

    def run(s):
        key = (s.m, s.n)
        if key not in cache:
            cache[key] = theorem3_optimal_weights(s.m, s.n, K)[0]
        w = cache[key]
        return weighted_estimate(compute_rank_counts(s, K), w), w
    return run


def oracle_estimator(dist: RankingDistribution, K: int = 3, kind: str = "KL",
                     R: int = 1000, seed: int = 0) -> Estimator:
    cache: dict[int, np.ndarray] = {}

    def run(s):
        if s.n not in cache:
            cache[s.n] = oracle_weights(dist, s.n, K, kind, R, seed)
        w = cache[s.n]
        return weighted_estimate(compute_rank_counts(s, K), w), w
    return run


def good_turing_estimator() -> Estimator:
    from .baselines import good_turing_win_prob
    return good_turing_win_prob


def truth_estimator(dist: RankingDistribution) -> Estimator:
    p = true_win_prob(dist)
    return lambda s: p.copy()


@dataclass(frozen=True)
class RiskRow:
    estimator: str
    n: int
    kind: str
    mean_risk: float
    stderr: float
    replicas: int


@dataclass
class RiskTable:
    """Mean divergence per (estimator, n, kind) with per-replica detail kept."""

    family: str
    rows: list[RiskRow]
    losses: dict[tuple[str, int, str], np.ndarray]
    weights: dict[tuple[str, int], np.ndarray]

    def row(self, estimator: str, n: int, kind: str = "KL") -> RiskRow:
        for r in self.rows:
            if (r.estimator, r.n, r.kind) == (estimator, n, kind.upper()):
                return r
        raise KeyError((estimator, n, kind))

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "estimator", "n", "kind", "mean_risk", "stderr", "replicas"])
        for r in self.rows:
            w.writerow([self.family, r.estimator, r.n, r.kind, f"{r.mean_risk:.6g}",
                        f"{r.stderr:.6g}", r.replicas])
        return buf.getvalue()

    def weights_csv(self, header: str | None = None) -> str:
        """Mean fitted weights per (estimator, n), for weight-trajectory plots."""
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "estimator", "n", "position", "mean_weight", "stderr"])
        for (name, n), W in sorted(self.weights.items()):
            sd = W.std(axis=0, ddof=1) / math.sqrt(W.shape[0]) if W.shape[0] > 1 else 0 * W[0]
            for j, (mu, se) in enumerate(zip(W.mean(axis=0), sd)):
                w.writerow([self.family, name, n, j + 1, f"{mu:.6g}", f"{se:.6g}"])
        return buf.getvalue()


def replica_seed(master_seed: int, n: int, replica: int) -> np.random.SeedSequence:
    """Counter-based seed: independent of how replicas are scheduled."""
    return np.random.SeedSequence([master_seed, n, replica])


def default_workers() -> int:
    return max(1, int(os.environ.get("WINPROB_THREADS", "1")))


def risk_experiment(dist: RankingDistribution, estimators: Mapping[str, Estimator],
                    n_values: Sequence[int], R: int = 1000, kind: str | Sequence[str] = "KL",
                    master_seed: int = 0, *, eps: float = EPSILON,
                    workers: int | None = None) -> RiskTable:
    """Average divergence between true and estimated win probabilities.

    Every replica draws one sample that all estimators share, so risks are
    paired across estimators. KL is evaluated with estimates floored at
    ``eps``.

    Args:
        dist: Ranking distribution to sample from.
        estimators: Name to callable mapping a sample to an estimate, or to
            ``(estimate, weights)``; weights are collected for trace output.
        n_values: Sample sizes.
        R: Replicas per sample size.
        kind: ``"KL"``, ``"TV"`` or a sequence of both.
        master_seed: Root of the per-replica seed derivation.
        workers: Thread count; defaults to ``$WINPROB_THREADS`` or 1.
    """
    kinds = [kind.upper()] if isinstance(kind, str) else [k.upper() for k in kind]
    p = true_win_prob(dist)
    names = list(estimators)
    workers = default_workers() if workers is None else workers

    def replica(n, r):
        rng = np.random.default_rng(replica_seed(master_seed, n, r))
        sample = BenchmarkSample.from_orders(_draw_orders(dist, n, rng), dist.names())
        out = {}
        for name in names:
            res = estimators[name](sample)
            est, w = res if isinstance(res, tuple) else (res, None)
            out[name] = (np.asarray(est, dtype=float), w)
        return out

    rows, losses, weights = [], {}, {}
    for n in n_values:
        jobs = range(R)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(lambda r: replica(n, r), jobs))
        else:
            results = [replica(n, r) for r in jobs]
        for name in names:
            est = np.array([res[name][0] for res in results])
            if results[0][name][1] is not None:
                weights[(name, n)] = np.array([res[name][1] for res in results])
            for k in kinds:
                d = divergence_rows(k, p, est, eps if k == "KL" else None)
                losses[(name, n, k)] = d
                se = float(d.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
                rows.append(RiskRow(name, n, k, float(d.mean()), se, R))
    return RiskTable(dist.family, rows, losses, weights)
