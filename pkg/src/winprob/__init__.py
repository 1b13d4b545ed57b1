"""Estimate each algorithm's probability of winning a future benchmark dataset."""

__version__ = "0.1.0"

from .baselines import average_rank, borda, good_turing_win_prob, plackett_luce_fit
from .divergence import kl, tv
from .errors import InfeasibleError, MethodError, RankingError
from .estimators import (
    fit_loo_weights,
    loo_estimate,
    loo_loss,
    mle_win_prob,
    simplex_minimize,
    weighted_estimate,
)
from .formats import parse_rankings_csv
from .minimax import (
    mle_minimax_bound,
    theorem1_bound,
    theorem1_weight,
    theorem3_bound,
    theorem3_optimal_weights,
)
from .ranking import (
    BenchmarkSample,
    RankCountMatrix,
    RankingObservation,
    compute_rank_counts,
    compute_rank_counts_excluding,
    winner_of,
)
from .validation import kfold_cv, paired_pvalue

__all__ = [
    "BenchmarkSample", "InfeasibleError", "MethodError", "RankCountMatrix", "RankingError",
    "RankingObservation", "average_rank", "borda", "compute_rank_counts",
    "compute_rank_counts_excluding", "fit_loo_weights", "good_turing_win_prob", "kfold_cv", "kl",
    "loo_estimate", "loo_loss", "mle_minimax_bound", "mle_win_prob", "paired_pvalue",
    "parse_rankings_csv", "plackett_luce_fit", "simplex_minimize", "theorem1_bound",
    "theorem1_weight", "theorem3_bound", "theorem3_optimal_weights", "tv", "weighted_estimate",
    "winner_of",
]
