import json
import math

import numpy as np
import pytest
from scipy import stats

from conftest import random_sample
from winprob.errors import InfeasibleError, MethodError
from winprob.estimators import loo_loss
from winprob.methods import mle, select, uniform
from winprob.ranking import BenchmarkSample
from winprob.validation import fold_indices, heldout_cross_entropy, kfold_cv, paired_pvalue


def test_folds_partition():
    folds = fold_indices(23, 10, seed=1)
    assert len(folds) == 10
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(23))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


@pytest.mark.parametrize("n,k", [(5, 6), (5, 1)])
def test_folds_infeasible(n, k):
    with pytest.raises(InfeasibleError):
        fold_indices(n, k, 0)


def test_uniform_loss_is_log_m(rng):
    s = random_sample(rng, 5, 20)
    rep = kfold_cv(s, 4, {"uniform": uniform}, seed=0)
    np.testing.assert_allclose(rep.methods["uniform"].fold_losses, math.log(5))


def test_dominant_algorithm_zero_loss():
    s = BenchmarkSample.from_orders([[2, 0, 1]] * 12)
    rep = kfold_cv(s, 3, {"mle": mle})
    assert rep.methods["mle"].mean_loss == 0.0


def test_leave_one_out_matches_loo_loss(rng):
    s = random_sample(rng, 4, 8)
    rep = kfold_cv(s, 8, {"mle": mle}, seed=5)
    assert rep.methods["mle"].mean_loss == pytest.approx(loo_loss(s, [1.0], "KL"), abs=1e-12)


def test_fold_loss_recomputable(rng):
    s = random_sample(rng, 4, 17)
    rep = kfold_cv(s, 5, {"mle": mle}, seed=2)
    for f, loss in zip(rep.folds, rep.methods["mle"].fold_losses):
        train = s.subset(np.setdiff1d(np.arange(s.n), f))
        assert loss == heldout_cross_entropy(mle(train).win_prob, s.winners[f])


def test_report_deterministic_and_serializable(rng):
    s = random_sample(rng, 5, 30)
    methods = select(["mle", "loo-kl", "borda", "pl"], pl_pseudocount=0.1)
    a = kfold_cv(s, 10, methods, seed=1)
    b = kfold_cv(s, 10, methods, seed=1)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["methods"]["mle"]["pvalue_vs_reference"] is None
    assert 0 <= d["methods"]["pl"]["pvalue_vs_reference"] <= 1
    assert len(d["methods"]["borda"]["top3"]) == 3
    table = a.to_table()
    assert table.splitlines()[0].split()[:4] == ["Scheme", "First", "Second", "Third"]


def test_method_failure_named():
    s = BenchmarkSample.from_observations([[0, 1], [1, 0], [0, 1], [1, 0]], m=3)
    with pytest.raises(MethodError, match="pl"):
        kfold_cv(s, 2, select(["pl"]))


class TestPValue:
    def test_identical(self):
        assert paired_pvalue([1, 2, 3], [1, 2, 3]) == 1.0

    def test_constant_shift(self):
        assert paired_pvalue([1, 2, 3], [1.5, 2.5, 3.5]) == 0.0

    def test_against_scipy(self):
        a = [1.0, 1.2, 1.1, 0.9, 1.0]
        b = [1.3, 1.4, 1.2, 1.1, 1.3]
        assert paired_pvalue(a, b) == pytest.approx(stats.ttest_rel(a, b).pvalue, rel=1e-12)

    def test_random_against_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.normal(size=(2, 10))
            assert paired_pvalue(a, b) == pytest.approx(stats.ttest_rel(a, b).pvalue, rel=1e-10)

    def test_permutation_exact(self):
        # all five differences negative: only the two all-same-sign flips are as extreme
        a = [1.0, 1.2, 1.1, 0.9, 1.0]
        b = [1.3, 1.4, 1.2, 1.1, 1.3]
        assert paired_pvalue(a, b, test="permutation") == pytest.approx(2 / 32)

    def test_errors(self):
        with pytest.raises(ValueError):
            paired_pvalue([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            paired_pvalue([1], [2])
        with pytest.raises(ValueError):
            paired_pvalue([1, 2], [2, 2], test="wilcoxon")
