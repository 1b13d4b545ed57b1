import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import samples
from winprob.methods import registry, select
from winprob.ranking import BenchmarkSample

ALL = ["mle", "loo-kl", "loo-tv", "borda", "average-rank", "pl", "gt", "minimax-t1",
       "minimax-t3", "uniform"]


def test_registry_names():
    assert sorted(registry()) == sorted(ALL)
    with pytest.raises(ValueError, match="unknown"):
        select(["mle", "magic"])


def test_dominant_algorithm_first_everywhere():
    s = BenchmarkSample.from_orders([[1, 0, 2, 3], [1, 2, 0, 3], [1, 3, 2, 0], [1, 0, 3, 2]])
    for name, method in registry(pl_pseudocount=0.1).items():
        if name == "uniform":
            continue
        assert int(np.argmin(method(s).ranking_key())) == 1, name


@settings(max_examples=20, deadline=None)
@given(samples(min_m=3, max_m=5, min_n=3, max_n=10))
def test_valid_probability_vectors(s):
    for name, method in registry(pl_pseudocount=0.1).items():
        res = method(s)
        if res.win_prob is None:
            continue
        assert res.win_prob.shape == (s.m,), name
        assert np.all(res.win_prob >= 0), name
        assert res.win_prob.sum() == pytest.approx(1.0), name


@settings(max_examples=15, deadline=None)
@given(samples(min_m=3, max_m=5, min_n=3, max_n=10), st.randoms(use_true_random=False))
def test_permutation_equivariance(s, rnd):
    perm = np.array(rnd.sample(range(s.m), s.m))
    r = s.relabel(perm)
    for name, method in registry(pl_pseudocount=0.1).items():
        a, b = method(s), method(r)
        if a.win_prob is not None:
            np.testing.assert_allclose(b.win_prob[perm], a.win_prob, atol=1e-8, err_msg=name)
        else:
            np.testing.assert_allclose(b.scores[perm], a.scores, err_msg=name)
