import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sample, samples
from winprob.errors import InfeasibleError
from winprob.estimators import (
    fit_loo_weights,
    loo_estimate,
    loo_loss,
    loo_loss_batch,
    mle_win_prob,
    simplex_grid,
    simplex_minimize,
    validate_weights,
    weighted_estimate,
)
from winprob.ranking import EPSILON, BenchmarkSample, compute_rank_counts


def naive_loo(sample, w, kind, eps=EPSILON):
    """Literal leave-one-out: rebuild counts from scratch without observation i."""
    K = len(w)
    losses = []
    for i in range(sample.n):
        rest = [o for j, o in enumerate(sample.observations) if j != i]
        p = np.zeros(sample.m)
        for o in rest:
            for pos in range(K):
                p[o.order[pos]] += w[pos]
        p /= len(rest)
        y = sample.observations[i].order[0]
        if kind == "KL":
            losses.append(-math.log(max(p[y], eps)))
        else:
            e = np.zeros(sample.m)
            e[y] = 1.0
            losses.append(np.abs(e - p).sum())
    return float(np.mean(losses))


def test_mle_fractions():
    s = BenchmarkSample.from_orders([[0, 1, 2], [0, 2, 1], [2, 0, 1], [1, 0, 2]])
    np.testing.assert_allclose(mle_win_prob(compute_rank_counts(s)), [0.5, 0.25, 0.25])


def test_weighted_estimate_sums_to_one(rng):
    s = random_sample(rng, 5, 9)
    p = weighted_estimate(compute_rank_counts(s, 3), [0.5, 0.3, 0.2])
    assert p.sum() == pytest.approx(1.0)
    with pytest.raises(InfeasibleError):
        weighted_estimate(compute_rank_counts(s, 2), [0.5, 0.3, 0.2])


@pytest.mark.parametrize("w", [[0.5, 0.6], [-0.1, 1.1], [0.2, 0.2]])
def test_validate_weights_rejects(w):
    with pytest.raises(ValueError):
        validate_weights(w)


def test_validate_weights_monotone():
    with pytest.raises(ValueError):
        validate_weights([0.3, 0.7], monotone=True)
    validate_weights([0.7, 0.3], monotone=True)


@settings(max_examples=40, deadline=None)
@given(samples(min_m=3, max_m=5, min_n=2, max_n=10),
       st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) > 0.01),
       st.sampled_from(["KL", "TV"]))
def test_loo_loss_matches_naive(s, raw, kind):
    w = np.array(raw) / sum(raw)
    assert loo_loss(s, w, kind) == pytest.approx(naive_loo(s, w, kind), rel=1e-10, abs=1e-12)


def test_loo_tv_closed_form(rng):
    s = random_sample(rng, 4, 12)
    W = simplex_grid(3, 10, monotone=False)
    C = compute_rank_counts(s, 3).counts.astype(float)
    y = s.winners
    A = C[y].copy()
    A[:, 0] -= 1
    own = (A @ W.T) / (s.n - 1)
    np.testing.assert_allclose(loo_loss_batch(s, W, "TV"), 2 * (1 - own.mean(axis=0)),
                               atol=1e-12)


def test_loo_needs_two(rng):
    s = random_sample(rng, 3, 1)
    with pytest.raises(InfeasibleError):
        fit_loo_weights(s, 2)


def test_loo_K_bounds(rng):
    s = random_sample(rng, 3, 5, depth=2)
    with pytest.raises(InfeasibleError):
        fit_loo_weights(s, 3)
    fit = fit_loo_weights(s, 1)
    np.testing.assert_array_equal(fit.weights, [1.0])


def test_grid_order_and_size():
    G = simplex_grid(3, 4, monotone=True)
    assert G.tolist()[0] == [1.0, 0.0, 0.0]
    assert np.all(np.diff(G, axis=1) <= 1e-12)
    assert len(G) == 4  # partitions of 4 into at most 3 parts
    assert len(simplex_grid(3, 4, monotone=False)) == math.comb(6, 2)


def test_simplex_minimize_quadratic():
    target = np.array([0.5, 0.3, 0.2])
    res = simplex_minimize(lambda w: float(((w - target) ** 2).sum()), 3, monotone=True,
                           resolution=7)
    np.testing.assert_allclose(res.weights, target, atol=1e-5)


def test_simplex_minimize_monotone_boundary():
    # unconstrained optimum is increasing, so the monotone optimum lies on w1 = w2
    target = np.array([0.2, 0.8])
    res = simplex_minimize(lambda w: float(((w - target) ** 2).sum()), 2, monotone=True)
    np.testing.assert_allclose(res.weights, [0.5, 0.5], atol=1e-9)
    res = simplex_minimize(lambda w: float(((w - target) ** 2).sum()), 2, monotone=False)
    np.testing.assert_allclose(res.weights, target, atol=1e-5)


def test_ties_prefer_larger_w1():
    res = simplex_minimize(lambda W: np.zeros(len(W)), 3, batched=True)
    np.testing.assert_array_equal(res.weights, [1.0, 0.0, 0.0])


def test_loo_fit_matches_fine_grid(rng):
    for _ in range(5):
        s = random_sample(rng, 4, 6)
        fit = fit_loo_weights(s, 2, "KL")
        grid = simplex_grid(2, 1000, monotone=True)
        best = loo_loss_batch(s, grid, "KL").min()
        assert fit.loo_loss <= best + 1e-3
        assert fit.loo_loss == pytest.approx(loo_loss(s, fit.weights))


def test_mle_wins_for_point_mass():
    s = BenchmarkSample.from_orders([[0, 1, 2, 3]] * 10)
    p, fit = loo_estimate(s, 3)
    np.testing.assert_allclose(fit.weights, [1, 0, 0])
    np.testing.assert_allclose(p, [1, 0, 0, 0])


@settings(max_examples=30, deadline=None)
@given(samples(min_m=3, max_m=5, min_n=3, max_n=12), st.data())
def test_kl_loss_midpoint_convex(s, data):
    def interior():
        raw = data.draw(st.lists(st.floats(0.05, 1), min_size=3, max_size=3))
        return np.array(raw) / sum(raw)
    a, b = interior(), interior()
    la, lb, lm = (loo_loss(s, w, "KL") for w in (a, b, (a + b) / 2))
    assert lm <= (la + lb) / 2 + 1e-9


@settings(max_examples=30, deadline=None)
@given(samples(min_m=3, max_m=5, min_n=3, max_n=12), st.sampled_from(["KL", "TV"]))
def test_fitted_estimate_is_distribution(s, kind):
    p, fit = loo_estimate(s, 3, kind)
    assert np.all(p >= 0) and p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(fit.weights) <= 1e-12)
    assert fit.weights.sum() == pytest.approx(1.0)
