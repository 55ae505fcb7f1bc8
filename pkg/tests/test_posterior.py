from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from quickcount.posterior import (PosteriorError, StratumPosterior, beta_moments, blended_sigma,
                                  fit_posteriors, overall_marginal, overall_mean, sigma_bounds,
                                  stratum_posterior, summarize, theta_interval)
from quickcount.sampling import census_allocation, draw_sample


def test_stratum_posterior_example():
    a, b = stratum_posterior([100, 100], [30, 50])
    assert (a, b) == (80.5, 120.5)
    post = StratumPosterior(np.array([[a]]), np.array([[b]]))
    assert post.mean[0, 0] == pytest.approx(80.5 / 201, abs=1e-15)
    assert round(post.mean[0, 0], 6) == 0.400498
    exact = Fraction(161, 2) * Fraction(241, 2) / (Fraction(201) ** 2 * 202)
    assert post.var[0, 0] == pytest.approx(float(exact), rel=1e-14)


def test_zero_votes_prior_floor():
    a, b = stratum_posterior([100, 100], [0, 0])
    assert (a, b) == (0.5, 200.5)
    assert a / (a + b) == pytest.approx(0.002488, abs=1e-6)


def test_matrix_input(small_frame):
    sample = draw_sample(small_frame, census_allocation(small_frame), 0)
    post = fit_posteriors(sample)
    s = small_frame.strata[0]
    assert np.allclose(post.alpha[0], 0.5 + s.counts.sum(axis=0))
    assert np.allclose(post.alpha[0] + post.beta[0], 1 + s.voters)


def test_overall_mean_examples():
    assert overall_mean([0.4, 0.6], [0.5, 0.5]) == pytest.approx(0.5)
    assert overall_mean([0.37], [1.0]) == 0.37
    assert overall_mean([0.1, 0.2, 0.4], [0.2, 0.3, 0.5]) == pytest.approx(0.02 + 0.06 + 0.2)
    with pytest.raises(PosteriorError):
        overall_mean([0.1, 0.2], [0.5, 0.6])
    with pytest.raises(PosteriorError):
        overall_mean([0.1, 0.2], [1.0])


def test_sigma_bounds_examples():
    perp, star = sigma_bounds([0.01, 0.01], [0.5, 0.5])
    assert perp == pytest.approx(np.sqrt(0.005), abs=1e-15)
    assert star == pytest.approx(0.1, abs=1e-15)
    perp, star = sigma_bounds([0.0049], [1.0])
    assert perp == pytest.approx(0.07) and star == pytest.approx(0.07)


def test_sigma_star_is_max_over_unit_correlation():
    rng = np.random.default_rng(1)
    sig = rng.uniform(0.01, 0.1, 10)
    w = rng.dirichlet(np.ones(10))
    perp, star = sigma_bounds(sig ** 2, w)
    cov = np.outer(sig, sig)          # all correlations equal to one
    assert star == pytest.approx(np.sqrt(w @ cov @ w), rel=1e-13)
    assert perp == pytest.approx(np.sqrt(w @ np.diag(sig ** 2) @ w), rel=1e-13)
    assert perp <= star


def test_blend():
    assert blended_sigma(0.0707107, 0.1, 0.0) == 0.0707107
    assert blended_sigma(0.0707107, 0.1, 1.0) == 0.1
    assert blended_sigma(0.0707107, 0.1, 0.5) == pytest.approx(0.08535535)
    for bad in (-0.1, 1.1, np.nan):
        with pytest.raises(PosteriorError):
            blended_sigma(0.07, 0.1, bad)


def test_overall_marginal_examples():
    assert overall_marginal(0.5, np.sqrt(0.05)) == pytest.approx((2.0, 2.0))
    assert overall_marginal(0.4, np.sqrt(0.024)) == pytest.approx((3.6, 5.4))
    with pytest.raises(PosteriorError):
        overall_marginal(0.5, 0.5)
    with pytest.raises(PosteriorError):
        overall_marginal(1.0, 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_moment_round_trip(mu, frac):
    var = frac * mu * (1 - mu)
    a, b = overall_marginal(mu, np.sqrt(var))
    m, v = beta_moments(a, b)
    assert m == pytest.approx(mu, abs=1e-12)
    assert v == pytest.approx(var, rel=1e-10, abs=1e-15)


def test_uniform_interval():
    lo, hi = theta_interval(1.0, 1.0, 0.95)
    assert lo == pytest.approx(0.025, abs=1e-12) and hi == pytest.approx(0.975, abs=1e-12)


def _cubic_root(target):
    # F(x) = 3x^2 - 2x^3 on [0, 1], solved by the roots of the cubic
    roots = np.roots([-2.0, 3.0, 0.0, -target])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0 <= r.real <= 1]
    assert len(real) == 1
    return real[0]


def test_beta22_interval_cubic_oracle():
    lo, hi = theta_interval(2.0, 2.0, 0.5)
    assert lo == pytest.approx(_cubic_root(0.25), abs=1e-12)
    assert hi == pytest.approx(_cubic_root(0.75), abs=1e-12)


def test_interval_matches_scipy():
    lo, hi = theta_interval(80.5, 120.5, 0.9)
    assert lo == pytest.approx(stats.beta.ppf(0.05, 80.5, 120.5), rel=1e-10)
    assert hi == pytest.approx(stats.beta.ppf(0.95, 80.5, 120.5), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.002, 0.05), st.floats(1.2, 3.0),
       st.floats(0.5, 0.99))
def test_interval_nesting(mu, perp, ratio, level):
    star = perp * ratio
    if star ** 2 >= mu * (1 - mu) / 11:     # keep nu >= 10 (unimodal marginals)
        return
    ivs = []
    for d in (0.0, 0.5, 1.0):
        a, b = overall_marginal(mu, blended_sigma(perp, star, d))
        if min(a, b) < 2:
            return
        ivs.append(theta_interval(a, b, level))
    for (lo0, hi0), (lo1, hi1) in zip(ivs, ivs[1:]):
        assert lo1 <= lo0 + 1e-12 and hi0 <= hi1 + 1e-12


def test_summary_invariants(small_frame):
    from quickcount.sampling import allocate_proportional
    sample = draw_sample(small_frame, allocate_proportional(small_frame, 16), 3)
    post = fit_posteriors(sample)
    summ = summarize(post, small_frame.weights, 0.3)
    # each category carries half a prior vote, so shares add to slightly more than one
    assert 1.0 < summ.mu.sum() < 1.001
    assert np.all(summ.sigma_perp <= summ.sigma + 1e-15)
    assert np.all(summ.sigma <= summ.sigma_star + 1e-15)
    m, v = beta_moments(summ.beta_a, summ.beta_b)
    assert np.allclose(m, summ.mu, atol=1e-10) and np.allclose(v, summ.sigma ** 2, rtol=1e-10)
    doc = summ.to_json([f"c{j}" for j in range(6)])
    assert set(doc[0]) == {"candidate", "mu", "sigma_perp", "sigma_star", "delta", "sigma",
                           "beta_a", "beta_b"}
