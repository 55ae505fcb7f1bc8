import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from quickcount import kernels
from quickcount.copula import (CopulaError, CopulaSpec, beta_quantile, coupled_draws,
                               equal_tailed_interval, gaussian_pair_sample, lambda_interval,
                               lambda_samples, minimal_length_interval, pairwise_victory,
                               victory_pair, victory_probability, window_size)

M = 200_000


def _normal_scores_corr(u, v):
    return np.corrcoef(stats.norm.ppf(u), stats.norm.ppf(v))[0, 1]


def test_comonotone_shortcut():
    u, v = gaussian_pair_sample(CopulaSpec(1.0, 5000, 3))
    assert np.array_equal(u, v)
    u, v = gaussian_pair_sample(CopulaSpec(-1.0, 5000, 3))
    assert np.allclose(u + v, 1.0)


@pytest.mark.parametrize("rho,lo,hi", [(0.0, -0.01, 0.01), (0.8, 0.79, 0.81)])
def test_normal_scores_correlation(rho, lo, hi):
    u, v = gaussian_pair_sample(CopulaSpec(rho, M, 42))
    assert lo <= _normal_scores_corr(u, v) <= hi


@pytest.mark.parametrize("rho", [-0.9, -0.3, 0.0, 0.5, 0.99])
def test_marginal_uniformity(rho):
    m = 20_000
    u, v = gaussian_pair_sample(CopulaSpec(rho, m, 7))
    bound = 1.63 / np.sqrt(m)
    assert stats.kstest(u, "uniform").statistic <= bound
    assert stats.kstest(v, "uniform").statistic <= bound
    assert np.all((u > 0) & (u < 1) & (v > 0) & (v < 1))


@pytest.mark.parametrize("rho", [-0.7, 0.0, 0.9])
def test_sklar_marginals_unchanged(rho):
    m = 20_000
    tj, tl = coupled_draws((30.0, 70.0), (5.0, 2.0), rho, m, 11)
    bound = 1.63 / np.sqrt(m)
    assert stats.kstest(tj, stats.beta(30, 70).cdf).statistic <= bound
    assert stats.kstest(tl, stats.beta(5, 2).cdf).statistic <= bound


def test_spec_validation():
    with pytest.raises(ValueError):
        CopulaSpec(1.2, 5000, 0)
    with pytest.raises(ValueError):
        CopulaSpec(0.2, 999, 0)
    with pytest.raises(ValueError):
        CopulaSpec(float("nan"), 5000, 0)


def test_beta_quantile_examples():
    assert beta_quantile((1.0, 1.0), 0.3) == pytest.approx(0.3, abs=1e-13)
    assert beta_quantile((2.0, 1.0), 0.25) == pytest.approx(0.5, abs=1e-13)
    x = beta_quantile((80.5, 120.5), 0.5)
    assert abs(stats.beta.cdf(x, 80.5, 120.5) - 0.5) <= 1e-10


def test_victory_examples():
    m = 10_000
    p = victory_probability((50.0, 50.0), (50.0, 50.0), 0.3, m, 1)
    assert abs(p - 0.5) <= 3 / np.sqrt(m)
    assert victory_probability((900.0, 100.0), (100.0, 900.0), 0.0, m, 1) >= 0.999
    p = victory_probability((2.0, 2.0), (2.0, 2.0), 0.9, m, 2)
    assert abs(p - 0.5) <= 3 / np.sqrt(m)


def test_victory_analytic_independent():
    # Theta_j - Theta_l is close to normal for these shapes
    a, b = stats.beta(300, 700), stats.beta(290, 710)
    want = stats.norm.cdf((a.mean() - b.mean()) / np.sqrt(a.var() + b.var()))
    p = victory_probability((300.0, 700.0), (290.0, 710.0), 0.0, M, 5)
    assert abs(p - want) <= 3 * 0.5 / np.sqrt(M) + 2e-3


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95), st.integers(0, 1000))
def test_mirrored_draws_sum_to_one(rho, seed):
    p, q = victory_pair((20.0, 30.0), (22.0, 28.0), rho, 2000, seed)
    assert p + q == pytest.approx(1.0, abs=1e-15)


def test_victory_same_on_both_scales():
    tj, tl = coupled_draws((30.0, 70.0), (28.0, 72.0), 0.2, 5000, 3)
    abst = np.random.default_rng(0).uniform(0.3, 0.5, 5000)
    assert np.array_equal(tj > tl, tj / (1 - abst) > tl / (1 - abst))


def test_pairwise_victory_roles():
    shapes = [(300.0, 700.0), (280.0, 720.0), (100.0, 900.0)]
    rho = np.array([[1, -0.5, 0.1], [-0.5, 1, 0.0], [0.1, 0.0, 1]])
    means = [a / (a + b) for a, b in shapes]
    v = pairwise_victory(means, shapes, rho, 3, 4000, (9,))
    p_lead, p_second = victory_pair(shapes[0], shapes[1], -0.5, 4000, (9, 1))
    assert v[0] == p_lead and v[1] == p_second
    assert v[2] == victory_pair(shapes[0], shapes[2], 0.1, 4000, (9, 2))[1]


def test_lambda_degenerate_abstention():
    lam, clipped = lambda_samples((30.0, 70.0), (1e-3, 1e6), 0.0, 20_000, 4)
    assert clipped == 0
    assert stats.kstest(lam, stats.beta(30, 70).cdf).statistic <= 1.63 / np.sqrt(20_000)


def test_lambda_concentrates():
    lam, _ = lambda_samples((3e6, 7e6), (4e6, 6e6), 0.0, 5000, 4)
    assert np.allclose(lam, 0.5, atol=2e-3)


def test_lambda_moments_quadrature():
    Fj, FJ, rho = (30.0, 70.0), (40.0, 60.0), -0.4
    # Gauss-Hermite over the bivariate normal behind the copula
    x, w = np.polynomial.hermite_e.hermegauss(80)
    z1, z2 = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w) / (2 * np.pi)
    zc = rho * z1 + np.sqrt(1 - rho ** 2) * z2
    # invert through the survival function so extreme nodes keep their precision
    tj = stats.beta.isf(stats.norm.sf(z1), *Fj)
    tJ = stats.beta.isf(stats.norm.sf(zc), *FJ)
    g = tj / (1 - tJ)
    mean = (ww * g).sum()
    var = (ww * g * g).sum() - mean ** 2
    lam, _ = lambda_samples(Fj, FJ, rho, M, 8)
    assert abs(lam.mean() - mean) <= 4 * np.sqrt(var / M)
    assert lam.var() == pytest.approx(var, rel=0.02)


def test_lambda_excess_clipping():
    with pytest.raises(CopulaError):
        lambda_samples((60.0, 40.0), (60.0, 40.0), 0.0, 2000, 0)


def test_lambda_interval_fields():
    iv = lambda_interval(0, (30.0, 70.0), (40.0, 60.0), -0.3, 0.95, 5000, 1)
    assert 0 <= iv.lower < iv.point < iv.upper <= 1
    lam, _ = lambda_samples((30.0, 70.0), (40.0, 60.0), -0.3, 5000, 1)
    assert np.mean((lam >= iv.lower) & (lam <= iv.upper)) >= 0.95
    assert iv.contains(iv.point) and iv.length == iv.upper - iv.lower


def test_minimal_interval_examples():
    assert minimal_length_interval(np.arange(1, 11), 0.5) == (1.0, 5.0)
    assert minimal_length_interval([0, 0, 0, 0, 10], 0.6) == (0.0, 0.0)
    assert window_size(1000, 0.95) == 950


def _brute(xs, k):
    xs = np.sort(xs)
    best = None
    for i in range(xs.size - k + 1):
        w = xs[i + k - 1] - xs[i]
        if best is None or w < best[0]:
            best = (w, i)
    return float(xs[best[1]]), float(xs[best[1] + k - 1])


@pytest.mark.parametrize("seed", range(5))
def test_minimal_interval_brute_force(seed):
    xs = np.random.default_rng(seed).gamma(2.0, size=1000)
    for g in (0.5, 0.9, 0.95):
        assert minimal_length_interval(xs, g) == _brute(xs, window_size(1000, g))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.99))
def test_minimal_not_wider_than_equal_tailed(seed, g):
    xs = np.random.default_rng(seed).beta(2, 9, size=500)
    lo, hi = minimal_length_interval(xs, g)
    elo, ehi = equal_tailed_interval(xs, g)
    assert hi - lo <= ehi - elo + 1e-15
    k = window_size(500, g)
    assert np.sum((xs >= lo) & (xs <= hi)) >= k


def test_deterministic_given_seed():
    a = coupled_draws((3.0, 4.0), (5.0, 6.0), 0.3, 2000, (1, 2, 3))
    b = coupled_draws((3.0, 4.0), (5.0, 6.0), 0.3, 2000, (1, 2, 3))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert kernels.BACKEND in ("compiled", "python")
