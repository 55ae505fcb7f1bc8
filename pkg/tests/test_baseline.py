import numpy as np
import pytest
from scipy import integrate, stats

from quickcount.baseline import (BaselineError, NormalGammaPosterior, fit_baseline, mn_estimate,
                                 mn_posterior_draw, normal_gamma_posterior, truncated_normal)
from quickcount.frame import build_frame
from quickcount.sampling import allocate_proportional, draw_sample


def _post(n, x):
    loc, shape, rate, scale = normal_gamma_posterior(n, x)
    return NormalGammaPosterior(*(np.atleast_1d(v)[None, :] for v in (loc, shape, rate, scale)))


def test_worked_example():
    loc, shape, rate, scale = normal_gamma_posterior([100, 100], [30, 50])
    assert loc[0] == pytest.approx(0.4)
    assert shape[0] == 0.5
    assert rate[0] == pytest.approx(0.5 * (9 + 25 - 32))
    assert scale[0] == 200


def test_degenerate_rate():
    with pytest.raises(BaselineError, match="same share"):
        normal_gamma_posterior([100, 200], [30, 60], stratum="D07")
    with pytest.raises(BaselineError, match="D07"):
        normal_gamma_posterior([100, 200], [[0, 1], [0, 5]], stratum="D07")


def test_single_station():
    with pytest.raises(BaselineError, match="at least 2"):
        normal_gamma_posterior([100], [30])


def _mean_oracle(m, shape, rate, scale):
    # E[theta] = E_tau[ E[truncated normal | tau] ]; shape 1/2 so tau = t^2 removes the singularity
    assert shape == 0.5

    def inner(t):
        tau = t * t / rate
        s = 1.0 / np.sqrt(tau * scale)
        a, b = -m / s, (1 - m) / s
        return stats.truncnorm.mean(a, b, loc=m, scale=s) * 2 / np.sqrt(np.pi) * np.exp(-t * t)

    return integrate.quad(inner, 0, np.inf, limit=200)[0]


def test_posterior_mean_quadrature():
    post = _post([100, 100], [30, 50])
    draws = mn_posterior_draw(post, 100_000, 1)[:, 0, 0]
    want = _mean_oracle(0.4, 0.5, 1.0, 200.0)
    assert abs(draws.mean() - want) <= 4 * draws.std() / np.sqrt(draws.size)
    # heavy tails at c = 2 pull the mean toward 1/2, away from the location
    assert want > 0.41


def test_posterior_mean_near_location_with_more_stations():
    n = np.full(10, 500)
    x = np.array([200, 210, 190, 205, 198, 202, 195, 207, 193, 200])
    post = _post(n, x)
    draws = mn_posterior_draw(post, 100_000, 2)[:, 0, 0]
    assert abs(draws.mean() - x.sum() / n.sum()) <= 0.01


def test_truncated_normal_matches_scipy():
    rng = np.random.default_rng(0)
    for m, s in [(0.4, 0.1), (0.02, 0.05), (0.98, 0.3), (0.5, 3.0), (1e-4, 1e-3)]:
        z = truncated_normal(np.full(20_000, m), np.full(20_000, s), rng)
        ref = stats.truncnorm((0 - m) / s, (1 - m) / s, loc=m, scale=s)
        assert stats.kstest(z, ref.cdf).statistic <= 1.63 / np.sqrt(z.size)


def test_draws_strictly_inside():
    rng = np.random.default_rng(1)
    z = truncated_normal(np.array([0.0, 1.0, 1e-9, 1 - 1e-9] * 5000), np.full(20_000, 1e-12), rng)
    assert np.all((z > 0) & (z < 1))


@pytest.fixture(scope="module")
def sample_and_frame():
    from quickcount.harness import SyntheticFrameSpec, generate_frame
    frame = generate_frame(SyntheticFrameSpec(n_strata=5, stations_per_stratum=40, voters=(400, 900),
                                              shock_sd=0.03, exposure=0.5, counts="multinomial"), 2)
    return draw_sample(frame, allocate_proportional(frame, 40), 0), frame


def test_estimate_shapes_and_victory(sample_and_frame):
    sample, frame = sample_and_frame
    est = mn_estimate(sample, frame.weights, 0.95, 4000, 3)
    J = frame.J
    assert est.model == "baseline"
    assert est.theta_point.shape == (J,) and est.lam_point.shape == (J - 1,)
    assert est.victory.sum() == pytest.approx(1.0)
    assert np.all(est.theta_lower < est.theta_point) and np.all(est.theta_point < est.theta_upper)
    assert est.lam_point.sum() == pytest.approx(1.0, abs=1e-12)


def test_nested_in_gamma(sample_and_frame):
    sample, frame = sample_and_frame
    wide = mn_estimate(sample, frame.weights, 0.95, 4000, 3)
    narrow = mn_estimate(sample, frame.weights, 0.5, 4000, 3)
    for scale in ("theta", "lambda"):
        _, lo95, hi95 = wide.arrays(scale)
        _, lo50, hi50 = narrow.arrays(scale)
        assert np.all(lo95 <= lo50) and np.all(hi50 <= hi95)


def test_deterministic(sample_and_frame):
    sample, frame = sample_and_frame
    a = mn_estimate(sample, frame.weights, 0.9, 2000, (4, 2))
    b = mn_estimate(sample, frame.weights, 0.9, 2000, (4, 2))
    assert np.array_equal(a.theta_lower, b.theta_lower) and np.array_equal(a.victory, b.victory)


def test_stratum_order_irrelevant(sample_and_frame):
    sample, frame = sample_and_frame
    post = fit_baseline(sample)
    order = np.arange(post.N)[::-1]
    rev = NormalGammaPosterior(*(getattr(post, f)[order] for f in ("location", "shape", "rate", "scale")))
    w = frame.weights
    a = np.einsum("i,tij->tj", w, mn_posterior_draw(post, 40_000, 1))
    b = np.einsum("i,tij->tj", w[order], mn_posterior_draw(rev, 40_000, 2))
    se = np.sqrt(a.var(axis=0) / 40_000 * 2)
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 4 * se)
    assert np.allclose(a.std(axis=0), b.std(axis=0), rtol=0.03)


def test_tight_sample_concentrates():
    rows = []
    for i in range(3):
        for k in range(40):
            n = 1000
            d = k % 3
            rows.append((f"D{i}", f"{i}-{k}", n, (300 + d, 250 - d, 100 + d, 20 - d % 2, 30 + d % 2)))
    frame = build_frame(rows)
    est = mn_estimate(draw_sample(frame, allocate_proportional(frame, 60), 0), frame.weights, 0.95, 4000, 1)
    from quickcount.frame import official_totals
    _, lam = official_totals(frame)
    assert np.all(np.abs(est.lam_point - lam) < 2e-3)
    assert np.all(est.lam_upper - est.lam_lower < 5e-3)
