"""Per-stratum Beta posteriors and their aggregation to overall marginals.

Each stratum share gets a Jeffreys-type Beta(1/2 + votes, 1/2 + non-votes)
posterior. The overall share is a weighted sum of stratum shares, whose mean
is exact and whose standard deviation lies between the independent-strata
value ``sigma_perp`` and the fully-correlated value ``sigma_star``. A blend
parameter ``delta`` picks a point in between; the overall marginal is the
Beta distribution matching that mean and standard deviation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .sampling import SampleDraw

WEIGHT_TOL = 1e-12


class PosteriorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StratumPosterior:
    """Beta shape parameters per stratum and category, each of shape (N, J)."""

    alpha: np.ndarray
    beta: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)

    @property
    def var(self) -> np.ndarray:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


def stratum_posterior(potential_voters, votes):
    """Beta posterior shapes for one stratum.

    ``votes`` may be a vector over stations (one category) or a
    ``(c_i, J)`` matrix; the result has the matching trailing shape.
    """
    n = np.asarray(potential_voters, dtype=float)
    x = np.asarray(votes, dtype=float)
    if n.ndim != 1 or n.size < 1:
        raise PosteriorError("need at least one sampled station")
    if np.any(x < 0) or np.any(x > (n if x.ndim == 1 else n[:, None])):
        raise PosteriorError("vote counts must lie in [0, potential voters]")
    xs = x.sum(axis=0)
    alpha = 0.5 + xs
    beta = 0.5 + n.sum() - xs
    return alpha, beta


def fit_posteriors(sample: SampleDraw) -> StratumPosterior:
    shapes = [stratum_posterior(p.potential_voters, p.counts) for p in sample.strata]
    return StratumPosterior(np.array([a for a, _ in shapes]), np.array([b for _, b in shapes]))


def _check_weights(weights, n_strata: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_strata,):
        raise PosteriorError(f"{w.size} weights for {n_strata} strata")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise PosteriorError("stratum weights must be positive and sum to 1")
    return w


def overall_mean(means, weights) -> np.ndarray:
    """Weighted mean across strata; ``means`` is (N,) or (N, J)."""
    means = np.asarray(means, dtype=float)
    w = _check_weights(weights, means.shape[0])
    return w @ means


def sigma_bounds(variances, weights) -> tuple[np.ndarray, np.ndarray]:
    """Standard deviations under independent and perfectly correlated strata."""
    variances = np.asarray(variances, dtype=float)
    w = _check_weights(weights, variances.shape[0])
    perp = np.sqrt((w * w) @ variances)
    star = w @ np.sqrt(variances)
    return perp, star


def blended_sigma(sigma_perp, sigma_star, delta):
    """Convex blend ``(1 - delta) sigma_perp + delta sigma_star``."""
    d = np.asarray(delta, dtype=float)
    if np.any((d < 0) | (d > 1)) or np.any(np.isnan(d)):
        raise PosteriorError(f"delta must lie in [0, 1], got {delta}")
    out = (1.0 - d) * np.asarray(sigma_perp, dtype=float) + d * np.asarray(sigma_star, dtype=float)
    return out if out.ndim else float(out)


def overall_marginal(mu, sigma):
    """Beta shapes with mean ``mu`` and standard deviation ``sigma`` (moment matching)."""
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(sigma, dtype=float) ** 2
    if np.any((mu <= 0) | (mu >= 1)):
        raise PosteriorError(f"mean outside (0, 1): {mu}")
    if np.any(var <= 0) or np.any(var >= mu * (1 - mu)):
        raise PosteriorError(f"variance {var} impossible for a Beta with mean {mu}")
    nu = mu * (1 - mu) / var - 1.0
    a, b = mu * nu, (1 - mu) * nu
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def beta_moments(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    return a / s, a * b / (s * s * (s + 1.0))


def theta_interval(a: float, b: float, level: float) -> tuple[float, float]:
    """Equal-tailed interval of probability ``level`` under Beta(a, b)."""
    if not 0 < level < 1:
        raise PosteriorError(f"probability level must lie in (0, 1), got {level}")
    lo, hi = kernels.beta_ppf(a, b, np.array([(1 - level) / 2, (1 + level) / 2]))
    return float(lo), float(hi)


@dataclass(frozen=True, eq=False)
class MarginalSummary:
    """Overall marginal per category; every field has shape (J,)."""

    mu: np.ndarray
    sigma_perp: np.ndarray
    sigma_star: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray
    beta_a: np.ndarray
    beta_b: np.ndarray

    def shapes(self, j: int) -> tuple[float, float]:
        return float(self.beta_a[j]), float(self.beta_b[j])

    def interval(self, j: int, level: float) -> tuple[float, float]:
        return theta_interval(self.beta_a[j], self.beta_b[j], level)

    def to_json(self, labels) -> list[dict]:
        return [
            {"candidate": labels[j], "mu": float(self.mu[j]),
             "sigma_perp": float(self.sigma_perp[j]), "sigma_star": float(self.sigma_star[j]),
             "delta": float(self.delta[j]), "sigma": float(self.sigma[j]),
             "beta_a": float(self.beta_a[j]), "beta_b": float(self.beta_b[j])}
            for j in range(self.mu.size)
        ]


def summarize(post: StratumPosterior, weights, delta) -> MarginalSummary:
    """Aggregate stratum posteriors into per-category overall marginals."""
    mu = overall_mean(post.mean, weights)
    perp, star = sigma_bounds(post.var, weights)
    d = np.broadcast_to(np.asarray(delta, dtype=float), mu.shape).copy()
    sigma = blended_sigma(perp, star, d)
    a, b = overall_marginal(mu, sigma)
    return MarginalSummary(mu, perp, star, d, np.asarray(sigma), np.asarray(a), np.asarray(b))
