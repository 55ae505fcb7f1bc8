"""Independence-assuming Normal-Gamma baseline.

Station counts in stratum ``i`` are modelled as ``x ~ Normal(n theta_ij,
precision tau_ij / n)``. With flat priors the posterior is

    tau_ij        ~ Gamma((c_i - 1) / 2, rate = (sum x^2/n - (sum x)^2 / sum n) / 2)
    theta_ij | tau ~ Normal(sum x / sum n, precision tau * sum n) truncated to (0, 1)

and draws are independent across strata and categories. Overall shares are
weighted sums of stratum draws; effective-vote shares divide by the total of
the vote categories.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .copula import minimal_length_interval
from .estimates import ModelEstimate
from .frame import category_labels
from .posterior import _check_weights
from .rng import generator
from .sampling import SampleDraw

RATE_TOL = 1e-12
_U_MIN = np.finfo(float).tiny
_THETA_MAX = 1.0 - np.finfo(float).epsneg


class BaselineError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NormalGammaPosterior:
    """Posterior parameters per stratum and category, each (N, J)."""

    location: np.ndarray
    shape: np.ndarray
    rate: np.ndarray
    scale: np.ndarray

    @property
    def N(self) -> int:
        return self.location.shape[0]


def normal_gamma_posterior(potential_voters, counts, stratum: str = "?") -> tuple:
    """``(location, shape, rate, scale)`` for one stratum; ``counts`` is (c_i, J)."""
    n = np.asarray(potential_voters, dtype=float)
    x = np.asarray(counts, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    c = n.size
    if c < 2:
        raise BaselineError(f"stratum {stratum!r}: baseline posterior needs at least 2 stations, got {c}")
    sn = n.sum()
    sx = x.sum(axis=0)
    sxx = (x * x / n[:, None]).sum(axis=0)
    rate = 0.5 * (sxx - sx * sx / sn)
    bad = rate <= RATE_TOL * np.maximum(sxx, 1.0)
    if np.any(bad):
        j = int(np.argmax(bad))
        labels = category_labels(x.shape[1]) if x.shape[1] >= 5 else [f"category_{k + 1}" for k in range(x.shape[1])]
        raise BaselineError(
            f"stratum {stratum!r}, {labels[j]}: every sampled station has the same share, "
            "so the baseline posterior is improper")
    shape = np.full_like(rate, 0.5 * (c - 1))
    return sx / sn, shape, rate, np.full_like(rate, sn)


def fit_baseline(sample: SampleDraw) -> NormalGammaPosterior:
    parts = [normal_gamma_posterior(p.potential_voters, p.counts, p.stratum_id) for p in sample.strata]
    return NormalGammaPosterior(*(np.array(col) for col in zip(*parts)))


def truncated_normal(mean, sd, rng: np.random.Generator) -> np.ndarray:
    """One draw per element of Normal(mean, sd) restricted to (0, 1), by inverse CDF.

    Means must lie in [0, 1]; the upper half of the truncated range is
    inverted through the complementary CDF to keep precision in the tail.
    """
    mean, sd = np.broadcast_arrays(np.asarray(mean, dtype=float), np.asarray(sd, dtype=float))
    p_lo = kernels.norm_cdf(-mean / sd)              # mass below 0
    q_hi = kernels.norm_cdf(-(1.0 - mean) / sd)      # mass above 1
    w = rng.random(mean.shape)
    inside = 1.0 - p_lo - q_hi
    u = p_lo + w * inside
    uc = q_hi + (1.0 - w) * inside
    upper = u > 0.5
    z = kernels.norm_ppf(np.clip(np.where(upper, uc, u), _U_MIN, 0.5))
    z = np.where(upper, -z, z)
    return np.clip(mean + sd * z, _U_MIN, _THETA_MAX)


def mn_posterior_draw(post: NormalGammaPosterior, T: int, seed) -> np.ndarray:
    """``T`` independent posterior draws of every theta_ij, shape (T, N, J)."""
    rng = generator(seed)
    size = (T,) + post.location.shape
    tau = rng.gamma(np.broadcast_to(post.shape, size), 1.0 / np.broadcast_to(post.rate, size))
    sd = 1.0 / np.sqrt(tau * post.scale)
    return truncated_normal(np.broadcast_to(post.location, size), sd, rng)


def mn_estimate(sample: SampleDraw, weights, gamma: float, T: int, seed) -> ModelEstimate:
    """Baseline point estimates, minimal-length intervals and victory frequencies."""
    w = _check_weights(weights, len(sample.strata))
    draws = mn_posterior_draw(fit_baseline(sample), T, seed)
    theta = np.einsum("i,tij->tj", w, draws)
    lam = theta[:, :-1] / theta[:, :-1].sum(axis=1, keepdims=True)
    J = theta.shape[1]
    t_iv = np.array([minimal_length_interval(theta[:, j], gamma) for j in range(J)])
    l_iv = np.array([minimal_length_interval(lam[:, j], gamma) for j in range(J - 1)])
    n_reg = J - 3
    wins = np.bincount(np.argmax(theta[:, :n_reg], axis=1), minlength=n_reg) / T
    return ModelEstimate("baseline", gamma, theta.mean(axis=0), t_iv[:, 0], t_iv[:, 1],
                         lam.mean(axis=0), l_iv[:, 0], l_iv[:, 1], wins)
