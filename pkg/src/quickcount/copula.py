"""Bivariate Gaussian-copula Monte Carlo on Beta marginals.

Pairs ``(u, v)`` are drawn from a Gaussian copula, mapped through the Beta
quantile functions of two overall marginals, and then either compared
(probability that one share exceeds the other) or combined into
effective-vote shares ``theta_j / (1 - theta_abstention)`` whose shortest
empirical interval is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import generator

MIN_DRAWS = 1000
MAX_CLIP_FRACTION = 1e-3
_U_MIN = np.finfo(float).tiny
_U_MAX = 1.0 - np.finfo(float).epsneg


class CopulaError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CopulaSpec:
    rho: float
    m: int
    seed: object

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0 or math.isnan(self.rho):
            raise ValueError(f"copula correlation must lie in [-1, 1], got {self.rho}")
        if self.m < MIN_DRAWS:
            raise ValueError(f"need at least {MIN_DRAWS} copula draws, got {self.m}")


def gaussian_pair_sample(spec: CopulaSpec) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``m`` pairs in (0, 1)^2 from the Gaussian copula with parameter ``rho``."""
    rng = generator(spec.seed)
    z1 = rng.standard_normal(spec.m)
    u = np.clip(kernels.norm_cdf(z1), _U_MIN, _U_MAX)
    if spec.rho == 1.0:
        return u, u.copy()
    if spec.rho == -1.0:
        return u, np.clip(1.0 - u, _U_MIN, _U_MAX)
    z2 = spec.rho * z1 + math.sqrt(1.0 - spec.rho ** 2) * rng.standard_normal(spec.m)
    return u, np.clip(kernels.norm_cdf(z2), _U_MIN, _U_MAX)


def beta_quantile(shape, u):
    """Quantile of Beta(a, b) at ``u`` (scalar or array)."""
    a, b = shape
    try:
        return kernels.beta_ppf(a, b, u)
    except ArithmeticError as exc:
        raise CopulaError(str(exc)) from None


def coupled_draws(F_j, F_l, rho: float, m: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """``m`` draws of ``(theta_j, theta_l)`` with Beta marginals joined by the copula."""
    u, v = gaussian_pair_sample(CopulaSpec(float(rho), int(m), seed))
    return beta_quantile(F_j, u), beta_quantile(F_l, v)


def victory_pair(F_j, F_l, rho: float, m: int, seed) -> tuple[float, float]:
    """``(P(theta_j > theta_l), P(theta_l > theta_j))`` from one set of draws."""
    tj, tl = coupled_draws(F_j, F_l, rho, m, seed)
    return float(np.mean(tj > tl)), float(np.mean(tl > tj))


def victory_probability(F_j, F_l, rho: float, m: int, seed) -> float:
    """Monte Carlo estimate of P(theta_j > theta_l)."""
    return victory_pair(F_j, F_l, rho, m, seed)[0]


def lambda_samples(F_j, F_abst, rho: float, m: int, seed) -> tuple[np.ndarray, int]:
    """Draws of the effective-vote share of a category and the number clipped at 1.

    ``F_abst`` is the abstention marginal; ``rho`` the correlation between the
    category and abstention. Raises :class:`CopulaError` when more than 0.1% of
    draws exceed 1.
    """
    tj, tJ = coupled_draws(F_j, F_abst, rho, m, seed)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = tj / (1.0 - tJ)
    bad = ~(lam <= 1.0)
    clipped = int(bad.sum())
    if clipped > MAX_CLIP_FRACTION * m:
        raise CopulaError(
            f"{clipped} of {m} effective-vote draws exceed 1; marginals "
            f"Beta{tuple(F_j)} and abstention Beta{tuple(F_abst)} are incoherent")
    lam[bad] = 1.0
    return lam, clipped


def window_size(m: int, gamma: float) -> int:
    """Number of sorted draws a probability-``gamma`` window must contain."""
    # guard against gamma*m landing a hair above an integer
    return min(m, max(1, math.ceil(gamma * m - 1e-9)))


def minimal_length_interval(samples, gamma: float) -> tuple[float, float]:
    """Shortest window holding ``ceil(gamma * m)`` sorted draws; ties go to the left."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    xs = np.sort(np.asarray(samples, dtype=float))
    k = window_size(xs.size, gamma)
    i = kernels.minimal_window(xs, k)
    return float(xs[i]), float(xs[i + k - 1])


def equal_tailed_interval(samples, gamma: float) -> tuple[float, float]:
    """Empirical equal-tailed interval holding at least ``ceil(gamma * m)`` draws."""
    xs = np.sort(np.asarray(samples, dtype=float))
    m = xs.size
    k = window_size(m, gamma)
    i = (m - k) // 2
    return float(xs[i]), float(xs[i + k - 1])


@dataclass(frozen=True)
class LambdaInterval:
    candidate: int
    gamma: float
    lower: float
    upper: float
    point: float
    clipped: int = 0

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def lambda_interval(j: int, F_j, F_abst, rho: float, gamma: float, m: int, seed) -> LambdaInterval:
    lam, clipped = lambda_samples(F_j, F_abst, rho, m, seed)
    lo, hi = minimal_length_interval(lam, gamma)
    return LambdaInterval(j, gamma, lo, hi, float(lam.mean()), clipped)


def pairwise_victory(means, shapes, rho, n_registered: int, m: int, seed) -> np.ndarray:
    """Victory probabilities for the registered candidates.

    The leader (largest mean) gets its probability of beating the runner-up;
    every other candidate gets its probability of beating the leader. Each
    pair draws from its own substream keyed by the non-leader index.
    """
    means = np.asarray(means[:n_registered], dtype=float)
    order = np.argsort(-means, kind="stable")
    leader, second = int(order[0]), int(order[1])
    out = np.empty(n_registered)
    for j in range(n_registered):
        other = second if j == leader else j
        p_lead, p_other = victory_pair(shapes[leader], shapes[other], rho[leader, other], m,
                                       _child(seed, other))
        out[j] = p_lead if j == leader else p_other
    return out


def _child(seed, key: int):
    if isinstance(seed, tuple):
        return seed + (key,)
    return (seed, key)
