"""Per-sample estimates shared by the copula model and the baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .copula import lambda_interval, pairwise_victory
from .dependence import estimate_dependence
from .posterior import fit_posteriors, summarize
from .rng import COPULA, VICTORY
from .sampling import SampleDraw


def child_seed(seed, *keys: int) -> tuple:
    """Extend a seed key path: ``(master, ...)`` -> ``(master, ..., *keys)``."""
    base = seed if isinstance(seed, tuple) else (seed,)
    return base + tuple(int(k) for k in keys)


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    """Point estimates, intervals and victory probabilities from one sample.

    Theta-scale arrays have ``J`` entries, lambda-scale arrays ``J-1`` (or are
    ``None`` when effective-vote intervals were not requested) and
    ``victory`` one entry per registered candidate.
    """

    model: str
    level: float
    theta_point: np.ndarray
    theta_lower: np.ndarray
    theta_upper: np.ndarray
    lam_point: np.ndarray | None
    lam_lower: np.ndarray | None
    lam_upper: np.ndarray | None
    victory: np.ndarray

    @property
    def J(self) -> int:
        return self.theta_point.size

    def arrays(self, scale: str):
        if scale == "theta":
            return self.theta_point, self.theta_lower, self.theta_upper
        if scale == "lambda":
            if self.lam_point is None:
                raise ValueError(f"{self.model} estimate has no effective-vote intervals")
            return self.lam_point, self.lam_lower, self.lam_upper
        raise ValueError(f"unknown scale {scale!r}")

    def hits(self, truth, scale: str) -> np.ndarray:
        _, lo, hi = self.arrays(scale)
        truth = np.asarray(truth, dtype=float)
        return (lo <= truth) & (truth <= hi)

    def to_json(self, labels) -> dict:
        out = {"model": self.model, "level": self.level, "candidates": []}
        for j in range(self.J):
            row = {"candidate": labels[j],
                   "theta": float(self.theta_point[j]),
                   "theta_interval": [float(self.theta_lower[j]), float(self.theta_upper[j])]}
            if self.lam_point is not None and j < self.J - 1:
                row["lambda"] = float(self.lam_point[j])
                row["lambda_interval"] = [float(self.lam_lower[j]), float(self.lam_upper[j])]
            if j < self.victory.size:
                row["victory"] = float(self.victory[j])
            out["candidates"].append(row)
        return out


def copula_estimate(sample: SampleDraw, weights, delta, gamma: float, m: int, seed,
                    effective: bool = True) -> ModelEstimate:
    """Beta marginals with delta-blended spread, joined pairwise by Gaussian copulas.

    ``seed`` is the replication key; the effective-vote draws for category
    ``j`` use ``seed + (COPULA, j)`` and the victory draws ``seed + (VICTORY,)``.
    """
    post = fit_posteriors(sample)
    summ = summarize(post, weights, delta)
    dep = estimate_dependence(sample, weights)
    J = summ.mu.size
    a, b = summ.beta_a, summ.beta_b
    lo = kernels.beta_ppf_many(a, b, (1 - gamma) / 2)
    hi = kernels.beta_ppf_many(a, b, (1 + gamma) / 2)
    lam = None
    if effective:
        ivs = [lambda_interval(j, summ.shapes(j), summ.shapes(J - 1), dep.rho[j, J - 1], gamma, m,
                               child_seed(seed, COPULA, j))
               for j in range(J - 1)]
        lam = (np.array([iv.point for iv in ivs]), np.array([iv.lower for iv in ivs]),
               np.array([iv.upper for iv in ivs]))
    n_reg = J - 3
    shapes = [summ.shapes(j) for j in range(J)]
    victory = pairwise_victory(summ.mu, shapes, dep.rho, n_reg, m, child_seed(seed, VICTORY))
    return ModelEstimate("copula", gamma, summ.mu.copy(), np.asarray(lo), np.asarray(hi),
                         *(lam or (None, None, None)), victory)
