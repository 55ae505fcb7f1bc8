"""Cross-candidate correlations from sampled station shares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import SampleDraw

CLIP_SLACK = 1e-12


def stratum_correlation(x, y) -> float:
    """Pearson correlation of paired station shares.

    Returns 0 when fewer than two pairs are given or either series is
    constant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return 0.0
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx <= 0.0 or syy <= 0.0:
        return 0.0
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def stratum_correlation_matrix(props: np.ndarray) -> np.ndarray:
    """All pairwise correlations of the columns of a (c_i, J) share matrix."""
    c, J = props.shape
    out = np.eye(J)
    if c < 2:
        return out
    d = props - props.mean(axis=0)
    ss = np.einsum("ij,ij->j", d, d)
    ok = ss > 0.0
    cov = d.T @ d
    scale = np.sqrt(np.where(ok, ss, 1.0))
    r = cov / np.outer(scale, scale)
    r[~ok, :] = 0.0
    r[:, ~ok] = 0.0
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


def overall_correlation(correlations, weights):
    """Weighted average of per-stratum correlations (first axis = strata)."""
    c = np.asarray(correlations, dtype=float)
    w = np.asarray(weights, dtype=float)
    rho = np.tensordot(w, c, axes=(0, 0))
    over = np.abs(rho) > 1.0
    if np.any(np.abs(rho[over]) - 1.0 > CLIP_SLACK):
        raise ValueError("weighted correlation outside [-1, 1]; weights do not sum to 1")
    rho = np.clip(rho, -1.0, 1.0)
    return float(rho) if rho.ndim == 0 else rho


@dataclass(frozen=True, eq=False)
class DependenceMatrix:
    rho: np.ndarray                 # (J, J)
    per_stratum: np.ndarray         # (N, J, J)

    def __getitem__(self, pair):
        return float(self.rho[pair])

    def lower_triangle(self) -> list[list[float]]:
        J = self.rho.shape[0]
        return [[float(self.rho[j, k]) for k in range(j + 1)] for j in range(J)]

    @classmethod
    def from_lower_triangle(cls, rows) -> "DependenceMatrix":
        J = len(rows)
        rho = np.eye(J)
        for j, row in enumerate(rows):
            for k, v in enumerate(row):
                rho[j, k] = rho[k, j] = v
        return cls(rho, np.empty((0, J, J)))


def estimate_dependence(sample: SampleDraw, weights) -> DependenceMatrix:
    per = np.array([stratum_correlation_matrix(p.proportions) for p in sample.strata])
    rho = overall_correlation(per, weights)
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    return DependenceMatrix(rho, per)
