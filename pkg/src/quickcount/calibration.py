"""Choosing the blend parameter delta by simulation on a reference election.

Stratified samples are drawn repeatedly from a fully counted frame. For each
category the smallest delta (on a grid) is found whose intervals contain the
official share in at least a fraction ``alpha`` of the samples. Every delta
value is scored on the same samples, so coverage is monotone in delta and
bisection applies.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import kernels
from .copula import lambda_interval
from .dependence import estimate_dependence
from .frame import ElectionFrame, category_labels, official_totals
from .parallel import replicate_map
from .posterior import PosteriorError, blended_sigma, fit_posteriors, overall_mean, sigma_bounds
from .rng import CALIBRATION, COPULA, SAMPLE
from .sampling import Allocation, draw_sample

DEFAULT_TOLERANCE = 1 / 64
MIN_REPLICATIONS = 100


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ReplicationMoments:
    """Per-replication posterior summaries, each (R, J)."""

    mu: np.ndarray
    sigma_perp: np.ndarray
    sigma_star: np.ndarray
    rho_abstention: np.ndarray
    seed: object = None
    stream: int = CALIBRATION

    @property
    def R(self) -> int:
        return self.mu.shape[0]


def _moments_one(frame: ElectionFrame, alloc: Allocation, seed, stream: int, r: int):
    try:
        sample = draw_sample(frame, alloc, (seed, stream, r, SAMPLE))
        post = fit_posteriors(sample)
        w = frame.weights
        mu = overall_mean(post.mean, w)
        perp, star = sigma_bounds(post.var, w)
        rho = estimate_dependence(sample, w).rho[:, -1]
    except Exception as exc:
        raise CalibrationError(f"replication {r}: {exc}") from exc
    return mu, perp, star, rho


def replication_moments(frame: ElectionFrame, alloc: Allocation, R: int, seed,
                        workers: int = 1, stream: int = CALIBRATION) -> ReplicationMoments:
    if not frame.has_votes:
        raise CalibrationError("calibration needs a fully counted frame")
    rows = replicate_map(partial(_moments_one, frame, alloc, seed, stream), range(R), workers)
    mu, perp, star, rho = (np.array(col) for col in zip(*rows))
    return ReplicationMoments(mu, perp, star, rho, seed, stream)


def _beta_shapes(mu, sigma):
    var = sigma * sigma
    bad = (var <= 0) | (var >= mu * (1 - mu))
    if np.any(bad):
        r, j = np.argwhere(bad)[0]
        raise PosteriorError(
            f"replication {r}, category {j + 1}: variance {var[r, j]:.3g} impossible "
            f"for a Beta with mean {mu[r, j]:.6g}")
    nu = mu * (1 - mu) / var - 1.0
    return mu * nu, (1 - mu) * nu


def theta_hits(mom: ReplicationMoments, truth, delta, alpha: float) -> np.ndarray:
    """Boolean (R, J) array: does the delta-blended interval contain the truth?"""
    d = np.broadcast_to(np.asarray(delta, dtype=float), mom.mu.shape[1:])
    sigma = blended_sigma(mom.sigma_perp, mom.sigma_star, d)
    a, b = _beta_shapes(mom.mu, sigma)
    lo = kernels.beta_ppf_many(a, b, (1 - alpha) / 2)
    hi = kernels.beta_ppf_many(a, b, (1 + alpha) / 2)
    truth = np.asarray(truth, dtype=float)
    return (lo <= truth) & (truth <= hi)


def _lambda_hits_one(mom, truth_lam, delta, level, m, r):
    d = np.asarray(delta, dtype=float)
    sigma = blended_sigma(mom.sigma_perp[r], mom.sigma_star[r], d)
    a, b = _beta_shapes(mom.mu[r:r + 1], sigma[None, :])
    a, b = a[0], b[0]
    J = a.size
    out = np.empty(J - 1, dtype=bool)
    for j in range(J - 1):
        iv = lambda_interval(j, (a[j], b[j]), (a[-1], b[-1]), mom.rho_abstention[r, j], level, m,
                             (mom.seed, mom.stream, r, COPULA, j))
        out[j] = iv.contains(truth_lam[j])
    return out


def lambda_hits(mom: ReplicationMoments, truth_lam, delta, level: float, m: int,
                workers: int = 1) -> np.ndarray:
    """Boolean (R, J-1) array of effective-vote interval hits (copula draws)."""
    fn = partial(_lambda_hits_one, mom, np.asarray(truth_lam, dtype=float),
                 np.asarray(delta, dtype=float), level, m)
    return np.array(replicate_map(fn, range(mom.R), workers))


def coverage_rate(frame: ElectionFrame, alloc: Allocation, delta, alpha: float, R: int, seed,
                  workers: int = 1, scale: str = "theta", m: int = 2000) -> np.ndarray:
    """Fraction of ``R`` seeded samples whose intervals contain the official share.

    Returns ``J`` values on the theta scale or ``J-1`` on the lambda scale.
    """
    if R < MIN_REPLICATIONS:
        raise CalibrationError(f"need at least {MIN_REPLICATIONS} replications, got {R}")
    mom = replication_moments(frame, alloc, R, seed, workers)
    theta, lam = official_totals(frame)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (frame.J,))
    if scale == "theta":
        return theta_hits(mom, theta, delta, alpha).mean(axis=0)
    if scale == "lambda":
        return lambda_hits(mom, lam, delta, alpha, m, workers).mean(axis=0)
    raise ValueError(f"unknown scale {scale!r}")


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    delta: np.ndarray
    coverage: np.ndarray
    below_target: np.ndarray
    alpha: float
    replications: int
    scale: str = "theta"
    tolerance: float = DEFAULT_TOLERANCE
    evaluated: list = field(default_factory=list)

    def to_json(self) -> dict:
        labels = category_labels(self.delta.size)
        return {
            "alpha": self.alpha,
            "replications": self.replications,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "candidates": [
                {"candidate": labels[j], "delta": float(self.delta[j]),
                 "coverage": float(self.coverage[j]), "below_target": bool(self.below_target[j])}
                for j in range(self.delta.size)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CalibrationResult":
        rows = data["candidates"]
        return cls(
            np.array([r["delta"] for r in rows], dtype=float),
            np.array([r["coverage"] for r in rows], dtype=float),
            np.array([r["below_target"] for r in rows], dtype=bool),
            float(data["alpha"]), int(data["replications"]),
            data.get("scale", "theta"), float(data.get("tolerance", DEFAULT_TOLERANCE)),
        )

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["candidate", "delta", "coverage", "below_target", "alpha", "replications", "scale"])
        for row in self.to_json()["candidates"]:
            w.writerow([row["candidate"], repr(row["delta"]), repr(row["coverage"]),
                        int(row["below_target"]), self.alpha, self.replications, self.scale])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.csv_text(), encoding="utf-8")


def load_deltas(path) -> np.ndarray:
    """Read the delta vector from a calibration JSON file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return CalibrationResult.from_json(data).delta


def _bisect(score, n_items: int, alpha: float, steps: int):
    """Smallest grid index in ``0..steps`` per item with score >= alpha.

    ``score(k)`` maps an int array of grid indices (one per item) to
    coverages. Returns (index, coverage, below_target, evaluations).
    """
    evaluated = [dict() for _ in range(n_items)]

    def run(k):
        cov = score(k)
        for j in range(n_items):
            evaluated[j][int(k[j])] = float(cov[j])
        return cov

    zero = np.zeros(n_items, dtype=int)
    cov0 = run(zero)
    lo = np.where(cov0 >= alpha, -1, 0)            # -1 marks "done at 0"
    hi = np.full(n_items, steps)
    active = lo >= 0
    if active.any():
        cov1 = run(np.where(active, steps, 0))
        never = active & (cov1 < alpha)
        active &= ~never
    else:
        never = np.zeros(n_items, dtype=bool)
    while np.any(active & (hi - lo > 1)):
        mid = np.where(active & (hi - lo > 1), (lo + hi) // 2, np.where(lo < 0, 0, hi))
        cov = run(mid)
        moving = active & (hi - lo > 1)
        passed = moving & (cov >= alpha)
        hi = np.where(passed, mid, hi)
        lo = np.where(moving & ~passed, mid, lo)
    idx = np.where(lo < 0, 0, hi)
    cov = np.array([evaluated[j][int(idx[j])] for j in range(n_items)])
    for j in range(n_items):
        pts = sorted(evaluated[j].items())
        covs = [c for _, c in pts]
        if any(b < a for a, b in zip(covs, covs[1:])):
            raise CalibrationError(f"coverage not monotone in delta for category {j + 1}: {pts}")
    return idx, cov, never, evaluated


def calibrate_delta(frame: ElectionFrame, alloc: Allocation, alpha: float, R: int, seed,
                    tolerance: float = DEFAULT_TOLERANCE, workers: int = 1,
                    scale: str = "theta", m: int = 2000) -> CalibrationResult:
    """Per-category smallest grid delta reaching coverage ``alpha``.

    On the lambda scale the abstention delta is calibrated on the theta scale
    first and then held fixed while each vote category is calibrated against
    its effective-vote share.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if R < MIN_REPLICATIONS:
        raise CalibrationError(f"need at least {MIN_REPLICATIONS} replications, got {R}")
    steps = int(round(1 / tolerance))
    if steps < 1 or abs(steps * tolerance - 1) > 1e-9:
        raise ValueError(f"tolerance must be 1/k for a positive integer k, got {tolerance}")
    mom = replication_moments(frame, alloc, R, seed, workers)
    theta, lam = official_totals(frame)
    J = frame.J

    idx, cov, never, ev = _bisect(
        lambda k: theta_hits(mom, theta, k / steps, alpha).mean(axis=0), J, alpha, steps)
    if scale == "lambda":
        d_abst = idx[-1] / steps

        def score(k):
            d = np.append(k / steps, d_abst)
            return lambda_hits(mom, lam, d, alpha, m, workers).mean(axis=0)

        idx_l, cov_l, never_l, ev_l = _bisect(score, J - 1, alpha, steps)
        idx = np.append(idx_l, idx[-1])
        cov = np.append(cov_l, cov[-1])
        never = np.append(never_l, never[-1])
        ev = ev_l + [ev[-1]]
    elif scale != "theta":
        raise ValueError(f"unknown scale {scale!r}")
    delta = idx / steps
    evaluated = [sorted((k / steps, c) for k, c in e.items()) for e in ev]
    return CalibrationResult(delta, cov, never, alpha, R, scale, tolerance, evaluated)
