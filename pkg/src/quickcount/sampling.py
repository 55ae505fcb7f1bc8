"""Stratified sample allocation, sample draws and the ratio estimator."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frame import ElectionFrame, FrameError, frame_header, read_frame_rows
from .rng import generator

MIN_PER_STRATUM = 2


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class Allocation:
    sizes: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def as_array(self) -> np.ndarray:
        return np.array(self.sizes, dtype=np.int64)


def allocate_proportional(frame: ElectionFrame, c: int) -> Allocation:
    """Allocate ``c`` stations proportionally to stratum potential voters.

    Largest-remainder rounding, ties broken by stratum order; each stratum then
    clamped to ``[2, K_i]`` and the total restored to ``c`` by moving units
    along the remainder ordering.
    """
    N, K = frame.N, frame.K
    if c < MIN_PER_STRATUM * N:
        raise AllocationError(f"sample size {c} below the minimum {MIN_PER_STRATUM} x {N} strata")
    if c > K:
        raise AllocationError(f"sample size {c} exceeds the {K} stations in the frame")
    nv = frame.stratum_voters
    caps = frame.stratum_sizes
    # exact integer quotas: c * n_i / n
    num = c * nv
    den = int(nv.sum())
    base = num // den
    rem = num - base * den
    sizes = base.copy()
    order = sorted(range(N), key=lambda i: (-int(rem[i]), i))
    for i in order[: c - int(base.sum())]:
        sizes[i] += 1
    sizes = np.clip(sizes, MIN_PER_STRATUM, caps)
    # residual of the exact quota; positive means the stratum is owed units
    owed = [(c * int(nv[i]) - int(sizes[i]) * den) for i in range(N)]
    while sizes.sum() > c:
        cand = [i for i in range(N) if sizes[i] > MIN_PER_STRATUM]
        i = min(cand, key=lambda i: (owed[i], i))
        sizes[i] -= 1
        owed[i] += den
    while sizes.sum() < c:
        cand = [i for i in range(N) if sizes[i] < caps[i]]
        i = max(cand, key=lambda i: (owed[i], -i))
        sizes[i] += 1
        owed[i] -= den
    return Allocation(tuple(int(s) for s in sizes))


def validate_allocation(frame: ElectionFrame, alloc: Allocation) -> None:
    if len(alloc.sizes) != frame.N:
        raise AllocationError(f"allocation covers {len(alloc.sizes)} strata, frame has {frame.N}")
    for s, c in zip(frame.strata, alloc.sizes):
        if not 1 <= c <= s.size:
            raise AllocationError(f"stratum {s.id!r}: cannot draw {c} of {s.size} stations")


def census_allocation(frame: ElectionFrame) -> Allocation:
    return Allocation(tuple(int(k) for k in frame.stratum_sizes))


@dataclass(frozen=True, eq=False)
class StratumSample:
    stratum_id: str
    indices: np.ndarray            # positions within the frame stratum
    station_ids: tuple[str, ...]
    potential_voters: np.ndarray   # (c_i,)
    votes: np.ndarray | None       # (c_i, J-1)

    @property
    def size(self) -> int:
        return self.indices.size

    @property
    def counts(self) -> np.ndarray:
        """(c_i, J) counts with abstention last."""
        if self.votes is None:
            raise FrameError(f"sample of stratum {self.stratum_id!r} has no vote counts")
        return np.column_stack([self.votes, self.potential_voters - self.votes.sum(axis=1)])

    @property
    def proportions(self) -> np.ndarray:
        """Per-station shares of potential voters, (c_i, J)."""
        return self.counts / self.potential_voters[:, None]


@dataclass(frozen=True, eq=False)
class SampleDraw:
    strata: tuple[StratumSample, ...]
    allocation: Allocation
    n_categories: int
    seed: object = None

    @property
    def J(self) -> int:
        return self.n_categories


def draw_sample(frame: ElectionFrame, alloc: Allocation, seed) -> SampleDraw:
    """Simple random sampling without replacement within each stratum.

    ``seed`` is anything :func:`quickcount.rng.generator` accepts.
    """
    validate_allocation(frame, alloc)
    rng = generator(seed)
    parts = []
    for s, c in zip(frame.strata, alloc.sizes):
        if c == s.size:
            idx = np.arange(s.size)
        else:
            idx = np.sort(rng.choice(s.size, size=c, replace=False))
        parts.append(StratumSample(
            s.id, idx, tuple(s.station_ids[k] for k in idx),
            s.potential_voters[idx],
            None if s.votes is None else s.votes[idx],
        ))
    return SampleDraw(tuple(parts), alloc, frame.J, seed)


def stratum_means(sample: SampleDraw) -> np.ndarray:
    """Sample mean count per category, (N, J)."""
    out = []
    for part in sample.strata:
        if part.size == 0:
            raise FrameError(f"empty sample in stratum {part.stratum_id!r}")
        out.append(part.counts.mean(axis=0))
    return np.array(out)


def ratio_estimates(sample: SampleDraw, frame: ElectionFrame) -> np.ndarray:
    """Ratio estimator of the category shares of potential voters (J entries)."""
    ybar = stratum_means(sample)
    totals = frame.stratum_sizes[:, None] * ybar
    est = totals.sum(axis=0)
    return est / est.sum()


def ratio_leader(sample: SampleDraw, frame: ElectionFrame) -> int:
    """0-based index of the registered candidate leading under the ratio estimator."""
    est = ratio_estimates(sample, frame)
    return int(np.argmax(est[: frame.n_registered]))


def write_samples(samples, path: str | Path) -> None:
    """Write one or more draws with a leading ``replicate`` column."""
    path = Path(path)
    samples = list(samples)
    J = samples[0].J
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate"] + frame_header(J))
        for r, draw in enumerate(samples):
            for part in draw.strata:
                for k, stid in enumerate(part.station_ids):
                    votes = [""] * (J - 1) if part.votes is None else [int(v) for v in part.votes[k]]
                    w.writerow([r, part.stratum_id, stid, int(part.potential_voters[k])] + votes)


def read_samples(path: str | Path, frame: ElectionFrame) -> list[SampleDraw]:
    """Read draws written by :func:`write_samples`, resolved against ``frame``."""
    by_rep: dict[int, dict[str, list[str]]] = {}
    for extras, sid, stid, _pv, _votes, _w in read_frame_rows(path, extra_columns=("replicate",)):
        by_rep.setdefault(int(extras[0]), {}).setdefault(sid, []).append(stid)
    draws = []
    for rep in sorted(by_rep):
        chosen = by_rep[rep]
        parts, sizes = [], []
        for s in frame.strata:
            pos = {stid: k for k, stid in enumerate(s.station_ids)}
            try:
                idx = np.sort(np.array([pos[t] for t in chosen.get(s.id, [])], dtype=np.int64))
            except KeyError as exc:
                raise FrameError(f"replicate {rep}: station {exc.args[0]!r} not in stratum {s.id!r}") from None
            parts.append(StratumSample(
                s.id, idx, tuple(s.station_ids[k] for k in idx), s.potential_voters[idx],
                None if s.votes is None else s.votes[idx]))
            sizes.append(idx.size)
        draws.append(SampleDraw(tuple(parts), Allocation(tuple(sizes)), frame.J, None))
    return draws
