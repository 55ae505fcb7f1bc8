"""Election frame: strata, polling stations and official totals.

A frame is the census the quick count samples from. Categories are numbered
``1..J``: ``1..J-3`` registered candidates, ``J-2`` non-registered candidates,
``J-1`` null votes and ``J`` abstention. Files carry only the ``J-1`` vote
columns; abstention is always derived as the residual of potential voters.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MIN_CATEGORIES = 5


class FrameError(ValueError):
    """Invalid frame data or frame file."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Station:
    id: str
    potential_voters: int
    votes: tuple[int, ...] | None = None

    @property
    def abstention(self) -> int | None:
        if self.votes is None:
            return None
        return self.potential_voters - sum(self.votes)


@dataclass(frozen=True, eq=False)
class Stratum:
    """Stations of one stratum stored column-wise.

    ``votes`` has shape ``(K_i, J-1)`` or is ``None`` for a frame without
    counts (live mode).
    """

    id: str
    station_ids: tuple[str, ...]
    potential_voters: np.ndarray
    votes: np.ndarray | None = None

    def __post_init__(self):
        pv = np.asarray(self.potential_voters, dtype=np.int64)
        if pv.ndim != 1 or pv.size == 0:
            raise FrameError(f"stratum {self.id!r} has no stations")
        if len(self.station_ids) != pv.size:
            raise FrameError(f"stratum {self.id!r}: station ids and voter counts differ in length")
        if np.any(pv < 1):
            bad = self.station_ids[int(np.argmin(pv))]
            raise FrameError(f"station {bad!r} in stratum {self.id!r} has no potential voters")
        object.__setattr__(self, "potential_voters", _frozen(pv))
        if self.votes is not None:
            v = np.asarray(self.votes, dtype=np.int64)
            if v.ndim != 2 or v.shape[0] != pv.size:
                raise FrameError(f"stratum {self.id!r}: vote matrix has shape {v.shape}")
            if np.any(v < 0):
                raise FrameError(f"stratum {self.id!r} has negative vote counts")
            over = v.sum(axis=1) > pv
            if over.any():
                bad = self.station_ids[int(np.flatnonzero(over)[0])]
                raise FrameError(f"station {bad!r}: votes exceed potential voters")
            object.__setattr__(self, "votes", _frozen(v))

    @property
    def size(self) -> int:
        """Station count K_i."""
        return self.potential_voters.size

    @property
    def voters(self) -> int:
        """Potential voters n_i."""
        return int(self.potential_voters.sum())

    @property
    def counts(self) -> np.ndarray:
        """All ``J`` category counts per station, abstention last."""
        if self.votes is None:
            raise FrameError(f"stratum {self.id!r} carries no vote counts")
        abst = self.potential_voters - self.votes.sum(axis=1)
        return np.column_stack([self.votes, abst])

    @property
    def stations(self) -> list[Station]:
        votes = self.votes
        return [
            Station(sid, int(n), None if votes is None else tuple(int(x) for x in votes[k]))
            for k, (sid, n) in enumerate(zip(self.station_ids, self.potential_voters))
        ]


@dataclass(frozen=True, eq=False)
class ElectionFrame:
    strata: tuple[Stratum, ...]
    n_categories: int
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        strata = tuple(self.strata)
        object.__setattr__(self, "strata", strata)
        J = int(self.n_categories)
        if J < MIN_CATEGORIES:
            raise FrameError(f"need at least {MIN_CATEGORIES} categories, got J={J}")
        if not strata:
            raise FrameError("frame has no strata")
        seen: set[str] = set()
        ids: set[str] = set()
        for s in strata:
            if s.id in ids:
                raise FrameError(f"duplicate stratum id {s.id!r}")
            ids.add(s.id)
            if s.votes is not None and s.votes.shape[1] != J - 1:
                raise FrameError(f"stratum {s.id!r} has {s.votes.shape[1]} vote columns, expected {J - 1}")
            for sid in s.station_ids:
                if sid in seen:
                    raise FrameError(f"duplicate station id {sid!r}")
                seen.add(sid)
        object.__setattr__(self, "_index", {s.id: i for i, s in enumerate(strata)})

    @property
    def J(self) -> int:
        return self.n_categories

    @property
    def n_registered(self) -> int:
        return self.n_categories - 3

    @property
    def N(self) -> int:
        return len(self.strata)

    @property
    def K(self) -> int:
        return sum(s.size for s in self.strata)

    @property
    def n(self) -> int:
        return sum(s.voters for s in self.strata)

    @property
    def stratum_sizes(self) -> np.ndarray:
        """K_i per stratum."""
        return np.array([s.size for s in self.strata], dtype=np.int64)

    @property
    def stratum_voters(self) -> np.ndarray:
        """n_i per stratum."""
        return np.array([s.voters for s in self.strata], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        """Stratum weights n_i / n."""
        nv = self.stratum_voters.astype(float)
        return nv / nv.sum()

    @property
    def has_votes(self) -> bool:
        return all(s.votes is not None for s in self.strata)

    def stratum(self, stratum_id: str) -> Stratum:
        return self.strata[self._index[stratum_id]]

    def category_totals(self) -> np.ndarray:
        """Total count X_j for all ``J`` categories."""
        if not self.has_votes:
            raise FrameError("frame lacks vote counts")
        return np.sum([s.counts.sum(axis=0) for s in self.strata], axis=0)


def category_labels(J: int) -> list[str]:
    """Human-readable labels for categories ``1..J``."""
    return [f"candidate_{j}" for j in range(1, J - 2)] + ["non_registered", "null", "abstention"]


def official_totals(frame: ElectionFrame) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(theta, lam)``.

    ``theta`` has ``J`` entries (shares of potential voters, abstention last),
    ``lam`` has ``J-1`` entries (shares of votes effectively cast).
    """
    X = frame.category_totals().astype(float)
    theta = X / X.sum()
    turnout = X[:-1].sum()
    if turnout <= 0:
        raise FrameError("nobody voted; effective-vote shares are undefined")
    lam = X[:-1] / turnout
    return theta, lam


def lambda_margin(frame: ElectionFrame) -> float:
    """Effective-vote margin of the leading over the second registered candidate."""
    _, lam = official_totals(frame)
    top = np.sort(lam[: frame.n_registered])[::-1]
    return float(top[0] - top[1])


def totals_json(frame: ElectionFrame) -> list[dict]:
    theta, lam = official_totals(frame)
    labels = category_labels(frame.J)
    return [
        {"candidate": labels[j], "theta": float(theta[j]),
         "lambda": float(lam[j]) if j < frame.J - 1 else None}
        for j in range(frame.J)
    ]


def build_frame(rows: Iterable[Sequence], n_vote_columns: int | None = None) -> ElectionFrame:
    """Assemble a frame from ``(stratum_id, station_id, potential_voters, votes)`` rows.

    ``votes`` is a sequence of ``J-1`` counts or ``None``. Stratum order
    follows first appearance.
    """
    groups: dict[str, list] = {}
    width = n_vote_columns
    for stratum_id, station_id, pv, votes in rows:
        if votes is not None:
            if width is None:
                width = len(votes)
            elif len(votes) != width:
                raise FrameError(f"station {station_id!r} has {len(votes)} vote columns, expected {width}")
        groups.setdefault(str(stratum_id), []).append((str(station_id), int(pv), votes))
    if width is None:
        raise FrameError("cannot infer the number of categories without vote columns")
    strata = []
    for sid, items in groups.items():
        with_votes = [v is not None for _, _, v in items]
        if any(with_votes) and not all(with_votes):
            raise FrameError(f"stratum {sid!r} mixes counted and uncounted stations")
        votes = np.array([v for _, _, v in items], dtype=np.int64) if all(with_votes) else None
        strata.append(Stratum(sid, tuple(s for s, _, _ in items),
                              np.array([p for _, p, _ in items], dtype=np.int64), votes))
    return ElectionFrame(tuple(strata), width + 1)


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise FrameError(f"line {lineno}: {what} {text!r} is not an integer") from None
    return value


def read_frame_rows(path: str | Path, extra_columns: Sequence[str] = ()):
    """Yield ``(extras, stratum_id, station_id, potential_voters, votes)`` per data row.

    The header must be ``stratum_id,station_id,potential_voters,v1,...`` with
    any ``extra_columns`` leading.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FrameError(f"{path}: empty file") from None
        lead = list(extra_columns) + ["stratum_id", "station_id", "potential_voters"]
        if header[: len(lead)] != lead:
            raise FrameError(f"{path}: header must start with {','.join(lead)}")
        vote_cols = header[len(lead):]
        if vote_cols != [f"v{j}" for j in range(1, len(vote_cols) + 1)]:
            raise FrameError(f"{path}: vote columns must be v1..v{len(vote_cols)}")
        if len(vote_cols) + 1 < MIN_CATEGORIES:
            raise FrameError(f"{path}: {len(vote_cols)} vote columns imply J < {MIN_CATEGORIES}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FrameError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
            row = [c.strip() for c in row]
            extras = row[: len(extra_columns)]
            sid, stid, pv = row[len(extra_columns): len(lead)]
            raw = row[len(lead):]
            if not sid or not stid:
                raise FrameError(f"{path} line {lineno}: empty stratum or station id")
            pv = _parse_int(pv, "potential_voters", lineno)
            if all(c == "" for c in raw):
                votes = None
            elif any(c == "" for c in raw):
                raise FrameError(f"{path} line {lineno}: partially missing vote counts")
            else:
                votes = tuple(_parse_int(c, "vote count", lineno) for c in raw)
            yield extras, sid, stid, pv, votes, len(vote_cols)


def parse_frame(path: str | Path) -> ElectionFrame:
    """Read and validate a frame CSV file."""
    width = None
    rows = []
    for _, sid, stid, pv, votes, width in read_frame_rows(path):
        rows.append((sid, stid, pv, votes))
    if width is None:
        raise FrameError(f"{path}: no station rows")
    try:
        return build_frame(rows, n_vote_columns=width)
    except FrameError as exc:
        raise FrameError(f"{path}: {exc}") from None


def frame_header(J: int) -> list[str]:
    return ["stratum_id", "station_id", "potential_voters"] + [f"v{j}" for j in range(1, J)]


def write_frame(frame: ElectionFrame, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(frame_header(frame.J))
        for s in frame.strata:
            for k, stid in enumerate(s.station_ids):
                votes = [""] * (frame.J - 1) if s.votes is None else list(s.votes[k])
                w.writerow([s.id, stid, int(s.potential_voters[k])] + votes)


def frames_equal(a: ElectionFrame, b: ElectionFrame) -> bool:
    if a.J != b.J or a.N != b.N:
        return False
    for s, t in zip(a.strata, b.strata):
        if s.id != t.id or s.station_ids != t.station_ids:
            return False
        if not np.array_equal(s.potential_voters, t.potential_voters):
            return False
        if (s.votes is None) != (t.votes is None):
            return False
        if s.votes is not None and not np.array_equal(s.votes, t.votes):
            return False
    return True


def write_totals(frame: ElectionFrame, path: str | Path) -> None:
    Path(path).write_text(json.dumps(totals_json(frame), indent=2) + "\n", encoding="utf-8")
