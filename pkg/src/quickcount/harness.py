"""Coverage study: repeated stratified samples under both models.

A study draws ``R`` stratified samples from a fully counted frame, runs the
copula model and the Normal-Gamma baseline on each, and records interval
endpoints, hits against the official shares, victory probabilities and the
leader under the ratio estimator. Each replication owns the random stream
``(seed, STUDY, r)``, so results do not depend on the number of workers.

The synthetic frame generator gives every station a share vector built from
base shares, a zero-sum shock among the registered candidates (shared by the
exposed stations of a stratum, partly common to all strata) and station-level
noise.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import calibration
from .baseline import mn_estimate
from .estimates import ModelEstimate, child_seed, copula_estimate
from .frame import ElectionFrame, FrameError, Stratum, category_labels, official_totals, parse_frame
from .parallel import replicate_map
from .rng import BASELINE, SAMPLE, STUDY, generator
from .sampling import Allocation, allocate_proportional, draw_sample, ratio_leader

MIN_REPS = 100
MIN_DRAWS = 1000
MAX_TRUNCATED_FRACTION = 0.01
MODELS = ("copula", "baseline")


class StudyError(RuntimeError):
    pass


# synthetic frames ----------------------------------------------------------

@dataclass(frozen=True)
class SyntheticFrameSpec:
    """Recipe for a synthetic fully counted frame.

    Parameters
    ----------
    n_strata, stations_per_stratum : int
    voters : int or (low, high)
        Potential voters per station, fixed or uniform on ``[low, high]``.
    base_shares : sequence of float
        Shares of all ``J`` categories, abstention last; must sum to 1.
    shock_sd : float
        Standard deviation of each registered candidate's stratum shock, in
        share units. Shocks sum to zero across registered candidates.
    noise_sd : float
        Standard deviation of the per-station zero-sum noise on the
        registered candidates.
    shock_common : float
        Fraction of the swing variance shared by all strata.
    exposure : float
        Fraction of stations in each stratum that receive the swing.
    counts : {"rounded", "multinomial"}
        Rounded expected counts, or multinomial counts around the shares.
    """

    n_strata: int = 20
    stations_per_stratum: int = 50
    voters: int | tuple[int, int] = 750
    base_shares: tuple[float, ...] = (0.22, 0.20, 0.12, 0.01, 0.02, 0.43)
    shock_sd: float = 0.0
    noise_sd: float = 0.0
    shock_common: float = 0.5
    exposure: float = 1.0
    counts: str = "rounded"

    def __post_init__(self):
        object.__setattr__(self, "base_shares", tuple(float(s) for s in self.base_shares))
        if not isinstance(self.voters, int):
            object.__setattr__(self, "voters", tuple(int(v) for v in self.voters))
        s = np.array(self.base_shares)
        if s.size < 5:
            raise ValueError("need at least 5 category shares")
        if np.any(s <= 0) or abs(s.sum() - 1) > 1e-9:
            raise ValueError("base shares must be positive and sum to 1")
        if self.n_strata < 1 or self.stations_per_stratum < 1:
            raise ValueError("need at least one stratum and one station")
        lo, hi = self.voter_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid potential-voter range {self.voters}")
        if self.shock_sd < 0 or self.noise_sd < 0:
            raise ValueError("standard deviations must be nonnegative")
        if not 0 <= self.shock_common <= 1 or not 0 <= self.exposure <= 1:
            raise ValueError("shock_common and exposure must lie in [0, 1]")
        if self.counts not in ("rounded", "multinomial"):
            raise ValueError(f"unknown count model {self.counts!r}")

    @property
    def J(self) -> int:
        return len(self.base_shares)

    @property
    def voter_range(self) -> tuple[int, int]:
        return (self.voters, self.voters) if isinstance(self.voters, int) else tuple(self.voters)

    @classmethod
    def from_json(cls, data: dict) -> "SyntheticFrameSpec":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown synthetic frame fields: {sorted(extra)}")
        return cls(**data)


def _rounded_counts(p: np.ndarray, n: np.ndarray) -> np.ndarray:
    votes = np.rint(p[:, :-1] * n[:, None]).astype(np.int64)
    over = votes.sum(axis=1) - n
    for k in np.nonzero(over > 0)[0]:
        votes[k, np.argmax(votes[k])] -= over[k]
    return votes


def generate_frame(spec: SyntheticFrameSpec, seed) -> ElectionFrame:
    """Build a fully counted frame from ``spec``.

    Raises :class:`FrameError` when more than 1% of stations need their
    shares truncated at zero.
    """
    rng = generator(seed)
    J, N, K = spec.J, spec.n_strata, spec.stations_per_stratum
    base = np.array(spec.base_shares)
    n_reg = J - 3
    lo, hi = spec.voter_range
    # zero-sum swings among registered candidates; the rescaling keeps each
    # component's standard deviation at shock_sd after centering
    sd = spec.shock_sd * math.sqrt(n_reg / (n_reg - 1))
    common = rng.normal(0.0, sd * math.sqrt(spec.shock_common), size=n_reg)
    own = rng.normal(0.0, sd * math.sqrt(1 - spec.shock_common), size=(N, n_reg))
    shocks = common + own
    shocks -= shocks.mean(axis=1, keepdims=True)
    strata, truncated = [], 0
    for i in range(N):
        n = rng.integers(lo, hi + 1, size=K) if hi > lo else np.full(K, lo, dtype=np.int64)
        p = np.tile(base, (K, 1))
        exposed = np.zeros(K, dtype=bool)
        exposed[: int(round(spec.exposure * K))] = True
        exposed = rng.permutation(exposed)
        p[:, :n_reg] += exposed[:, None] * shocks[i]
        if spec.noise_sd > 0:
            e = rng.normal(0.0, spec.noise_sd, size=(K, n_reg))
            p[:, :n_reg] += e - e.mean(axis=1, keepdims=True)
        neg = np.any(p <= 0, axis=1)
        truncated += int(neg.sum())
        p = np.maximum(p, 0.0)
        p /= p.sum(axis=1, keepdims=True)
        if spec.counts == "multinomial":
            votes = rng.multinomial(n, p)[:, :-1]
        else:
            votes = _rounded_counts(p, n)
        ids = tuple(f"{i + 1:03d}-{k + 1:04d}" for k in range(K))
        strata.append(Stratum(f"D{i + 1:03d}", ids, n, votes))
    if truncated > MAX_TRUNCATED_FRACTION * N * K:
        raise FrameError(f"{truncated} of {N * K} stations had shares pushed out of (0, 1); "
                         "reduce shock_sd or noise_sd")
    return ElectionFrame(tuple(strata), J)


# configuration -------------------------------------------------------------

@dataclass(frozen=True)
class StudyConfig:
    """Study design.

    ``delta`` is a number, a per-category list, the string ``"calibrate"``
    (calibrate on the study frame first, with ``calibration_reps`` samples)
    or a path to a calibration JSON file.
    """

    sample_size: int
    frame: str | None = None
    synthetic: SyntheticFrameSpec | None = None
    frame_seed: int = 0
    alpha: float = 0.95
    gamma: float = 0.95
    delta: object = 0.0
    reps: int = 10_000
    calibration_reps: int = 2000
    draws: int = 10_000
    baseline_draws: int = 10_000
    seed: int = 0
    scale: str = "lambda"
    workers: int = 1

    def __post_init__(self):
        if (self.frame is None) == (self.synthetic is None):
            raise ValueError("give exactly one of a frame file or a synthetic frame spec")
        if isinstance(self.synthetic, dict):
            object.__setattr__(self, "synthetic", SyntheticFrameSpec.from_json(self.synthetic))
        for name in ("alpha", "gamma"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.reps < MIN_REPS and self.reps != 1:
            raise ValueError(f"reps must be at least {MIN_REPS} (or 1 for a single replication)")
        if self.calibration_reps < calibration.MIN_REPLICATIONS:
            raise ValueError(f"calibration_reps must be at least {calibration.MIN_REPLICATIONS}")
        if self.draws < MIN_DRAWS or self.baseline_draws < MIN_DRAWS:
            raise ValueError(f"draws and baseline_draws must be at least {MIN_DRAWS}")
        if self.scale not in ("lambda", "theta"):
            raise ValueError(f"scale must be 'lambda' or 'theta', got {self.scale!r}")
        if isinstance(self.delta, (list, tuple)):
            object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_json(cls, data: dict) -> "StudyConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown study config fields: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "StudyConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> dict:
        d = asdict(self)
        if self.synthetic is not None:
            d["synthetic"] = asdict(self.synthetic)
        if isinstance(self.delta, tuple):
            d["delta"] = list(self.delta)
        return d


def load_frame(config: StudyConfig) -> ElectionFrame:
    if config.frame is not None:
        return parse_frame(config.frame)
    return generate_frame(config.synthetic, config.frame_seed)


def resolve_delta(config: StudyConfig, frame: ElectionFrame, alloc: Allocation) -> np.ndarray:
    d = config.delta
    if isinstance(d, str):
        if d == "calibrate":
            res = calibration.calibrate_delta(frame, alloc, config.alpha, config.calibration_reps,
                                              config.seed, workers=config.workers)
            return res.delta
        d = calibration.load_deltas(d)
    d = np.broadcast_to(np.asarray(d, dtype=float), (frame.J,)).copy()
    if np.any((d < 0) | (d > 1)):
        raise ValueError(f"delta must lie in [0, 1], got {d}")
    return d


# replications --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReplicationRecord:
    index: int
    estimates: dict                 # model name -> ModelEstimate
    ratio_leader: int


def run_replication(frame: ElectionFrame, alloc: Allocation, config: StudyConfig, r: int,
                    delta=None) -> ReplicationRecord:
    """One stratified sample through both models."""
    if delta is None:
        delta = resolve_delta(config, frame, alloc)
    key = (config.seed, STUDY, r)
    try:
        sample = draw_sample(frame, alloc, child_seed(key, SAMPLE))
        w = frame.weights
        effective = config.scale == "lambda"
        cop = copula_estimate(sample, w, delta, config.gamma, config.draws, key, effective)
        mn = mn_estimate(sample, w, config.gamma, config.baseline_draws, child_seed(key, BASELINE))
        leader = ratio_leader(sample, frame)
    except Exception as exc:
        raise StudyError(f"replication {r}: {type(exc).__name__}: {exc}") from exc
    return ReplicationRecord(r, {"copula": cop, "baseline": mn}, leader)


# aggregate report ----------------------------------------------------------

REPORT_COLUMNS = ("model", "candidate", "scale", "truth", "point", "lower", "upper", "length",
                  "coverage", "victory", "ratio_victory", "replications", "level", "delta")


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Averages over replications, one row per (model, scale, candidate)."""

    rows: list
    scale: str
    replications: int
    level: float
    meta: dict = field(default_factory=dict)

    def select(self, model: str, scale: str | None = None) -> list[dict]:
        scale = scale or self.scale
        return [r for r in self.rows if r["model"] == model and r["scale"] == scale]

    def column(self, model: str, name: str, scale: str | None = None) -> np.ndarray:
        return np.array([r[name] for r in self.select(model, scale)], dtype=float)

    def to_json(self) -> dict:
        return {"scale": self.scale, "replications": self.replications, "level": self.level,
                "meta": self.meta, "rows": self.rows}

    @classmethod
    def from_json(cls, data: dict) -> "EstimateReport":
        return cls(data["rows"], data["scale"], int(data["replications"]), float(data["level"]),
                   data.get("meta", {}))


def _record_rows(records, truth_theta, truth_lam, delta, level, scales) -> list[dict]:
    R = len(records)
    J = truth_theta.size
    labels = category_labels(J)
    n_reg = J - 3
    lead_freq = np.bincount([rec.ratio_leader for rec in records], minlength=n_reg) / R
    rows = []
    for model in MODELS:
        ests: list[ModelEstimate] = [rec.estimates[model] for rec in records]
        victory = np.mean([e.victory for e in ests], axis=0)
        for scale in scales:
            truth = truth_theta if scale == "theta" else truth_lam
            arr = [e.arrays(scale) for e in ests]
            point = np.mean([a[0] for a in arr], axis=0)
            lower = np.mean([a[1] for a in arr], axis=0)
            upper = np.mean([a[2] for a in arr], axis=0)
            length = np.mean([a[2] - a[1] for a in arr], axis=0)
            cover = np.mean([e.hits(truth, scale) for e in ests], axis=0)
            for j in range(truth.size):
                rows.append({
                    "model": model, "candidate": labels[j], "scale": scale,
                    "truth": float(truth[j]), "point": float(point[j]),
                    "lower": float(lower[j]), "upper": float(upper[j]), "length": float(length[j]),
                    "coverage": float(cover[j]),
                    "victory": float(victory[j]) if j < n_reg else None,
                    "ratio_victory": float(lead_freq[j]) if j < n_reg else None,
                    "replications": R, "level": level,
                    "delta": float(delta[j]) if model == "copula" else None,
                })
    return rows


def aggregate(records, frame: ElectionFrame, delta, config: StudyConfig) -> EstimateReport:
    theta, lam = official_totals(frame)
    scales = ("theta", "lambda") if config.scale == "lambda" else ("theta",)
    rows = _record_rows(records, theta, lam, np.asarray(delta), config.gamma, scales)
    meta = {"seed": config.seed, "sample_size": config.sample_size, "draws": config.draws,
            "baseline_draws": config.baseline_draws, "alpha": config.alpha,
            "delta": [float(d) for d in delta]}
    return EstimateReport(rows, config.scale, len(records), config.gamma, meta)


@dataclass(frozen=True, eq=False)
class StudyResult:
    report: EstimateReport
    records: list
    delta: np.ndarray
    frame: ElectionFrame
    allocation: Allocation

    def hits(self, model: str, scale: str) -> np.ndarray:
        """(R, categories) boolean hit matrix."""
        theta, lam = official_totals(self.frame)
        truth = theta if scale == "theta" else lam
        return np.array([rec.estimates[model].hits(truth, scale) for rec in self.records])


def run_study(config: StudyConfig, frame: ElectionFrame | None = None) -> StudyResult:
    """Run the study and keep per-replication records."""
    frame = frame if frame is not None else load_frame(config)
    if not frame.has_votes:
        raise StudyError("the study frame must carry official counts")
    alloc = allocate_proportional(frame, config.sample_size)
    delta = resolve_delta(config, frame, alloc)
    fn = partial(run_replication, frame, alloc, config, delta=delta)
    records = replicate_map(fn, range(config.reps), config.workers)
    return StudyResult(aggregate(records, frame, delta, config), records, delta, frame, alloc)


def simulation_study(config: StudyConfig, frame: ElectionFrame | None = None) -> EstimateReport:
    """Aggregate report of ``config.reps`` replications (deterministic in ``config.seed``)."""
    return run_study(config, frame).report


# rendering -----------------------------------------------------------------

def _fmt(v):
    return "" if v is None else repr(v)


def report_csv(report: EstimateReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in report.rows:
        w.writerow([_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in REPORT_COLUMNS])
    return buf.getvalue()


def read_report_csv(text: str, meta: dict | None = None) -> EstimateReport:
    """Parse :func:`report_csv` output back into a report."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for c in REPORT_COLUMNS:
            v = rec[c]
            if c in ("model", "candidate", "scale"):
                row[c] = v
            elif c == "replications":
                row[c] = int(v)
            else:
                row[c] = None if v == "" else float(v)
        rows.append(row)
    if not rows:
        raise ValueError("empty report CSV")
    scales = {r["scale"] for r in rows}
    scale = "lambda" if "lambda" in scales else "theta"
    return EstimateReport(rows, scale, rows[0]["replications"], rows[0]["level"], meta or {})


def _pct(v) -> str:
    return "" if v is None else f"{100 * v:.2f}"


def report_markdown(report: EstimateReport, scale: str | None = None) -> str:
    scale = scale or report.scale
    head = ("| Candidate | Model | Truth | Point | Interval | Length | Coverage | Victory | Ratio victory |\n"
            "|---|---|---:|---:|---|---:|---:|---:|---:|\n")
    lines = []
    labels = list(dict.fromkeys(r["candidate"] for r in report.rows if r["scale"] == scale))
    for cand in labels:
        for model in MODELS:
            for r in report.rows:
                if r["candidate"] == cand and r["model"] == model and r["scale"] == scale:
                    lines.append(
                        f"| {cand} | {model} | {_pct(r['truth'])} | {_pct(r['point'])} | "
                        f"[{_pct(r['lower'])}, {_pct(r['upper'])}] | {_pct(r['length'])} | "
                        f"{_pct(r['coverage'])} | {_pct(r['victory'])} | {_pct(r['ratio_victory'])} |")
    title = (f"Shares in percent of {'effective votes' if scale == 'lambda' else 'potential voters'}; "
             f"{report.replications} replications, {100 * report.level:g}% intervals.\n\n")
    return title + head + "\n".join(lines) + "\n"


def render_report(report: EstimateReport, fmt: str, path=None) -> str:
    """Render as ``json``, ``csv`` or ``md``; write to ``path`` when given."""
    if fmt == "json":
        text = json.dumps(report.to_json(), indent=2) + "\n"
    elif fmt == "csv":
        text = report_csv(report)
    elif fmt == "md":
        text = report_markdown(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise StudyError(f"cannot write report to {path}: {exc}") from exc
    return text


def with_overrides(config: StudyConfig, **kw) -> StudyConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
