"""Command-line interface.

Subcommands::

    quickcount ingest    --frame F                      official totals
    quickcount estimate  --frame F --sample-size C      one sample, both models
    quickcount calibrate --frame F --sample-size C      per-category delta
    quickcount simulate  --config S | --frame F ...     coverage study
    quickcount compare   --report R                     side-by-side model table

All randomness comes from ``--seed``. Failures print one JSON object on
stderr and exit with status 1 (2 for usage errors).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import calibration, harness
from .baseline import mn_estimate
from .estimates import copula_estimate
from .frame import category_labels, parse_frame, totals_json
from .rng import BASELINE
from .sampling import allocate_proportional, draw_sample, ratio_estimates, read_samples


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _delta_arg(text: str):
    parts = [float(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _level(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quickcount", description="Stratified quick-count estimation and coverage studies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, frame_required=True):
        sp.add_argument("--frame", required=frame_required, help="frame CSV file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("ingest", help="validate a frame and print official totals")
    sp.add_argument("--frame", required=True)
    sp.add_argument("--out")

    sp = sub.add_parser("estimate", help="estimate from one stratified sample with both models")
    common(sp)
    sp.add_argument("--sample-size", type=_positive)
    sp.add_argument("--sample", help="sample CSV (replicate column first); default draws one")
    sp.add_argument("--gamma", type=_level, default=0.95)
    sp.add_argument("--delta", type=_delta_arg, default=0.0)
    sp.add_argument("--delta-from", help="calibration JSON providing delta")
    sp.add_argument("--draws", type=_positive, default=10_000)
    sp.add_argument("--format", choices=("json", "md"), default="json")

    sp = sub.add_parser("calibrate", help="choose delta per category by simulation")
    common(sp)
    sp.add_argument("--sample-size", type=_positive, required=True)
    sp.add_argument("--alpha", type=_level, default=0.95)
    sp.add_argument("--reps", type=_positive, default=10_000)
    sp.add_argument("--tolerance", type=float, default=calibration.DEFAULT_TOLERANCE)
    sp.add_argument("--scale", choices=("theta", "lambda"), default="theta")
    sp.add_argument("--draws", type=_positive, default=2000, help="copula draws (lambda scale)")
    sp.add_argument("--workers", type=_positive, default=1)
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("simulate", help="run a coverage study")
    common(sp, frame_required=False)
    sp.add_argument("--config", help="study config JSON")
    sp.add_argument("--sample-size", type=_positive)
    sp.add_argument("--alpha", type=_level)
    sp.add_argument("--gamma", type=_level)
    sp.add_argument("--delta", type=_delta_arg)
    sp.add_argument("--delta-from", help="calibration JSON providing delta")
    sp.add_argument("--reps", type=_positive)
    sp.add_argument("--draws", type=_positive)
    sp.add_argument("--baseline-draws", type=_positive)
    sp.add_argument("--scale", choices=("theta", "lambda"))
    sp.add_argument("--workers", type=_positive)
    sp.add_argument("--format", choices=("json", "csv", "md"), default="json")

    sp = sub.add_parser("compare", help="side-by-side model table from a study report")
    sp.add_argument("--report", required=True, help="report JSON written by simulate")
    sp.add_argument("--scale", choices=("theta", "lambda"))
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("md", "csv"), default="md")
    return p


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> None:
    frame = parse_frame(args.frame)
    doc = {"strata": frame.N, "stations": frame.K, "potential_voters": frame.n,
           "categories": frame.J, "totals": totals_json(frame)}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)


def cmd_estimate(args) -> None:
    frame = parse_frame(args.frame)
    if args.sample:
        sample = read_samples(args.sample, frame)[0]
    else:
        if args.sample_size is None:
            raise UsageError("estimate needs --sample-size or --sample")
        sample = draw_sample(frame, allocate_proportional(frame, args.sample_size), (args.seed, 0))
    delta = calibration.load_deltas(args.delta_from) if args.delta_from else args.delta
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (frame.J,))
    w = frame.weights
    cop = copula_estimate(sample, w, delta, args.gamma, args.draws, (args.seed,))
    mn = mn_estimate(sample, w, args.gamma, args.draws, (args.seed, BASELINE))
    labels = category_labels(frame.J)
    ratio = ratio_estimates(sample, frame)
    if args.format == "json":
        doc = {"sample_size": sample.allocation.total, "seed": args.seed,
               "ratio_estimate": {labels[j]: float(ratio[j]) for j in range(frame.J)},
               "models": [cop.to_json(labels), mn.to_json(labels)]}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return
    lines = ["| Candidate | Model | Share (%) | Interval (%) | Effective share (%) | Interval (%) | Victory (%) |",
             "|---|---|---:|---|---:|---|---:|"]
    for j in range(frame.J):
        for e in (cop, mn):
            lam = (f"{100 * e.lam_point[j]:.2f} | [{100 * e.lam_lower[j]:.2f}, {100 * e.lam_upper[j]:.2f}]"
                   if j < frame.J - 1 else " | ")
            vic = f"{100 * e.victory[j]:.2f}" if j < e.victory.size else ""
            lines.append(f"| {labels[j]} | {e.model} | {100 * e.theta_point[j]:.2f} | "
                         f"[{100 * e.theta_lower[j]:.2f}, {100 * e.theta_upper[j]:.2f}] | {lam} | {vic} |")
    _emit("\n".join(lines) + "\n", args.out)


def cmd_calibrate(args) -> None:
    frame = parse_frame(args.frame)
    alloc = allocate_proportional(frame, args.sample_size)
    res = calibration.calibrate_delta(frame, alloc, args.alpha, args.reps, args.seed,
                                      tolerance=args.tolerance, workers=args.workers,
                                      scale=args.scale, m=args.draws)
    if args.format == "json":
        _emit(json.dumps(res.to_json(), indent=2) + "\n", args.out)
    else:
        _emit(res.csv_text(), args.out)


def _study_config(args) -> harness.StudyConfig:
    if args.config:
        cfg = harness.StudyConfig.load(args.config)
        if args.frame:
            cfg = harness.with_overrides(cfg, frame=args.frame, synthetic=None)
    else:
        if not args.frame or args.sample_size is None:
            raise UsageError("simulate needs --config, or --frame with --sample-size")
        cfg = harness.StudyConfig(sample_size=args.sample_size, frame=args.frame)
    delta = args.delta
    if args.delta_from:
        if args.delta is not None:
            raise UsageError("give --delta or --delta-from, not both")
        delta = str(args.delta_from)
    return harness.with_overrides(
        cfg, sample_size=args.sample_size, alpha=args.alpha, gamma=args.gamma, delta=delta,
        reps=args.reps, draws=args.draws, baseline_draws=args.baseline_draws, scale=args.scale,
        workers=args.workers, seed=args.seed if args.seed_given else None)


def cmd_simulate(args) -> None:
    cfg = _study_config(args)
    report = harness.simulation_study(cfg)
    _emit(harness.render_report(report, args.format), args.out)


def compare_table(report: harness.EstimateReport, scale: str, fmt: str) -> str:
    cop = report.select("copula", scale)
    mn = report.select("baseline", scale)
    if fmt == "csv":
        head = ["candidate", "truth", "copula_point", "copula_lower", "copula_upper", "copula_coverage",
                "baseline_point", "baseline_lower", "baseline_upper", "baseline_coverage"]
        rows = [",".join(head)]
        for c, b in zip(cop, mn):
            rows.append(",".join([c["candidate"]] + [repr(v) for v in (
                c["truth"], c["point"], c["lower"], c["upper"], c["coverage"],
                b["point"], b["lower"], b["upper"], b["coverage"])]))
        return "\n".join(rows) + "\n"
    pct = lambda v: f"{100 * v:.2f}"
    lines = ["| Candidate | Truth | Copula interval | Copula coverage | Baseline interval | Baseline coverage |",
             "|---|---:|---|---:|---|---:|"]
    for c, b in zip(cop, mn):
        lines.append(f"| {c['candidate']} | {pct(c['truth'])} | [{pct(c['lower'])}, {pct(c['upper'])}] | "
                     f"{pct(c['coverage'])} | [{pct(b['lower'])}, {pct(b['upper'])}] | {pct(b['coverage'])} |")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> None:
    data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    report = harness.EstimateReport.from_json(data)
    _emit(compare_table(report, args.scale or report.scale, args.format), args.out)


COMMANDS = {"ingest": cmd_ingest, "estimate": cmd_estimate, "calibrate": cmd_calibrate,
            "simulate": cmd_simulate, "compare": cmd_compare}


def _fail(kind: str, exc: BaseException, status: int) -> int:
    module = type(exc).__module__
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if module.startswith("quickcount"):
        doc["module"] = module
    sys.stderr.write(json.dumps(doc) + "\n")
    return status


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.seed_given = "--seed" in argv or any(a.startswith("--seed=") for a in argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    except (OSError, ValueError, ArithmeticError, RuntimeError, KeyError) as exc:
        return _fail("failure", exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
