import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from quickcount.estimates import ModelEstimate
from quickcount.frame import FrameError, official_totals
from quickcount.harness import (EstimateReport, StudyConfig, StudyError, SyntheticFrameSpec,
                                _record_rows, generate_frame, read_report_csv, render_report,
                                report_csv, report_markdown, run_replication, run_study,
                                simulation_study, with_overrides)
from quickcount.sampling import allocate_proportional, census_allocation

GOLDEN = Path(__file__).parent / "data" / "golden_micro_study.json"

MICRO = SyntheticFrameSpec(n_strata=4, stations_per_stratum=20, voters=(400, 800), shock_sd=0.03,
                           exposure=0.5, counts="multinomial")


def micro_config(**kw):
    base = StudyConfig(sample_size=16, synthetic=MICRO, frame_seed=1, delta=0.25, reps=100,
                       draws=1000, baseline_draws=1000, seed=3)
    return replace(base, **kw)


@pytest.fixture(scope="module")
def micro_study():
    return run_study(micro_config())


def test_generator_flat():
    spec = SyntheticFrameSpec(n_strata=3, stations_per_stratum=10)
    frame = generate_frame(spec, 0)
    for s in frame.strata:
        shares = s.counts / s.potential_voters[:, None]
        assert np.allclose(shares, np.array(spec.base_shares), atol=2 / 750)


def test_generator_shock_structure():
    spec = SyntheticFrameSpec(n_strata=5, stations_per_stratum=10, shock_sd=0.05)
    frame = generate_frame(spec, 1)
    means = []
    for s in frame.strata:
        shares = s.counts / s.potential_voters[:, None]
        assert np.ptp(shares, axis=0).max() <= 2 / 750      # identical up to rounding
        means.append(shares[0])
    assert np.ptp(np.array(means)[:, 0]) > 0.01
    theta, lam = official_totals(frame)
    assert theta.sum() == pytest.approx(1.0) and lam.sum() == pytest.approx(1.0)


def test_generator_inter_stratum_correlation():
    spec = SyntheticFrameSpec(n_strata=2, stations_per_stratum=5, shock_sd=0.03)
    pairs = []
    for seed in range(500):
        s1, s2 = generate_frame(spec, seed).strata
        pairs.append((s1.counts[:, 0].sum() / s1.potential_voters.sum(), s2.counts[:, 0].sum() / s2.potential_voters.sum()))
    assert np.corrcoef(np.array(pairs).T)[0, 1] > 0.2


def test_generator_rejects_wild_shocks():
    with pytest.raises(FrameError):
        generate_frame(SyntheticFrameSpec(shock_sd=0.5, n_strata=5, stations_per_stratum=10), 0)


def test_generator_deterministic_and_ids():
    a = generate_frame(MICRO, 5)
    b = generate_frame(MICRO, 5)
    assert all(np.array_equal(x.counts, y.counts) for x, y in zip(a.strata, b.strata))
    assert a.strata[0].id == "D001" and a.strata[0].station_ids[0] == "001-0001"


def test_config_validation_and_json(tmp_path):
    cfg = micro_config(delta=(0.1, 0.2, 0.3, 0.0, 0.0, 0.5))
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_json()))
    assert StudyConfig.load(p) == cfg
    for bad in (dict(reps=50), dict(draws=10), dict(alpha=1.0), dict(scale="x")):
        with pytest.raises(ValueError):
            micro_config(**bad)
    with pytest.raises(ValueError):
        StudyConfig(sample_size=10)
    with pytest.raises(ValueError):
        StudyConfig.from_json({"sample_size": 10, "frame": "x.csv", "bogus": 1})


def test_census_replication_hits_everything():
    frame = generate_frame(MICRO, 1)
    cfg = micro_config()
    rec = run_replication(frame, census_allocation(frame), cfg, 0)
    _, lam = official_totals(frame)
    for est in rec.estimates.values():
        assert est.hits(lam, "lambda").all()


def test_replication_deterministic():
    frame = generate_frame(MICRO, 1)
    alloc = allocate_proportional(frame, 16)
    a = run_replication(frame, alloc, micro_config(), 7)
    b = run_replication(frame, alloc, micro_config(), 7)
    for m in ("copula", "baseline"):
        assert json.dumps(a.estimates[m].to_json(list("abcdef"))) == \
            json.dumps(b.estimates[m].to_json(list("abcdef")))


def test_replication_error_names_index():
    frame = generate_frame(MICRO, 1)
    alloc = allocate_proportional(frame, 16)
    with pytest.raises(StudyError, match="replication 4"):
        run_replication(frame, alloc, micro_config(), 4, delta=np.full(5, 0.1))


def test_miss_accounting():
    frame = generate_frame(MICRO, 1)
    theta, lam = official_totals(frame)
    J = frame.J
    far = ModelEstimate("copula", 0.95, theta, np.full(J, 0.999), np.ones(J), lam,
                        np.full(J - 1, 0.999), np.ones(J - 1), np.full(3, 1 / 3))
    from quickcount.harness import ReplicationRecord
    recs = [ReplicationRecord(i, {"copula": far, "baseline": far}, 0) for i in range(5)]
    rows = _record_rows(recs, theta, lam, np.zeros(J), 0.95, ("theta", "lambda"))
    assert all(r["coverage"] == 0.0 for r in rows)


def test_single_replication_identity():
    frame = generate_frame(MICRO, 1)
    cfg = micro_config(reps=1)
    res = run_study(cfg, frame)
    rec = run_replication(frame, res.allocation, cfg, 0, res.delta)
    for model in ("copula", "baseline"):
        point, lo, hi = rec.estimates[model].arrays("lambda")
        assert np.array_equal(res.report.column(model, "point"), point)
        assert np.array_equal(res.report.column(model, "lower"), lo)
        assert np.array_equal(res.report.column(model, "upper"), hi)


def test_workers_do_not_change_report(micro_study):
    par = simulation_study(micro_config(workers=2))
    assert json.dumps(par.to_json()) == json.dumps(micro_study.report.to_json())


def test_report_invariants(micro_study):
    rep = micro_study.report
    for model in ("copula", "baseline"):
        for scale in ("theta", "lambda"):
            cov = rep.column(model, "coverage", scale)
            assert np.all((cov >= 0) & (cov <= 1))
        vic = rep.column(model, "victory")[:3]
        assert vic.sum() <= 1.0 + 0.05
    hits = micro_study.hits("copula", "lambda")
    assert np.array_equal(hits.mean(axis=0), rep.column("copula", "coverage", "lambda"))


def test_victory_ordering_agrees(micro_study):
    rep = micro_study.report
    ratio = rep.column("copula", "ratio_victory")[:3]
    for model in ("copula", "baseline"):
        vic = rep.column(model, "victory")[:3]
        assert np.argmax(vic) == np.argmax(ratio)


def test_csv_json_round_trip(micro_study, tmp_path):
    rep = micro_study.report
    back = read_report_csv(report_csv(rep), rep.meta)
    for a, b in zip(rep.rows, back.rows):
        for k, v in a.items():
            if isinstance(v, float):
                assert b[k] == pytest.approx(v, abs=1e-9)
            else:
                assert b[k] == v
    doc = json.loads(render_report(rep, "json", tmp_path / "r.json"))
    assert EstimateReport.from_json(doc).rows == rep.rows
    with pytest.raises(StudyError):
        render_report(rep, "json", tmp_path / "missing" / "r.json")


def test_markdown_shape(micro_study):
    rep = micro_study.report
    md = report_markdown(rep)
    table = [l for l in md.splitlines() if l.startswith("| ") and not l.startswith("| Candidate")]
    assert len(table) == 2 * (micro_study.frame.J - 1)
    assert all(l.count("|") == 10 for l in table)
    assert "%" not in table[0] and "." in table[0]


def test_golden_micro_study(micro_study):
    doc = micro_study.report.to_json()
    if not GOLDEN.exists():          # first run pins the artifact
        GOLDEN.write_text(json.dumps(doc, indent=2) + "\n")
    want = json.loads(GOLDEN.read_text())
    assert want["replications"] == doc["replications"]
    for a, b in zip(want["rows"], doc["rows"]):
        for k, v in a.items():
            if isinstance(v, float):
                assert b[k] == pytest.approx(v, rel=1e-9, abs=1e-12), (a["model"], a["candidate"], k)
            else:
                assert b[k] == v


def test_calibrated_delta_config():
    cfg = micro_config(delta="calibrate", calibration_reps=100, reps=1)
    res = run_study(cfg)
    assert res.delta.shape == (MICRO.J,) and np.all((res.delta >= 0) & (res.delta <= 1))


def test_overrides_skip_none():
    cfg = with_overrides(micro_config(), reps=None, seed=9)
    assert cfg.reps == 100 and cfg.seed == 9
