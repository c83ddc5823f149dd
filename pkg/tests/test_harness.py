import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dqgrad.configfile import ConfigError, load_experiments, parse_rates
from dqgrad.harness import (
    CSV_HEADER,
    ExperimentConfig,
    InsufficientDataError,
    RunRecord,
    emit_csv,
    emit_svg,
    estimate_contraction,
    estimate_contraction_raw,
    run_sweep,
)


def record_from(dists, floor=1e-13):
    rec = RunRecord(algo="x", R=1, floor=floor)
    rec.distances = list(dists)
    return rec


def test_estimator_exact_geometric():
    rec = record_from([0.5**t for t in range(40)])
    assert estimate_contraction(rec) == pytest.approx(0.5, abs=1e-12)
    assert estimate_contraction_raw(rec) == pytest.approx(0.5, abs=1e-12)
    assert rec.estimate() == estimate_contraction(rec)
    assert rec.estimate_raw() == estimate_contraction_raw(rec)


def test_estimator_clips_nonconvergent():
    rec = record_from([1.0] * 40)
    assert estimate_contraction(rec) == 1.0
    assert estimate_contraction(rec, clip=False) == pytest.approx(1.0)
    rec2 = record_from([1.01**t for t in range(40)])
    assert estimate_contraction(rec2) == 1.0
    assert estimate_contraction(rec2, clip=False) > 1.0


def test_estimator_requires_enough_points():
    with pytest.raises(InsufficientDataError):
        estimate_contraction(record_from([1.0, 0.5, 0.25]))
    # points at or below the floor do not count
    with pytest.raises(InsufficientDataError):
        estimate_contraction(record_from([1e-20] * 50))


def test_estimator_tail_suppresses_transient():
    # constant prefactor decays out of the tail-half window
    dists = [5.0 * 0.7**t if t > 0 else 1.0 for t in range(60)]
    assert estimate_contraction(record_from(dists)) == pytest.approx(0.7, rel=1e-9)


SMALL = ExperimentConfig(
    name="small",
    algos=("gd", "dq-gd", "nq-gd"),
    problem={"kind": "gaussian", "m": 16, "n": 8, "kappa": 4.0},
    rates=(2, 4, 6),
    trials=3,
    seed=5,
    t_max=2000,
)


def test_sweep_deterministic_and_csv_byte_identical(tmp_path):
    rows1 = run_sweep(SMALL)
    rows2 = run_sweep(SMALL)
    assert rows1 == rows2
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(rows1, p1)
    emit_csv(rows2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_sweep_unquantized_constant_across_rates():
    rows = run_sweep(SMALL)
    gd_rows = [r for r in rows if r.algo == "gd"]
    assert len(gd_rows) == 3
    assert len({r.emp_mean for r in gd_rows}) == 1


def test_sweep_quantized_monotone_in_rate():
    rows = run_sweep(SMALL)
    for algo in ("dq-gd", "nq-gd"):
        means = [r.emp_mean for r in rows if r.algo == algo]
        for a, b in zip(means, means[1:]):
            assert b <= a + 0.01


def test_sweep_parallel_jobs_match_serial():
    rows1 = run_sweep(SMALL)
    rows2 = run_sweep(
        ExperimentConfig(**{**SMALL.__dict__, "jobs": 2})
    )
    assert rows1 == rows2


def test_csv_roundtrip_full_precision(tmp_path):
    rows = run_sweep(SMALL)
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(rows)
    for line, row in zip(lines[1:], rows):
        cells = line.split(",")
        assert cells[0] == row.algo
        assert int(cells[1]) == row.R
        for got, want in zip(cells[2:], (row.emp_mean, row.emp_p05, row.emp_p95,
                                         row.bound, row.unquantized_sigma,
                                         row.converse)):
            assert float(got) == want  # 17 significant digits round-trip


def test_csv_single_row(tmp_path):
    rows = run_sweep(ExperimentConfig(**{**SMALL.__dict__,
                                         "algos": ("dq-gd",), "rates": (4,)}))
    path = tmp_path / "one.csv"
    emit_csv(rows, path)
    assert len(path.read_text().strip().split("\n")) == 2


def test_empty_table_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "no.csv")


def test_svg_is_wellformed_xml(tmp_path):
    rows = run_sweep(SMALL)
    path = tmp_path / "plot.svg"
    emit_svg(rows, path, title="small")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    assert len(polylines) >= len(SMALL.algos)
    for el in polylines:
        for pair in el.attrib["points"].split():
            x, y = pair.split(",")
            float(x), float(y)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(rates=(0, 1))
    with pytest.raises(ValueError):
        ExperimentConfig(allocation="greedy")


def test_parse_rates_forms():
    assert parse_rates("3-6") == (3, 4, 5, 6)
    assert parse_rates("1,2,8") == (1, 2, 8)
    assert parse_rates("4") == (4,)


def test_config_file_loading(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[DEFAULT]\ntrials = 2\nseed = 3\n\n"
        "[quick]\nproblem = gaussian\nm = 16\nn = 8\nkappa = 4\n"
        "algos = gd, dq-gd\nrates = 2-4\ncsv = out.csv\n"
    )
    (configs,) = [load_experiments(str(cfg))[0]],
    config = configs[0]
    assert config.name == "quick"
    assert config.trials == 2
    assert config.rates == (2, 3, 4)
    assert config.algos == ("gd", "dq-gd")
    assert config.csv.endswith("out.csv")
    rows = run_sweep(config)
    assert {r.algo for r in rows} == {"gd", "dq-gd"}


def test_accelerated_schedule_rejects_condition_number_one():
    from dqgrad.harness import dq_schedule
    from dqgrad.problems import make_gaussian_ls

    _, obj = make_gaussian_ls(8, 4, 1.0, 0)
    with pytest.raises(ValueError, match="condition number 1"):
        dq_schedule("dq-agd", obj, R=4)
    # first-order and heavy-ball schedules degenerate gracefully instead
    dq_schedule("dq-gd", obj, R=4)
    dq_schedule("dq-hb", obj, R=4)


def test_emitters_create_parent_directories(tmp_path):
    rows = run_sweep(ExperimentConfig(**{**SMALL.__dict__,
                                         "algos": ("dq-gd",), "rates": (4,)}))
    nested = tmp_path / "a" / "b" / "out.csv"
    emit_csv(rows, nested)
    assert nested.exists()
    nested_svg = tmp_path / "c" / "plot.svg"
    emit_svg(rows, nested_svg)
    assert nested_svg.exists()


def test_trial_errors_carry_their_index():
    from dqgrad.harness import TrialError

    bad = ExperimentConfig(**{**SMALL.__dict__, "algos": ("dq-gd", "agd"),
                              "workers": 2,
                              "problem": {"kind": "interpolation", "n": 4,
                                          "m": 8, "kappas": [2.0, 2.0]}})
    with pytest.raises(TrialError, match="trial 0"):
        run_sweep(bad)


def test_config_missing_file():
    with pytest.raises(ConfigError):
        load_experiments("/nonexistent/sweep.ini")


def test_config_missing_section(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[only]\nproblem = gaussian\nm = 4\nn = 2\nkappa = 2\n")
    with pytest.raises(ConfigError):
        load_experiments(str(cfg), section="other")


def test_multiworker_sweep_with_waterfilling():
    config = ExperimentConfig(
        name="interp",
        algos=("nq-gd",),
        problem={"kind": "interpolation", "n": 6, "m": 12, "kappas": [4.0, 2.0]},
        rates=(2, 4),
        trials=2,
        seed=8,
        workers=2,
        allocation="waterfilling",
        t_max=1500,
    )
    rows = run_sweep(config)
    assert len(rows) == 2
    # the bound column reflects the per-worker allocation, not the sum rate
    for r in rows:
        assert r.bound > r.unquantized_sigma
        assert 0 < r.emp_mean <= 1


def test_multiworker_uniform_split():
    config = ExperimentConfig(
        name="interp-uniform",
        algos=("nq-gd",),
        problem={"kind": "interpolation", "n": 6, "m": 12, "kappas": [3.0, 3.0]},
        rates=(4,),
        trials=2,
        seed=4,
        workers=2,
        allocation="uniform",
        t_max=1500,
    )
    (row,) = run_sweep(config)
    assert 0 < row.emp_mean <= 1
    # the per-dimension sum rate must split evenly
    from dqgrad.harness import TrialError

    bad = ExperimentConfig(**{**config.__dict__, "rates": (3,)})
    with pytest.raises(TrialError, match="workers"):
        run_sweep(bad)


def test_config_file_interpolation_section(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[multi]\nproblem = interpolation\nn = 6\nm = 12\nkappas = 4, 2\n"
        "workers = 2\nallocation = waterfilling\nalgos = nq-gd\n"
        "rates = 2,4\ntrials = 2\nseed = 2\n"
    )
    (config,) = load_experiments(str(cfg))
    assert config.problem["kappas"] == [4.0, 2.0]
    assert config.workers == 2
    rows = run_sweep(config)
    assert len(rows) == 2


def test_mtx_config_runs(tmp_path):
    mtx = tmp_path / "tiny.mtx"
    mtx.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "6 3 8\n"
        "1 1 2.0\n2 2 1.5\n3 3 1.0\n4 1 0.5\n4 2 0.25\n5 3 0.5\n6 1 0.1\n6 3 0.2\n"
    )
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        f"[mtx]\nproblem = mtx\npath = {mtx.name}\nalgos = dq-gd\n"
        "rates = 3,5\ntrials = 2\nseed = 1\n"
    )
    (config,) = load_experiments(str(cfg))
    rows = run_sweep(config)
    assert len(rows) == 2
    assert all(0 < r.emp_mean <= 1 for r in rows)
