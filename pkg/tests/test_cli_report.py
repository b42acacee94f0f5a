import json
import logging
from pathlib import Path

import pytest

from rigidity_lab import cli_report
from rigidity_lab.cli_report import (
    PLUMBING, SUITES, ConfigError, Series, VerificationReport, atomic_write, emit_plots, load_config, main,
    run_suite, series_csv, series_svg,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text):
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return p


# ------------------------------------------------------------------ configuration


def test_defaults_and_overrides(tmp_path):
    cfg = load_config("clifford-check", write(tmp_path, "seed = 3\n[clifford-check]\ndims = [2, 3]\n"),
                      out=str(tmp_path / "o"), jobs=1)
    assert cfg.params["dims"] == [2, 3]
    assert cfg.params["trials"] == SUITES["clifford-check"]["params"]["trials"]
    assert cfg.seed == 3
    assert load_config("clifford-check", None, seed=9).seed == 9


@pytest.mark.parametrize("text, message", [
    ("seed = 1\nbogus = 2\n", "unknown top-level"),
    ("seed = 1\n[clifford-check]\nnope = 1\n", "unknown parameter"),
    ("seed = 1\n[clifford-check]\ntrials = 'many'\n", "wrong type"),
    ("seed = 1\n[clifford-check]\ndims = [2.5]\n", "wrong type"),
    ("seed = 1\n[tolerances]\nalgebra = 'tight'\n", "must be a number"),
    ("seed = 1\n[tolerances]\nloose = 1.0\n", "unknown tolerance"),
    ("seed = -1\n", "unsigned"),
    ("seed = 1\njobs = 0\n", "positive"),
    ("suite = 'warped'\nseed = 1\n", "not 'clifford-check'"),
    ("[warped]\nfd_step = 1e-3\nseed = 1\n", "unknown top-level"),
    ("seed = 1\n[clifford-check\n", "cannot read"),
])
def test_strict_parsing(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        load_config("clifford-check", write(tmp_path, text))


@pytest.mark.parametrize("suite", sorted(s for s, v in SUITES.items() if v["monte_carlo"]))
def test_seed_is_mandatory_for_random_suites(suite):
    with pytest.raises(ConfigError, match="needs a seed"):
        load_config(suite, None)


@pytest.mark.parametrize("suite", sorted(s for s, v in SUITES.items() if not v["monte_carlo"]))
def test_deterministic_suites_need_no_seed(suite):
    assert load_config(suite, None).seed is None


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.toml")):
        cfg = load_config(path.stem, path)
        assert cfg.suite == path.stem


# ------------------------------------------------------------------ exit codes


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["no-such-suite"]) == 2
    assert main(["tracenorm", "--out", str(tmp_path)]) == 2
    assert "needs a seed" in capsys.readouterr().err


def test_passing_suite_exits_zero(tmp_path):
    assert main(["clifford-check", "--seed", "1", "--out", str(tmp_path), "--jobs", "1"]) == 0
    body = json.loads((tmp_path / "report.json").read_text())
    assert body["passed"] and len(body["checks"]) == 5
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert set(meta["check_seconds"]) == {c["check_id"] for c in body["checks"]}


def test_failing_check_exits_one(tmp_path, capsys):
    cfg = write(tmp_path, "seed = 1\n[tolerances]\nalgebra = 1e-30\n[clifford-check]\ndims = [3]\n")
    assert main(["clifford-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "--jobs", "1"]) == 1
    out = capsys.readouterr().out
    assert "FAIL clifford.relations.n3" in out and "measured" in out


def test_crashing_check_is_reported_as_failure(tmp_path, monkeypatch):
    def boom(p, tol, rng, n):
        raise RuntimeError("exploded")

    monkeypatch.setattr(cli_report, "check_clifford", boom)
    reports = run_suite(load_config("clifford-check", None, seed=1, out=str(tmp_path), jobs=1))
    assert not any(r.passed for r in reports)
    assert reports[0].diagnostics == "RuntimeError: exploded"


# ------------------------------------------------------------------ report contents


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_every_check_has_an_anchor(suite):
    params = SUITES[suite]["params"]
    for spec in SUITES[suite]["checks"](params):
        assert spec.anchor and (spec.anchor == PLUMBING or len(spec.anchor) > 5)
        assert not any(ch.isdigit() for ch in spec.anchor)


def test_reports_sorted_and_digests_stable(tmp_path):
    cfg = load_config("tracenorm", None, seed=5, out=str(tmp_path), jobs=1)
    cfg = cfg.__class__(**{**cfg.__dict__, "params": {**cfg.params, "draws": 50, "mc_samples": 2000}})
    a, b = run_suite(cfg), run_suite(cfg)
    ids = [r.check_id for r in a]
    assert ids == sorted(ids)
    assert [r.inputs_digest for r in a] == [r.inputs_digest for r in b]
    assert [r.to_json() for r in a] == [r.to_json() for r in b]


@pytest.mark.parametrize("suite, seed", [("tracenorm", 11), ("warped", None)])
def test_byte_identical_reports_across_job_counts(tmp_path, suite, seed):
    outs = []
    for k, jobs in enumerate((1, 3)):
        out = tmp_path / f"run{k}"
        args = [suite, "--out", str(out), "--jobs", str(jobs)] + ([] if seed is None else ["--seed", str(seed)])
        assert main(args) == 0
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file() and p.name != "meta.json")
    assert files
    for rel in files:
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


def test_different_seeds_change_random_measurements(tmp_path):
    runs = []
    for seed in (1, 2):
        main(["clifford-check", "--seed", str(seed), "--out", str(tmp_path / str(seed)), "--jobs", "1"])
        runs.append((tmp_path / str(seed) / "report.json").read_text())
    assert runs[0] != runs[1]


# ------------------------------------------------------------------ artifacts


def _report(series):
    return VerificationReport("s", "s.check", "anchor text", "0", {}, {}, True, 0.0, "", series)


def test_csv_has_order_estimates():
    s = Series("res", [0.1, 0.05], [1e-2, 2.5e-3], "h", "residual", True, True)
    lines = series_csv(s, "s.check").splitlines()
    assert lines[0] == "check,h,residual,order-estimate"
    assert lines[1].endswith(",")
    assert float(lines[2].split(",")[-1]) == pytest.approx(2.0)


def test_svg_is_log_log_polyline():
    s = Series("res", [0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4], "h", "residual", True, True)
    svg = series_svg(s, "s.check (anchor text)")
    assert svg.startswith("<svg") and "<polyline" in svg and "log10 h" in svg and "s.check (anchor text)" in svg


def test_empty_series_skipped_with_warning(tmp_path, caplog):
    with caplog.at_level(logging.WARNING, logger="rigidity_lab"):
        written = emit_plots([_report([Series("empty", [], [], "x", "y"), Series("ok", [1.0, 2.0], [3.0, 1.0], "x", "y")])],
                             tmp_path)
    assert [p.name for p in written] == ["s.check__ok.svg"]
    assert "empty" in caplog.text
    assert not (tmp_path / "tables" / "s.check__empty.csv").exists()


def test_atomic_write_replaces_and_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "f.txt"
    atomic_write(target, "one")
    atomic_write(target, b"two")
    assert target.read_text() == "two"
    assert [p.name for p in target.parent.iterdir()] == ["f.txt"]
