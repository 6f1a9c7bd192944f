import json
import math
from dataclasses import replace

import pytest

from lgsim.lgineq import REPORT_FIELDS
from lgsim.sweep import SAMPLE_FIELDS, load_results, run_sweep, summarize, write_results
from lgsim.utils.config import parse_config


def _config(tmp_path, text, name="out.csv"):
    cfg = parse_config(text)
    return replace(cfg, output_path=str(tmp_path / name))


class TestRunSweep:
    def test_single_point(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, 0, 1]\ntheta2_range=[0, 0, 1]")
        (row,) = run_sweep(cfg)
        assert (row.B1, row.B2, row.B3, row.B4) == pytest.approx((1.0, 1.0, 1.0, 4.0), abs=1e-12)
        assert (row.B1s, row.B2s, row.B3s) == pytest.approx((1.0, 1.0, 1.0), abs=1e-9)

    def test_row_order(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, 1, 2]\ntheta2_range=[0, 1, 3]\nepsilon_values=[0.2, 0.9]")
        rows = run_sweep(cfg)
        assert [(r.theta1, r.theta2, r.epsilon) for r in rows] == list(cfg.grid())

    def test_workers_preserve_order(self, tmp_path):
        text = "theta1_range=[0, pi, 4]\ntheta2_range=[0, pi, 4]\nepsilon_values=[0.5, 1.0]"
        serial = run_sweep(_config(tmp_path, text))
        threaded = run_sweep(_config(tmp_path, text + "\nworkers=4"))
        assert [r.to_row() for r in serial] == [r.to_row() for r in threaded]

    def test_strong_grid_has_no_violation(self, tmp_path):
        rows = run_sweep(_config(tmp_path, "theta1_range=[0, pi, 31]\ntheta2_range=[0, pi, 31]"))
        summary = summarize(rows)
        assert summary["rows"] == 31 * 31
        assert summary["min_B1s"] >= 1.0 - 1e-9
        assert min(summary["min_B2s"], summary["min_B3s"]) >= 1.0 - 1e-9
        assert summary["max_B1"] <= 1.0 + 1e-12
        assert summary["min_B4"] >= -1e-12
        assert summary["max_oracle_deviation"] <= 1e-9
        assert summary["consistency_errors"] == 0

    def test_weak_grid_has_no_violation(self, tmp_path):
        text = "theta1_range=[0, pi, 13]\ntheta2_range=[0, pi, 13]\nepsilon_values=[0, 0.1, 0.3, 0.5, 0.7, 0.9, 1]"
        summary = summarize(run_sweep(_config(tmp_path, text)))
        assert summary["min_B1p"] >= -1e-9

    def test_symmetric_zero_strength_shows_apparent_violations(self, tmp_path):
        rows = run_sweep(_config(tmp_path, "theta1_range=[0, pi, 19]\nsymmetric=true\nepsilon_values=[0.0]"))
        summary = summarize(rows)
        assert summary["apparent_violations"] > 0
        assert summary["min_B1p"] >= -1e-9

    def test_sampling_attaches_estimates(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, pi, 2]\ntheta2_range=[0, 0, 1]\nsample_count=500\nseed=3")
        rows = run_sweep(cfg)
        assert all(sum(r.sample["counts"]) == 500 for r in rows)
        assert rows[0].sample["seed"] != rows[1].sample["seed"]


class TestWriteResults:
    def test_one_row_csv(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, 0, 1]\ntheta2_range=[0, 0, 1]")
        path = write_results(run_sweep(cfg), cfg)
        lines = open(path, encoding="utf-8").read().splitlines()
        assert len(lines) == 2
        assert lines[0] == ",".join(REPORT_FIELDS)

    def test_twelve_significant_digits(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[pi/3, pi/3, 1]\ntheta2_range=[pi/3, pi/3, 1]")
        path = write_results(run_sweep(cfg), cfg)
        row = dict(zip(REPORT_FIELDS, open(path, encoding="utf-8").read().splitlines()[1].split(",")))
        assert row["theta1"] == "1.0471975512"
        assert row["B1s"] == "1.66812224599"

    def test_deterministic_bytes(self, tmp_path):
        text = "theta1_range=[0, pi, 3]\ntheta2_range=[0, pi, 3]\nsample_count=200\nseed=99"
        a = _config(tmp_path, text, "a.csv")
        b = _config(tmp_path, text + "\nworkers=3", "b.csv")
        write_results(run_sweep(a), a)
        write_results(run_sweep(b), b)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_rng_header_only_when_sampling(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, pi, 2]\ntheta2_range=[0, 0, 1]\nsample_count=100\nseed=8")
        path = write_results(run_sweep(cfg), cfg)
        lines = open(path, encoding="utf-8").read().splitlines()
        assert lines[0].startswith("# rng=numpy.random.PCG64 seed=8")
        assert lines[1] == ",".join(REPORT_FIELDS + SAMPLE_FIELDS)
        assert len(lines) == 4

    def test_csv_reload(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, pi, 3]\ntheta2_range=[0, pi, 2]\nsample_count=50")
        rows = run_sweep(cfg)
        loaded = load_results(write_results(rows, cfg))
        assert len(loaded) == 6
        assert set(loaded[0]) == set(REPORT_FIELDS + SAMPLE_FIELDS)
        for original, parsed in zip(rows, loaded):
            assert parsed["B1s"] == pytest.approx(original.B1s, rel=1e-11, abs=1e-12)

    def test_json_round_trip(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, pi, 3]\ntheta2_range=[0, pi, 3]\nepsilon_values=[0.5]", "out.json")
        cfg = replace(cfg, format="json")
        rows = run_sweep(cfg)
        path = write_results(rows, cfg)
        loaded = load_results(path)
        assert [{k: r[k] for k in REPORT_FIELDS} for r in loaded] == [r.to_row() for r in rows]
        payload = json.load(open(path, encoding="utf-8"))
        assert payload["summary"]["rows"] == 9
        assert payload["config"]["epsilon_values"] == [0.5]
        assert "rng" not in payload

    def test_json_samples(self, tmp_path):
        cfg = replace(_config(tmp_path, "theta1_range=[1, 1, 1]\ntheta2_range=[1, 1, 1]\nsample_count=10"), format="json")
        payload = json.load(open(write_results(run_sweep(cfg), cfg), encoding="utf-8"))
        assert payload["rng"].startswith("numpy.random.PCG64")
        assert sum(payload["rows"][0]["sample"]["counts"]) == 10

    def test_creates_output_dir(self, tmp_path):
        cfg = _config(tmp_path, "theta1_range=[0, 0, 1]\ntheta2_range=[0, 0, 1]", "nested/dir/out.csv")
        assert open(write_results(run_sweep(cfg), cfg), encoding="utf-8").readline().startswith("theta1,")

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        cfg = _config(tmp_path, "theta1_range=[0, 0, 1]\ntheta2_range=[0, 0, 1]", "file/out.csv")
        with pytest.raises(OSError, match="file"):
            write_results(run_sweep(cfg), cfg)

    def test_default_grid_rows(self):
        assert parse_config("").size == 181 * 181


def test_summary_of_empty_sweep():
    assert summarize([]) == {"rows": 0}


def test_nan_deviation_ignored(tmp_path):
    rows = run_sweep(_config(tmp_path, "theta1_range=[0, 0, 1]\ntheta2_range=[0, 0, 1]"))
    rows[0].oracle_deviation = math.nan
    assert math.isnan(summarize(rows)["max_oracle_deviation"])


def test_sampling_reuses_evaluated_state(tmp_path, monkeypatch):
    import lgsim.lgineq
    import lgsim.quantum.measure

    def no_rerun(*args, **kwargs):
        raise AssertionError("protocol re-run during a sampled sweep")

    monkeypatch.setattr(lgsim.quantum.measure, "run_protocol", no_rerun)
    monkeypatch.setattr(lgsim.lgineq, "run_protocol", no_rerun)
    cfg = _config(tmp_path, "theta1_range=[0, pi, 3]\ntheta2_range=[1, 1, 1]\nepsilon_values=[0.4]\nsample_count=300\nseed=5")
    rows = run_sweep(cfg)
    assert [sum(r.sample["counts"]) for r in rows] == [300, 300, 300]


def test_sampled_rows_match_direct_sampling(tmp_path):
    from lgsim.quantum.measure import run_protocol
    from lgsim.sampling import row_seed, sample_outcomes

    cfg = _config(tmp_path, "theta1_range=[0.5, 2.5, 2]\ntheta2_range=[1.2, 1.2, 1]\nsample_count=400\nseed=17")
    for index, row in enumerate(run_sweep(cfg)):
        direct = sample_outcomes(run_protocol(row.theta1, row.theta2, row.epsilon).rho123, 400, row_seed(17, index))
        assert row.sample["counts"] == direct.counts
