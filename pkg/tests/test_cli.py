import csv
import json
import time

import numpy as np
import pytest

from bayeslogit.cli import main


def write_toy_csv(path, n=50, seed=0):
    rng = np.random.default_rng(seed)
    flag = rng.integers(0, 2, size=n)
    score = rng.normal(0, 1, size=n)
    logits = -0.4 + 0.9 * flag - 0.8 * score
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "flag", "score"])
        for i in range(n):
            writer.writerow([y[i], flag[i], repr(float(score[i]))])


def toy_config(tmp_path, n_chains=2, draws=100, warmup=100, seed=7, extra=None):
    write_toy_csv(tmp_path / "toy.csv")
    cfg = {
        "seed": seed,
        "out_dir": "out",
        "data": {
            "path": "toy.csv",
            "schema": {
                "outcome": "y",
                "binary": ["flag"],
                "categorical": [],
                "quantitative": ["score"],
                "intercept": True,
            },
        },
        "chains": {"n_chains": n_chains, "warmup": warmup, "draws_per_chain": draws},
        "analysis": {"max_lag": 10, "n_bins": 10},
        "eval": {"test_fraction": 0.3, "reduced_grid": True},
    }
    if extra:
        cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestFit:
    def test_writes_draws_and_diagnostics(self, tmp_path):
        cfg = toy_config(tmp_path)
        assert main(["fit", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        rows = read_rows(out / "draws.csv")
        assert rows[0][:3] == ["chain", "draw", "divergent"]
        assert len(rows) == 1 + 2 * 100
        diag = read_rows(out / "diagnostics.csv")
        assert diag[0] == ["parameter", "rhat", "ess_bulk", "ess_tail"]
        assert len(diag) == 1 + 3  # intercept, flag, score
        manifest = json.loads((out / "manifest_fit.json").read_text())
        assert manifest["seed"] == 7

    def test_corrupted_csv_exits_with_data_stage(self, tmp_path, capsys):
        cfg = toy_config(tmp_path)
        (tmp_path / "toy.csv").write_text("y,flag\n1,0\n0\n", encoding="utf-8")
        code = main(["fit", "--config", str(cfg)])
        assert code == 3
        assert "data.load" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = toy_config(tmp_path)
        assert main(["fit", "--config", str(cfg)]) == 0
        first = (tmp_path / "out" / "draws.csv").read_bytes()
        assert main(["fit", "--config", str(cfg)]) == 0
        second = (tmp_path / "out" / "draws.csv").read_bytes()
        assert first == second

    def test_missing_config_is_config_error(self, tmp_path):
        assert main(["fit", "--config", str(tmp_path / "absent.json")]) == 2

    def test_seed_override_changes_draws(self, tmp_path):
        cfg = toy_config(tmp_path)
        main(["fit", "--config", str(cfg)])
        base = (tmp_path / "out" / "draws.csv").read_bytes()
        main(["fit", "--config", str(cfg), "--seed", "99"])
        assert (tmp_path / "out" / "draws.csv").read_bytes() != base


class TestAnalyze:
    def run_fit(self, tmp_path, **kwargs):
        cfg = toy_config(tmp_path, **kwargs)
        assert main(["fit", "--config", str(cfg)]) == 0
        return cfg

    def test_tables_have_paper_shape(self, tmp_path):
        cfg = self.run_fit(tmp_path)
        assert main(["analyze", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        decisions = read_rows(out / "decisions.csv")
        assert decisions[0] == ["parameter", "d_0.01", "d_0.02", "d_0.03", "d_0.04", "d_0.05"]
        assert len(decisions) == 1 + 3
        assert all(cell in {"-", "0", "+"} for row in decisions[1:] for cell in row[1:])
        stats = read_rows(out / "stats.csv")
        assert stats[0] == ["parameter", "mean", "q25", "median", "q75"]
        hpd_rows = read_rows(out / "hpd.csv")
        assert hpd_rows[0] == ["parameter", "hpd_lower", "hpd_upper"]
        for row in hpd_rows[1:]:
            assert float(row[1]) <= float(row[2])
        margeff = read_rows(out / "marginal_effects.csv")
        assert [r[0] for r in margeff[1:]] == ["score"]

    def test_paper_threshold_echo(self, tmp_path):
        cfg = self.run_fit(tmp_path, extra={"analysis": {"p": 0.1303, "max_lag": 10}})
        assert main(["analyze", "--config", str(cfg)]) == 0
        rows = read_rows(tmp_path / "out" / "thresholds.csv")
        assert rows[0] == ["d", "epsilon1", "epsilon2"]
        first = rows[1]
        assert float(first[0]) == 0.01
        assert float(first[1]) == pytest.approx(-0.0872, abs=5e-4)
        assert float(first[2]) == pytest.approx(0.0892, abs=5e-4)

    def test_default_p_is_observed_rate(self, tmp_path, capsys):
        cfg = self.run_fit(tmp_path)
        assert main(["analyze", "--config", str(cfg)]) == 0
        message = capsys.readouterr().out
        assert "baseline rate p" in message

    def test_empty_draws_file_fails(self, tmp_path):
        cfg = toy_config(tmp_path)
        empty = tmp_path / "empty.csv"
        empty.write_text("", encoding="utf-8")
        assert main(["analyze", "--config", str(cfg), "--draws", str(empty)]) == 3

    def test_mismatched_names_fail(self, tmp_path):
        cfg = self.run_fit(tmp_path)
        draws = tmp_path / "out" / "draws.csv"
        text = draws.read_text(encoding="utf-8").replace("score", "renamed")
        draws.write_text(text, encoding="utf-8")
        assert main(["analyze", "--config", str(cfg)]) == 3


class TestDiagnose:
    def test_histogram_has_one_column_per_chain(self, tmp_path):
        cfg = toy_config(tmp_path, n_chains=4, draws=60, warmup=60)
        assert main(["fit", "--config", str(cfg)]) == 0
        assert main(["diagnose", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        hist = read_rows(out / "rank_histograms.csv")
        assert hist[0] == ["parameter", "bin", "chain0", "chain1", "chain2", "chain3"]
        by_param = {}
        for row in hist[1:]:
            by_param.setdefault(row[0], []).append(row)
        assert set(by_param) == {"intercept", "flag", "score"}
        for rows in by_param.values():
            assert len(rows) == 10  # n_bins from the analysis section
            for c in range(4):
                assert sum(int(r[2 + c]) for r in rows) == 60
        acf = read_rows(out / "autocorrelations.csv")
        assert acf[0] == ["parameter", "lag", "chain0", "chain1", "chain2", "chain3"]
        lag0 = [r for r in acf[1:] if r[1] == "0"]
        assert all(float(v) == 1.0 for r in lag0 for v in r[2:])


class TestEvaluate:
    def test_emits_two_auc_rows_and_curves(self, tmp_path):
        cfg = toy_config(tmp_path, extra={"chains": {"n_chains": 2, "warmup": 80,
                                                     "draws_per_chain": 80}})
        assert main(["evaluate", "--config", str(cfg), "--reduced-grid"]) == 0
        out = tmp_path / "out"
        auc_rows = read_rows(out / "auc.csv")
        assert auc_rows[0] == ["model", "auc"]
        assert [r[0] for r in auc_rows[1:]] == ["Logistic Regression", "Random Forest"]
        assert len(auc_rows) == 3
        for stem in ("logistic_regression", "random_forest"):
            curve = read_rows(out / f"roc_{stem}.csv")
            assert curve[0] == ["threshold", "fpr", "tpr"]
            assert float(curve[1][1]) == 0.0 and float(curve[-1][2]) == 1.0
        manifest = json.loads((out / "manifest_evaluate.json").read_text())
        assert "selected_forest" in manifest["config"]["eval"]


class TestSynthPipeline:
    def synth_config(self, tmp_path, n=500, seed=33):
        cfg = {
            "seed": seed,
            "out_dir": "out",
            "synth": {
                "n": n,
                "theta_true": [-0.5, 0.8, -0.6, 0.4],
                "covariates": [
                    {"kind": "normal", "name": "s1"},
                    {"kind": "normal", "name": "s2"},
                    {"kind": "binary", "p": 0.5, "name": "b1"},
                ],
                "attrition": {"mode": "none"},
            },
            "data": {
                "path": "out/synth_observed.csv",
                "schema": "out/synth_schema.json",
            },
            "chains": {"n_chains": 2, "warmup": 150, "draws_per_chain": 150},
            "analysis": {"max_lag": 10, "n_bins": 10},
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return path

    def test_synth_outputs(self, tmp_path):
        cfg = self.synth_config(tmp_path)
        assert main(["synth", "--config", str(cfg)]) == 0
        out = tmp_path / "out"
        observed = read_rows(out / "synth_observed.csv")
        assert observed[0] == ["s1", "s2", "b1", "y"]
        assert len(observed) == 1 + 500
        truth = json.loads((out / "synth_truth.json").read_text())
        assert truth["theta_true"] == [-0.5, 0.8, -0.6, 0.4]
        assert truth["retention"] == 1.0

    def test_end_to_end_under_a_minute(self, tmp_path):
        cfg = self.synth_config(tmp_path)
        start = time.monotonic()
        assert main(["synth", "--config", str(cfg)]) == 0
        assert main(["fit", "--config", str(cfg)]) == 0
        assert main(["analyze", "--config", str(cfg)]) == 0
        elapsed = time.monotonic() - start
        assert elapsed < 60.0
        out = tmp_path / "out"
        for name in ("draws.csv", "diagnostics.csv", "hpd.csv", "stats.csv",
                     "odds.csv", "decisions.csv", "marginal_effects.csv"):
            assert (out / name).exists()
