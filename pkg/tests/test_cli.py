import json
from pathlib import Path

import pytest

from trendforge import cli


def run(args):
    return cli.main(args)


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    code = run([
        "simulate", "--out", str(d), "--seed", "7", "--lambda-true", "0.693",
        "--hashtags", "8", "--n-users", "3000", "--participants", "20",
        "--base-rate", "1.5", "--adoption-prob", "0.03",
    ])
    assert code == 0
    truth = json.loads((d / "ground_truth.json").read_text())
    # the eligible pool must not run dry or the arrival process is censored
    assert all(h["arrivals_skipped"] == 0 for h in truth["hashtags"].values())
    return d


class TestSimulateAndValidate:
    def test_bundle_files_exist(self, sim_dir):
        for name in ("tweets.jsonl", "graph.csv", "trending.csv",
                     "embeddings.bin", "ground_truth.json"):
            assert (sim_dir / name).exists()

    def test_validate_ok(self, sim_dir, capsys):
        assert run(["validate", "--in", str(sim_dir)]) == 0
        out = capsys.readouterr().out
        assert "ok" in out

    def test_validate_bad_data(self, tmp_path, capsys):
        (tmp_path / "graph.csv").write_text("1,2\n", encoding="utf-8")
        (tmp_path / "tweets.jsonl").write_text("{broken\n", encoding="utf-8")
        assert run(["validate", "--in", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert err.startswith("error-code: MalformedLine")


class TestPipelines:
    def test_cascade_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "o"
        assert run(["cascade", "--in", str(sim_dir), "--out", str(out)]) == 0
        sizes = (out / "cascade_sizes.csv").read_text().splitlines()
        assert sizes[0] == "hashtag,root_tweet_id,tweet_type,size"
        assert len(sizes) > 1

    def test_exposure_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "o"
        assert run(["exposure", "--in", str(sim_dir), "--out", str(out),
                    "--permutations", "200", "--svg"]) == 0
        for name in ("exposure_records.csv", "exposure_ecdf.csv",
                     "effectiveness.csv", "exposure_summary.json",
                     "exposure_ecdf.svg"):
            assert (out / name).exists(), name

    def test_tpr_outputs_with_desk_threshold(self, sim_dir, tmp_path):
        out = tmp_path / "o"
        assert run(["tpr", "--in", str(sim_dir), "--out", str(out),
                    "--min-unique", "20", "--neighborhood-bp", "200"]) == 0
        assert (out / "tpr.csv").exists()
        assert (out / "tpr_ecdf.csv").exists()
        assert (out / "exemplars.txt").exists()

    def test_tpr_too_small_exit_2(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "o"
        code = run(["tpr", "--in", str(sim_dir), "--out", str(out),
                    "--min-unique", "3000"])
        assert code == 2
        err = capsys.readouterr().err
        assert "error-code: HashtagTooSmall" in err

    def test_fit_recovers_lambda(self, sim_dir, tmp_path):
        out = tmp_path / "o"
        assert run(["fit", "--in", str(sim_dir), "--out", str(out),
                    "--strategy", "earliest", "--window-pre", "48",
                    "--window-post", "24"]) == 0
        fit = json.loads((out / "fit.json").read_text())
        lam = fit["coefficients"]["trending"]
        se = fit["standard_errors"]["trending"]
        assert abs(lam - 0.693) < 3 * se
        assert fit["converged"]
        assert (out / "panel.csv").exists()

    def test_bare_default_recovery(self, tmp_path):
        # simulate then fit with stock flags recovers the planted effect
        d = tmp_path / "d"
        assert run(["simulate", "--seed", "7", "--lambda-true", "0.693",
                    "--out", str(d)]) == 0
        assert run(["fit", "--in", str(d), "--strategy", "earliest"]) == 0
        fit = json.loads((d / "fit.json").read_text())
        lam = fit["coefficients"]["trending"]
        assert abs(lam - 0.693) < 3 * fit["standard_errors"]["trending"]

    def test_donut_equals_earliest_at_zero_uncertainty(self, sim_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["fit", "--in", str(sim_dir), "--out", str(a),
                    "--strategy", "earliest"]) == 0
        assert run(["fit", "--in", str(sim_dir), "--out", str(b),
                    "--strategy", "donut-hole"]) == 0
        fa = json.loads((a / "fit.json").read_text())
        fb = json.loads((b / "fit.json").read_text())
        assert fa["coefficients"] == fb["coefficients"]

    def test_report_collates(self, sim_dir, tmp_path):
        work = tmp_path / "work"
        assert run(["cascade", "--in", str(sim_dir), "--out", str(work)]) == 0
        assert run(["exposure", "--in", str(sim_dir), "--out", str(work),
                    "--permutations", "50"]) == 0
        assert run(["fit", "--in", str(sim_dir), "--out", str(work)]) == 0
        rep = tmp_path / "rep"
        assert run(["report", "--in", str(work), "--out", str(rep)]) == 0
        report = json.loads((rep / "report.json").read_text())
        assert "fit" in report and "cascade_size_histogram" in report
        assert (rep / "exposure_ecdf.svg").exists()
        assert (rep / "cascade_sizes.svg").exists()


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        def everything(root: Path) -> dict[str, bytes]:
            sim = root / "sim"
            out = root / "out"
            assert run(["simulate", "--out", str(sim), "--seed", "5",
                        "--hashtags", "2", "--n-users", "300",
                        "--participants", "10", "--lambda-true", "0.5",
                        "--window-pre-s", "7200",
                        "--window-post-s", "14400"]) == 0
            assert run(["cascade", "--in", str(sim), "--out", str(out)]) == 0
            assert run(["exposure", "--in", str(sim), "--out", str(out),
                        "--permutations", "100", "--svg"]) == 0
            assert run(["tpr", "--in", str(sim), "--out", str(out),
                        "--min-unique", "5", "--neighborhood-bp", "500"]) == 0
            assert run(["fit", "--in", str(sim), "--out", str(out),
                        "--window-pre", "24", "--window-post", "24"]) == 0
            assert run(["report", "--in", str(out), "--out",
                        str(root / "rep")]) == 0
            files = {}
            for base in (sim, out, root / "rep"):
                for p in sorted(base.rglob("*")):
                    if p.is_file():
                        files[str(p.relative_to(root))] = p.read_bytes()
            return files

        a = everything(tmp_path / "run1")
        b = everything(tmp_path / "run2")
        assert a.keys() == b.keys()
        for name in a:
            assert a[name] == b[name], f"{name} differs between reruns"


class TestConfigPrecedence:
    def test_config_file_supplies_defaults_flags_win(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 9, "hashtags": 2,
                                   "n-users": 250}), encoding="utf-8")
        d1 = tmp_path / "d1"
        assert run(["--config", str(cfg), "simulate", "--out", str(d1)]) == 0
        d2 = tmp_path / "d2"
        assert run(["simulate", "--out", str(d2), "--seed", "9",
                    "--hashtags", "2", "--n-users", "250"]) == 0
        assert (d1 / "tweets.jsonl").read_bytes() == \
            (d2 / "tweets.jsonl").read_bytes()
        # an explicit flag overrides the config value
        d3 = tmp_path / "d3"
        assert run(["--config", str(cfg), "simulate", "--out", str(d3),
                    "--seed", "10"]) == 0
        assert (d3 / "tweets.jsonl").read_bytes() != \
            (d1 / "tweets.jsonl").read_bytes()

    def test_bad_config_usage_error(self, tmp_path, capsys):
        assert run(["--config", str(tmp_path / "missing.json"),
                    "validate", "--in", "x"]) == 1
        assert "error-code: UsageError" in capsys.readouterr().err

    def test_jobs_env_fallback(self, sim_dir, tmp_path, monkeypatch):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        monkeypatch.setenv("TRENDFORGE_JOBS", "2")
        assert run(["cascade", "--in", str(sim_dir), "--out", str(out1)]) == 0
        monkeypatch.delenv("TRENDFORGE_JOBS")
        assert run(["cascade", "--in", str(sim_dir), "--out", str(out2),
                    "--jobs", "2"]) == 0
        assert (out1 / "cascade_sizes.csv").read_bytes() == \
            (out2 / "cascade_sizes.csv").read_bytes()

    def test_usage_error_unknown_subcommand(self):
        assert run(["frobnicate"]) == 1
