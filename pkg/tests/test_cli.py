import hashlib
import json
from pathlib import Path

import pytest

from wearbench import cli, pipeline, synth


def run(*argv) -> int:
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def small_cohort(tmp_path_factory):
    """A 3+3 synthetic cohort with extraction output, shared read-only."""
    root = tmp_path_factory.mktemp("cohort")
    code = run("--out", str(root / "data"), "--seed", "5", "synth",
               "--n-unipolar", "3", "--n-bipolar", "3", "--duration", "70")
    assert code == 0
    code = run("--data-root", str(root / "data"),
               "--manifest", str(root / "data" / "manifest.csv"),
               "--out", str(root / "out"), "extract")
    assert code == 0
    return root


class TestSynthCommand:
    def test_default_writes_manifest(self, tmp_path, capsys):
        code = run("--out", str(tmp_path / "d"), "--seed", "1", "synth",
                   "--n-unipolar", "2", "--n-bipolar", "2",
                   "--duration", "61")
        assert code == 0
        printed = capsys.readouterr().out.strip()
        assert printed.endswith("manifest.csv")
        assert Path(printed).is_file()

    def test_deterministic_tree(self, tmp_path):
        for sub in ("a", "b"):
            assert run("--out", str(tmp_path / sub), "--seed", "9", "synth",
                       "--n-unipolar", "2", "--n-bipolar", "2",
                       "--duration", "61") == 0

        def checksum(root):
            digest = hashlib.sha256()
            for path in sorted(Path(root).rglob("*")):
                if path.is_file():
                    digest.update(path.relative_to(root).as_posix().encode())
                    digest.update(path.read_bytes())
            return digest.hexdigest()

        assert checksum(tmp_path / "a") == checksum(tmp_path / "b")

    def test_unwritable_out_is_io_error(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        code = run("--out", str(blocker / "sub"), "synth",
                   "--n-unipolar", "1", "--n-bipolar", "1",
                   "--duration", "61")
        assert code == 3

    def test_invalid_cohort_is_config_error(self, tmp_path):
        code = run("--out", str(tmp_path / "d"), "synth",
                   "--n-unipolar", "0", "--n-bipolar", "2")
        assert code == 2


class TestExtractCommand:
    def test_outputs_exist_with_59_columns(self, small_cohort):
        features = small_cohort / "out" / "features.csv"
        header = features.read_text().splitlines()[0].split(",")
        assert header[0] == "subject_id"
        assert header[-1] == "label"
        assert len(header) == 61
        validation = json.loads(
            (small_cohort / "out" / "validation.json").read_text())
        assert len(validation["subjects"]) == 6

    def test_rerun_is_byte_identical(self, small_cohort, tmp_path):
        before = (small_cohort / "out" / "features.csv").read_bytes()
        code = run("--data-root", str(small_cohort / "data"),
                   "--manifest", str(small_cohort / "data" / "manifest.csv"),
                   "--out", str(tmp_path / "out2"), "extract")
        assert code == 0
        after = (tmp_path / "out2" / "features.csv").read_bytes()
        assert before == after

    def test_corrupt_session_excluded_but_listed(self, tmp_path):
        data = tmp_path / "data"
        cohort = synth.CohortSpec(n_unipolar=2, n_bipolar=2, seed=3,
                                  duration_s=70.0)
        synth.generate_cohort(data, cohort)
        # corrupt one subject: constant BVP
        bvp = data / "S002" / "BVP.csv"
        lines = bvp.read_text().splitlines()
        body = ["0.000000"] * (len(lines) - 2)
        bvp.write_text("\n".join(lines[:2] + body) + "\n")
        code = run("--data-root", str(data),
                   "--manifest", str(data / "manifest.csv"),
                   "--out", str(tmp_path / "out"), "extract")
        assert code == 0
        rows = pipeline.read_features_csv(tmp_path / "out" / "features.csv")
        assert [r.subject_id for r in rows] == ["S001", "S003", "S004"]
        validation = json.loads(
            (tmp_path / "out" / "validation.json").read_text())
        excluded = {s["subject_id"]: s for s in validation["subjects"]
                    if s["status"] == "excluded"}
        assert "S002" in excluded
        assert any("constant BVP" in r for r in excluded["S002"]["reasons"])

    def test_all_excluded_gives_exit_4(self, tmp_path):
        data = tmp_path / "data"
        synth.generate_cohort(data, synth.CohortSpec(
            n_unipolar=1, n_bipolar=1, seed=4, duration_s=30.0))
        code = run("--data-root", str(data),
                   "--manifest", str(data / "manifest.csv"),
                   "--out", str(tmp_path / "out"), "extract")
        assert code == 4

    def test_missing_settings_is_config_error(self):
        assert run("extract") == 2


class TestValidateCommand:
    def test_validate_writes_report(self, small_cohort, tmp_path, capsys):
        code = run("--data-root", str(small_cohort / "data"),
                   "--manifest", str(small_cohort / "data" / "manifest.csv"),
                   "--out", str(tmp_path / "v"), "validate")
        assert code == 0
        text = capsys.readouterr().out
        assert "6/6 sessions pass validation" in text


class TestBenchCommand:
    def test_bench_writes_reports_and_table(self, small_cohort):
        code = run("--out", str(small_cohort / "out"), "--seed", "5",
                   "bench", "--features", "temp,acc", "--models", "knn,dt")
        assert code == 0
        for selector in ("temp", "acc"):
            table = small_cohort / "out" / f"bench_{selector}.md"
            assert table.is_file()
            lines = table.read_text().splitlines()
            assert lines[0] == \
                "| Method | Accuracy | Precision | Recall | F1 Score |"
            assert len(lines) == 4  # header, rule, two model rows
            for model in ("knn", "dt"):
                report = json.loads(
                    (small_cohort / "out"
                     / f"bench_{selector}_{model}.json").read_text())
                assert sum(report["confusion"].values()) == 6
                assert report["selector"] == selector

    def test_singleton_grid_matches_library_call(self, small_cohort,
                                                 tmp_path):
        config = {"bench": {"grids": {"knn": [{"k": 1}]}}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        code = run("--config", str(cfg_path), "--out",
                   str(small_cohort / "out"), "--seed", "5", "bench",
                   "--features", "temp", "--models", "knn")
        assert code == 0
        report = json.loads((small_cohort / "out"
                             / "bench_temp_knn.json").read_text())
        assert report["grid_search"]["n_points"] == 1

        from wearbench import mlbench
        from wearbench.models import ModelKind
        rows = pipeline.read_features_csv(small_cohort / "out"
                                          / "features.csv")
        matrix = mlbench.assemble_matrix(rows, "temp")
        direct = mlbench.loocv_grid_search(matrix, ModelKind.KNN,
                                           [{"k": 1}], seed=5,
                                           selector="temp")
        assert report["metrics"]["accuracy"] == pytest.approx(
            direct.metrics.accuracy)
        assert report["per_fold"] == [
            {"subject_id": sid, "true": t, "predicted": p}
            for sid, t, p in direct.per_fold]

    def test_all_six_selectors_yield_six_tables(self, small_cohort,
                                                tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "features.csv").write_bytes(
            (small_cohort / "out" / "features.csv").read_bytes())
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(
            {"bench": {"grids": {"knn": [{"k": 3}]}}}))
        code = run("--config", str(cfg_path), "--out", str(out),
                   "--seed", "5", "bench",
                   "--features", "hrv_time,hrv_freq,eda,acc,temp,all",
                   "--models", "knn")
        assert code == 0
        tables = sorted(p.name for p in out.glob("bench_*.md"))
        assert tables == ["bench_acc.md", "bench_all.md", "bench_eda.md",
                          "bench_hrv_freq.md", "bench_hrv_time.md",
                          "bench_temp.md"]

    def test_missing_features_csv_is_io_error(self, tmp_path):
        code = run("--out", str(tmp_path / "nope"), "bench",
                   "--features", "temp", "--models", "knn")
        assert code == 3

    def test_unknown_selector_is_config_error(self, small_cohort):
        code = run("--out", str(small_cohort / "out"), "bench",
                   "--features", "bogus", "--models", "knn")
        assert code == 2


class TestReportCommand:
    def test_rerenders_tables_from_saved_json(self, small_cohort, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "features.csv").write_bytes(
            (small_cohort / "out" / "features.csv").read_bytes())
        assert run("--out", str(out), "--seed", "5", "bench",
                   "--features", "temp", "--models", "knn,dt") == 0
        table = out / "bench_temp.md"
        original = table.read_text()
        table.unlink()
        code = run("--out", str(out), "report",
                   "--features", "temp", "--models", "knn,dt")
        assert code == 0
        assert table.read_text() == original

    def test_report_without_flags_uses_config(self, small_cohort, tmp_path):
        cfg = {"bench": {"selectors": ["temp"], "models": ["knn", "dt"]}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        table = small_cohort / "out" / "bench_temp.md"
        code = run("--config", str(cfg_path), "--out",
                   str(small_cohort / "out"), "report")
        assert code == 0
        rendered = table.read_text()
        table.unlink()
        assert run("--config", str(cfg_path), "--out",
                   str(small_cohort / "out"), "report") == 0
        assert table.read_text() == rendered
        assert rendered.splitlines()[0] == \
            "| Method | Accuracy | Precision | Recall | F1 Score |"

    def test_empty_out_dir_gives_exit_4(self, tmp_path):
        (tmp_path / "empty").mkdir()
        assert run("--out", str(tmp_path / "empty"), "report") == 4


class TestConfig:
    def test_print_config_round_trips(self, tmp_path, capsys):
        assert run("--print-config") == 0
        dumped = json.loads(capsys.readouterr().out)
        assert dumped["seed"] == 7
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(dumped))
        assert run("--config", str(cfg_path), "--print-config") == 0
        assert json.loads(capsys.readouterr().out) == dumped

    def test_flag_overrides_file(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 1, "out_dir": "from_file"}))
        assert run("--config", str(cfg_path), "--seed", "99",
                   "--print-config") == 0
        dumped = json.loads(capsys.readouterr().out)
        assert dumped["seed"] == 99
        assert dumped["out_dir"] == "from_file"

    def test_env_overrides_file_but_not_flags(self, tmp_path, capsys,
                                              monkeypatch):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 1}))
        monkeypatch.setenv("WEARBENCH_SEED", "55")
        assert run("--config", str(cfg_path), "--print-config") == 0
        assert json.loads(capsys.readouterr().out)["seed"] == 55
        assert run("--config", str(cfg_path), "--seed", "7",
                   "--print-config") == 0
        assert json.loads(capsys.readouterr().out)["seed"] == 7

    def test_unknown_key_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"bogus": 1}))
        assert run("--config", str(cfg_path), "--print-config") == 2

    def test_invalid_json_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        assert run("--config", str(cfg_path), "--print-config") == 2

    def test_out_of_range_parameter_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"dsp": {"welch_overlap": 1.5}}))
        assert run("--config", str(cfg_path), "--print-config") == 2

    def test_unknown_grid_hyperparameter_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(
            {"bench": {"grids": {"knn": [{"kk": 1}]}}}))
        assert run("--config", str(cfg_path), "--print-config") == 2

    def test_no_command_prints_help(self, capsys):
        assert run() == 2


class TestEndToEndDeterminism:
    def test_synth_extract_bench_byte_identical(self, tmp_path):
        def one_run(base: Path) -> dict[str, bytes]:
            assert run("--out", str(base / "data"), "--seed", "17", "synth",
                       "--n-unipolar", "2", "--n-bipolar", "3",
                       "--duration", "70") == 0
            assert run("--data-root", str(base / "data"),
                       "--manifest", str(base / "data" / "manifest.csv"),
                       "--out", str(base / "out"), "extract") == 0
            assert run("--out", str(base / "out"), "--seed", "17", "bench",
                       "--features", "temp", "--models", "knn,gb") == 0
            return {p.name: p.read_bytes()
                    for p in sorted((base / "out").iterdir())}

    # two fully independent runs must agree byte for byte
        a = one_run(tmp_path / "r1")
        b = one_run(tmp_path / "r2")
        assert a.keys() == b.keys()
        for name in a:
            assert a[name] == b[name], name
