import json
import subprocess
import sys

import pytest

from scenewarp.cli import EXIT_CONFIG, EXIT_INCOMPLETE, EXIT_OK, main

TINY = [
    "--views", "3",
    "--total-angle", "20",
    "--timestamps", "2",
    "--width", "160",
    "--height", "96",
    "--seed", "2",
]


class TestCliAll:
    def test_all_builds_dataset_and_report(self, tmp_path):
        rc = main(["all", "-o", str(tmp_path)] + TINY)
        assert rc == EXIT_OK
        assert (tmp_path / "dataset" / "manifest.json").exists()
        assert (tmp_path / "report" / "report.json").exists()
        assert (tmp_path / "report" / "cells.csv").exists()
        figures = list((tmp_path / "report" / "figures").glob("*.png"))
        assert len(figures) >= 3
        manifest = json.loads((tmp_path / "dataset" / "manifest.json").read_text())
        assert manifest["views"] == 3
        assert manifest["config"]["seed"] == 2

    def test_verify_verb_on_existing_dataset(self, tmp_path):
        assert main(["all", "-o", str(tmp_path)] + TINY) == EXIT_OK
        rc = main(
            ["verify", "--dataset", str(tmp_path / "dataset"), "--report", str(tmp_path / "rep2")]
        )
        assert rc == EXIT_OK
        assert (tmp_path / "rep2" / "report.json").exists()

    def test_export_verb_roundtrip(self, tmp_path):
        assert main(["all", "-o", str(tmp_path)] + TINY) == EXIT_OK
        rc = main(["export", "--dataset", str(tmp_path / "dataset"), "--to", str(tmp_path / "copy")])
        assert rc == EXIT_OK
        a = sorted(p.name for p in (tmp_path / "dataset" / "frames").rglob("*.png"))
        b = sorted(p.name for p in (tmp_path / "copy" / "frames").rglob("*.png"))
        assert a == b


class TestCliInitBuild:
    def test_staged_run_matches_all(self, tmp_path):
        a, b = tmp_path / "staged", tmp_path / "oneshot"
        assert main(["init", "-o", str(a)] + TINY) == EXIT_OK
        assert (a / "source" / "frames" / "t000.png").exists()
        assert (a / "source" / "depth" / "t000.f32").exists()
        assert main(["build", "-o", str(a)]) == EXIT_OK
        assert main(["all", "-o", str(b)] + TINY) == EXIT_OK
        raw_a = (a / "dataset" / "frames" / "cam000" / "t001.png").read_bytes()
        raw_b = (b / "dataset" / "frames" / "cam000" / "t001.png").read_bytes()
        assert raw_a == raw_b

    def test_build_writes_progress(self, tmp_path):
        assert main(["build", "-o", str(tmp_path)] + TINY) == EXIT_OK
        progress = json.loads((tmp_path / "progress.json").read_text())
        assert progress["completed_timestamps"] == 2
        assert progress["schedule"]

    def test_resume_reuses_completed_timestamps(self, tmp_path):
        assert main(["build", "-o", str(tmp_path)] + TINY) == EXIT_OK
        # pretend the run died after t=0: resume must rebuild only t=1
        progress = json.loads((tmp_path / "progress.json").read_text())
        before = (tmp_path / "dataset" / "frames" / "cam000" / "t001.png").read_bytes()
        progress["completed_timestamps"] = 1
        (tmp_path / "progress.json").write_text(json.dumps(progress))
        assert main(["build", "-o", str(tmp_path), "--resume"]) == EXIT_OK
        after = (tmp_path / "dataset" / "frames" / "cam000" / "t001.png").read_bytes()
        assert before == after


class TestCliErrors:
    def test_bad_flag_value_is_config_error(self, tmp_path):
        rc = main(["all", "-o", str(tmp_path), "--timestamps", "0", "--views", "2"])
        assert rc == EXIT_CONFIG

    def test_missing_dataset_is_incomplete(self, tmp_path):
        rc = main(["verify", "--dataset", str(tmp_path / "nope"), "--report", str(tmp_path / "r")])
        assert rc == EXIT_INCOMPLETE

    def test_config_file_overrides_flags(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"seed": 9}))
        rc = main(["all", "-o", str(tmp_path), "--config", str(cfg_file), "--seed", "1"] + TINY[:-2] + ["--seed", "1"])
        assert rc == EXIT_OK
        manifest = json.loads((tmp_path / "dataset" / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 9

    def test_env_var_overrides_adapter_url(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SCENEWARP_ADAPTER_BASE_URL", "http://127.0.0.1:1")
        # the URL points nowhere, so the run must fail with the adapter code
        rc = main(["all", "-o", str(tmp_path), "--views", "2", "--timestamps", "1",
                   "--width", "32", "--height", "32"])
        assert rc == 3


class TestEntryPoint:
    def test_console_script_help(self):
        out = subprocess.run(
            [sys.executable, "-m", "scenewarp.cli", "--help"], capture_output=True, text=True
        )
        assert out.returncode == 0
        assert "init" in out.stdout and "verify" in out.stdout
