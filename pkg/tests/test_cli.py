"""Command-line interface: subcommands, files, exit codes."""

import json

import pytest

from cobess import reporting, trainer
from cobess.cli import main
from cobess.timeseries import SCENARIO_FILE_NAME


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "scenario": {"synthetic_seed": 3, "n_slots": 48, "episode_slots": 12},
        "drqn": {"hidden_units": 8, "sequence_length": 6, "batch_size": 4,
                 "replay_capacity": 16, "updates_per_episode": 2},
        "design": {"sigma": 0.2, "learning_rate": 1e-4, "block_size": 3},
        "training": {"n_episodes": 6, "seed": 1, "eval_interval": 3},
    }))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_no_command_is_usage_error(self, capsys):
        assert run_cli() == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_command(self, capsys):
        assert run_cli("frobnicate") == 1

    def test_missing_required_flag(self, capsys):
        assert run_cli("train", "--out", "x") == 1

    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "train" in capsys.readouterr().out

    def test_missing_config_file(self, tmp_path, capsys):
        code = run_cli("train", "--config", tmp_path / "absent.json",
                       "--out", tmp_path / "out")
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_invalid_config_value(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"drqn": {"gamma": 7}}))
        assert run_cli("train", "--config", path, "--out", tmp_path / "o") == 2

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"optimizer": {}}))
        assert run_cli("train", "--config", path, "--out", tmp_path / "o") == 2

    def test_report_without_metrics_dir(self, tmp_path):
        code = run_cli("report", "--metrics", tmp_path / "nope",
                       "--out", tmp_path / "out")
        assert code == 2


class TestSynthData:
    def test_deterministic_files(self, tmp_path, capsys):
        assert run_cli("synth-data", "--out", tmp_path / "a", "--seed", 9,
                       "--slots", 30) == 0
        assert run_cli("synth-data", "--out", tmp_path / "b", "--seed", 9,
                       "--slots", 30) == 0
        a = (tmp_path / "a" / SCENARIO_FILE_NAME).read_bytes()
        b = (tmp_path / "b" / SCENARIO_FILE_NAME).read_bytes()
        assert a == b
        assert len(a.splitlines()) == 31

    def test_seed_changes_data(self, tmp_path):
        run_cli("synth-data", "--out", tmp_path / "a", "--seed", 1)
        run_cli("synth-data", "--out", tmp_path / "b", "--seed", 2)
        assert ((tmp_path / "a" / SCENARIO_FILE_NAME).read_bytes()
                != (tmp_path / "b" / SCENARIO_FILE_NAME).read_bytes())


class TestTrainCommands:
    def test_train_writes_run_files(self, config_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("train", "--config", config_path, "--out", out) == 0
        assert "mu:" in capsys.readouterr().out
        for name in (trainer.METRICS_FILE, trainer.MU_FILE, trainer.EVAL_FILE,
                     trainer.SUMMARY_FILE, trainer.CHECKPOINT_FILE):
            assert (out / name).exists(), name
        summary = json.loads((out / trainer.SUMMARY_FILE).read_text())
        assert summary["n_episodes"] == 6

    def test_seed_override_changes_metrics(self, config_path, tmp_path):
        run_cli("train", "--config", config_path, "--out", tmp_path / "a")
        run_cli("train", "--config", config_path, "--out", tmp_path / "b",
                "--seed", 123)
        assert ((tmp_path / "a" / trainer.METRICS_FILE).read_bytes()
                != (tmp_path / "b" / trainer.METRICS_FILE).read_bytes())

    def test_short_run_keeps_mu_at_start(self, tmp_path, capsys):
        path = tmp_path / "short.json"
        path.write_text(json.dumps({
            "scenario": {"n_slots": 48, "episode_slots": 12},
            "drqn": {"hidden_units": 8, "sequence_length": 6, "batch_size": 4},
            "design": {"mu0": 0.9, "block_size": 15},
            "training": {"n_episodes": 2, "seed": 0},
        }))
        out = tmp_path / "run"
        assert run_cli("train", "--config", path, "--out", out) == 0
        summary = json.loads((out / trainer.SUMMARY_FILE).read_text())
        assert summary["final_mu"] == 0.9
        assert summary["n_mu_updates"] == 0

    def test_parallel_one_worker_matches_serial_files(self, config_path,
                                                      tmp_path):
        run_cli("train", "--config", config_path, "--out", tmp_path / "s")
        assert run_cli("train-parallel", "--config", config_path,
                       "--out", tmp_path / "p") == 0
        for name in (trainer.METRICS_FILE, trainer.MU_FILE, trainer.EVAL_FILE):
            assert ((tmp_path / "s" / name).read_bytes()
                    == (tmp_path / "p" / name).read_bytes()), name


class TestEvaluateCommand:
    def test_round_trip_from_checkpoint(self, config_path, tmp_path, capsys):
        run_dir = tmp_path / "run"
        run_cli("train", "--config", config_path, "--out", run_dir)
        out = tmp_path / "eval"
        code = run_cli("evaluate", "--config", config_path,
                       "--checkpoint", run_dir / trainer.CHECKPOINT_FILE,
                       "--design", 1.0, "--out", out)
        assert code == 0
        assert "net revenue" in capsys.readouterr().out
        assert (out / trainer.EVAL_FILE).exists()
        # the emitted file is itself report-ready
        assert run_cli("report", "--metrics", out, "--out",
                       tmp_path / "rep") == 0

    def test_missing_checkpoint(self, config_path, tmp_path):
        code = run_cli("evaluate", "--config", config_path,
                       "--checkpoint", tmp_path / "none.npz",
                       "--out", tmp_path / "out")
        assert code == 3


class TestSweepAndReport:
    def test_sweep_then_report(self, config_path, tmp_path, capsys):
        sweep_dir = tmp_path / "sweep"
        code = run_cli("sweep", "--config", config_path, "--grid", "0.8,1.2",
                       "--repeats", 2, "--out", sweep_dir)
        assert code == 0
        assert "best design" in capsys.readouterr().out
        assert (sweep_dir / trainer.SWEEP_FILE).exists()

        report_dir = tmp_path / "report"
        assert run_cli("report", "--metrics", sweep_dir,
                       "--out", report_dir) == 0
        assert ((report_dir / reporting.QUARTILES_FILE).read_bytes()
                == (sweep_dir / trainer.SWEEP_SUMMARY_FILE).read_bytes())

    def test_bad_grid_is_usage_error(self, config_path, tmp_path):
        assert run_cli("sweep", "--config", config_path, "--grid", "a,b",
                       "--out", tmp_path / "out") == 1

    def test_report_catches_tampering(self, config_path, tmp_path, capsys):
        run_dir = tmp_path / "run"
        run_cli("train", "--config", config_path, "--out", run_dir)
        eval_path = run_dir / trainer.EVAL_FILE
        lines = eval_path.read_text().splitlines()
        parts = lines[1].split(",")
        parts[5] = repr(float(parts[5]) + 0.5)
        eval_path.write_text("\n".join([lines[0], ",".join(parts)]
                                       + lines[2:]) + "\n")
        code = run_cli("report", "--metrics", run_dir,
                       "--out", tmp_path / "rep")
        assert code == 2
        err = capsys.readouterr().err
        assert trainer.EVAL_FILE in err and "line 2" in err
