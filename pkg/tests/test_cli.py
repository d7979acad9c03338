"""End-to-end checks of the command-line interface.

Every test drives ``fallkit.cli.main`` in-process with an argv list; exit
codes and artifacts on disk are the observable contract.
"""

import hashlib
import json
import math

import numpy as np
import pytest

from fallkit.cli import load_config, main
from fallkit.datagen import Dataset
from fallkit.dynamics import FLOOR_ANGLE, PendulumParams, PendulumState, simulate_fall
from fallkit.model_io import load_model


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def _gen(tmp_path, name="ds.csv", extra=()):
    out = tmp_path / name
    rc = main(
        [
            "gen-data",
            "--n-fall",
            "60",
            "--n-nonfall",
            "30",
            "--seed",
            "13",
            "--windows-per-class",
            "40",
            "--out",
            str(out),
            *extra,
        ]
    )
    assert rc == 0
    return out


def _train_small(tmp_path, data, name="det.json", epochs="3"):
    out = tmp_path / name
    rc = main(
        [
            "train",
            "--task",
            "detect",
            "--data",
            str(data),
            "--layers",
            "GRU:8",
            "--epochs",
            epochs,
            "--seed",
            "1",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    return out


def _write_stream_csv(path, theta, rate=100.0, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write("t,theta\n")
        for i, x in enumerate(theta):
            fh.write(f"{i / rate},{x}\n")


class TestSimulate:
    def test_equilibrium_start_stays_constant(self, tmp_path):
        out = tmp_path / "eq.csv"
        assert main(["simulate", "--theta0", "0", "--max-t", "0.5", "--out", str(out)]) == 0
        rows = open(out).read().strip().split("\n")
        assert rows[0] == "t,theta,omega"
        thetas = {r.split(",")[1] for r in rows[1:]}
        assert thetas == {"0"}

    def test_small_tilt_reaches_floor(self, tmp_path):
        out = tmp_path / "fall.csv"
        assert main(["simulate", "--theta0", "0.1", "--out", str(out)]) == 0
        last = open(out).read().strip().split("\n")[-1]
        assert float(last.split(",")[1]) >= FLOOR_ANGLE
        sidecar = json.loads((tmp_path / "fall.csv.meta.json").read_text())
        assert sidecar["termination"] == "impact"

    def test_grid_emits_one_file_per_pair(self, tmp_path):
        out = tmp_path / "grid"
        rc = main(
            [
                "simulate",
                "--grid",
                "--theta0",
                "0.05,0.1,0.2",
                "--omega0",
                "0,0.2",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        files = sorted(p.name for p in out.glob("*.csv"))
        assert len(files) == 6
        assert "fall_theta0.05_omega0.csv" in files
        assert (out / "grid.meta.json").exists()

    def test_already_down_is_usage_error(self, tmp_path):
        assert main(["simulate", "--theta0", "2.0", "--out", str(tmp_path / "x.csv")]) == 1

    def test_unknown_flag_exits_nonzero(self, tmp_path):
        assert main(["simulate", "--frobnicate", "--out", str(tmp_path / "x.csv")]) == 1

    def test_missing_command_exits_nonzero(self):
        assert main([]) == 1


class TestGenData:
    def test_rerun_is_byte_identical(self, tmp_path):
        a = _gen(tmp_path, "a.csv")
        b = _gen(tmp_path, "b.csv")
        assert _sha(a) == _sha(b)
        assert (tmp_path / "a.meta.json").read_text() == (tmp_path / "b.meta.json").read_text()

    def test_workers_do_not_change_rows(self, tmp_path):
        a = _gen(tmp_path, "a.csv")
        c = _gen(tmp_path, "c.csv", extra=("--workers", "4"))
        assert _sha(a) == _sha(c)

    def test_effective_config_lands_in_sidecar(self, tmp_path):
        out = _gen(tmp_path)
        meta = json.loads((tmp_path / "ds.meta.json").read_text())
        eff = meta["metadata"]["effective_config"]
        assert eff["command"] == "gen-data"
        assert eff["scenario"]["n_fall"] == 60
        assert eff["scenario"]["seed"] == 13
        assert eff["dataset"]["windows_per_class"] == 40
        ds = Dataset.load(out)
        assert len(ds) == 80

    def test_nothing_to_generate_rejected(self, tmp_path):
        rc = main(
            ["gen-data", "--n-fall", "0", "--n-nonfall", "0", "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 1
        assert not (tmp_path / "x.csv").exists()

    def test_forecast_task_writes_pairs(self, tmp_path):
        out = tmp_path / "fc.csv"
        rc = main(
            [
                "gen-data",
                "--task",
                "forecast",
                "--n-fall",
                "20",
                "--n-nonfall",
                "0",
                "--theta0-range",
                "0.005",
                "0.05",
                "--omega0-range",
                "0.0",
                "0.05",
                "--seed",
                "5",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        ds = Dataset.load(out)
        assert ds.kind.value == "forecast"
        assert ds.targets.shape[1] == 50


class TestConfigFile:
    def test_file_values_apply(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "scenario": {"n_fall": 60, "n_nonfall": 30, "seed": 13},
                    "dataset": {"windows_per_class": 40},
                }
            )
        )
        out = tmp_path / "ds.csv"
        assert main(["gen-data", "--config", str(cfg), "--out", str(out)]) == 0
        assert _sha(out) == _sha(_gen(tmp_path, "flagged.csv"))

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": {"n_fall": 60, "n_nonfall": 30, "seed": 99}}))
        out = tmp_path / "ds.csv"
        rc = main(
            [
                "gen-data",
                "--config",
                str(cfg),
                "--seed",
                "13",
                "--windows-per-class",
                "40",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        meta = json.loads((tmp_path / "ds.meta.json").read_text())
        assert meta["metadata"]["effective_config"]["scenario"]["seed"] == 13
        assert _sha(out) == _sha(_gen(tmp_path, "flagged.csv"))

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": {"n_fal": 60}}))
        assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1

    def test_unknown_section_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenari": {"n_fall": 60}}))
        assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1

    def test_malformed_json_is_data_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2

    def test_load_config_returns_sections(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"train": {"epochs": 5}, "ga": {"population": 4}}))
        loaded = load_config(cfg)
        assert loaded == {"train": {"epochs": 5}, "ga": {"population": 4}}


class TestTrain:
    def test_epochs_zero_writes_initial_model_and_empty_history(self, tmp_path):
        ds = _gen(tmp_path)
        out = tmp_path / "init.json"
        rc = main(
            [
                "train",
                "--task",
                "detect",
                "--data",
                str(ds),
                "--layers",
                "GRU:8",
                "--epochs",
                "0",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        loaded = load_model(out)
        assert loaded.network.spec.layers[0].hidden_units == 8
        history = (tmp_path / "init_history.csv").read_text().strip().split("\n")
        assert history == ["epoch,loss,val_loss,accuracy,recall,precision"]

    def test_toy_problem_reaches_full_accuracy(self, tmp_path):
        ds = _gen(tmp_path)
        out = _train_small(tmp_path, ds, epochs="12")
        rows = (tmp_path / "det_history.csv").read_text().strip().split("\n")
        assert len(rows) == 13
        final = rows[-1].split(",")
        assert float(final[3]) == 1.0  # accuracy column
        loaded = load_model(out)
        assert loaded.provenance["command"] == "train"
        assert loaded.provenance["train"]["epochs"] == 12

    def test_rerun_is_byte_identical(self, tmp_path):
        ds = _gen(tmp_path)
        a = _train_small(tmp_path, ds, "a.json")
        b = _train_small(tmp_path, ds, "b.json")
        assert _sha(a) == _sha(b)
        assert _sha(tmp_path / "a_history.csv") == _sha(tmp_path / "b_history.csv")

    def test_task_dataset_mismatch_is_data_error(self, tmp_path):
        ds = _gen(tmp_path)
        rc = main(
            [
                "train",
                "--task",
                "forecast",
                "--data",
                str(ds),
                "--epochs",
                "1",
                "--out",
                str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2

    def test_missing_dataset_is_data_error(self, tmp_path):
        rc = main(
            [
                "train",
                "--task",
                "detect",
                "--data",
                str(tmp_path / "absent.csv"),
                "--epochs",
                "1",
                "--out",
                str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2

    def test_network_section_from_config(self, tmp_path):
        ds = _gen(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "network": {"layers": [{"kind": "LSTM", "hidden_units": 6}]},
                    "train": {"epochs": 1, "seed": 1},
                }
            )
        )
        out = tmp_path / "m.json"
        rc = main(
            ["train", "--config", str(cfg), "--task", "detect", "--data", str(ds), "--out", str(out)]
        )
        assert rc == 0
        loaded = load_model(out)
        assert loaded.network.spec.layers[0].kind.value == "LSTM"
        assert loaded.network.spec.layers[0].hidden_units == 6

    def test_bad_layers_flag_is_usage_error(self, tmp_path):
        ds = _gen(tmp_path)
        rc = main(
            [
                "train",
                "--task",
                "detect",
                "--data",
                str(ds),
                "--layers",
                "GRU-8",
                "--epochs",
                "1",
                "--out",
                str(tmp_path / "x.json"),
            ]
        )
        assert rc == 1


class TestSearch:
    def test_log_length_and_deterministic_best(self, tmp_path):
        ds = _gen(tmp_path)
        args = [
            "search",
            "--data",
            str(ds),
            "--population",
            "3",
            "--generations",
            "2",
            "--eval-epochs",
            "2",
            "--seed",
            "5",
        ]
        assert main(args + ["--out", str(tmp_path / "a.json")]) == 0
        assert main(args + ["--out", str(tmp_path / "b.json")]) == 0
        log_a = (tmp_path / "a_search.jsonl").read_text().strip().split("\n")
        assert len(log_a) == 6
        records = [json.loads(line) for line in log_a]
        for rec in records:
            assert set(rec) == {
                "generation",
                "slot",
                "kind",
                "hidden_units",
                "fitness",
                "accuracy",
                "recall",
            }
            assert 30 <= rec["hidden_units"] <= 100
        assert _sha(tmp_path / "a.json") == _sha(tmp_path / "b.json")
        prov = load_model(tmp_path / "a.json").provenance
        assert prov["best_genome"]["kind"] in ("GRU", "LSTM", "BiLSTM")
        best_fit = max(rec["fitness"] for rec in records)
        assert prov["best_fitness"] == pytest.approx(best_fit)

    def test_forecast_dataset_rejected(self, tmp_path):
        out = tmp_path / "fc.csv"
        main(
            [
                "gen-data",
                "--task",
                "forecast",
                "--n-fall",
                "20",
                "--n-nonfall",
                "0",
                "--theta0-range",
                "0.005",
                "0.05",
                "--seed",
                "5",
                "--out",
                str(out),
            ]
        )
        rc = main(
            [
                "search",
                "--data",
                str(out),
                "--population",
                "2",
                "--generations",
                "1",
                "--eval-epochs",
                "1",
                "--out",
                str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2


class TestStream:
    @pytest.fixture()
    def detector(self, tmp_path):
        ds = _gen(tmp_path)
        return _train_small(tmp_path, ds, epochs="8")

    def test_fall_stream_emits_decisions_after_warmup(self, tmp_path, detector):
        traj = simulate_fall(
            PendulumParams(length=1.8, mass=70.0), PendulumState(theta=0.02, omega=0.0)
        )
        theta = traj.theta[::10]
        src = tmp_path / "in.csv"
        _write_stream_csv(src, theta)
        out = tmp_path / "dec.jsonl"
        rc = main(["stream", "--detector", str(detector), "--input", str(src), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == theta.shape[0] - 100 + 1
        first = json.loads(lines[0])
        assert set(first) >= {"t", "p_falling", "is_falling", "trigger"}
        assert "forecast" not in first
        sidecar = json.loads((tmp_path / "dec.jsonl.meta.json").read_text())
        assert sidecar["samples"] == theta.shape[0]
        assert sidecar["decisions"] == len(lines)

    def test_accepts_trajectory_csv_with_omega_column(self, tmp_path, detector):
        # the simulate subcommand's own output must stream as-is
        src = tmp_path / "fall.csv"
        rc = main(["simulate", "--theta0", "0.02", "--out", str(src)])
        assert rc == 0
        assert src.read_text().startswith("t,theta,omega\n")
        out = tmp_path / "dec.jsonl"
        rc = main(["stream", "--detector", str(detector), "--input", str(src), "--out", str(out)])
        assert rc == 0
        n = src.read_text().strip().count("\n")  # header excluded
        assert len(out.read_text().strip().split("\n")) == n - 100 + 1

    def test_input_shorter_than_window_is_clean_and_silent(self, tmp_path, detector):
        src = tmp_path / "short.csv"
        _write_stream_csv(src, np.full(50, 0.01))
        out = tmp_path / "dec.jsonl"
        rc = main(["stream", "--detector", str(detector), "--input", str(src), "--out", str(out)])
        assert rc == 0
        assert out.read_text() == ""

    def test_malformed_line_is_data_error(self, tmp_path, detector):
        src = tmp_path / "bad.csv"
        src.write_text("t,theta\n0.0,0.01\n0.01,zap\n")
        rc = main(
            [
                "stream",
                "--detector",
                str(detector),
                "--input",
                str(src),
                "--out",
                str(tmp_path / "x.jsonl"),
            ]
        )
        assert rc == 2

    def test_non_finite_sample_is_numeric_error(self, tmp_path, detector):
        src = tmp_path / "nan.csv"
        src.write_text("t,theta\n0.0,nan\n")
        rc = main(
            [
                "stream",
                "--detector",
                str(detector),
                "--input",
                str(src),
                "--out",
                str(tmp_path / "x.jsonl"),
            ]
        )
        assert rc == 3

    def test_non_monotonic_time_is_data_error(self, tmp_path, detector):
        src = tmp_path / "back.csv"
        src.write_text("t,theta\n0.0,0.01\n0.01,0.01\n0.005,0.01\n")
        rc = main(
            [
                "stream",
                "--detector",
                str(detector),
                "--input",
                str(src),
                "--out",
                str(tmp_path / "x.jsonl"),
            ]
        )
        assert rc == 2

    def test_missing_detector_is_data_error(self, tmp_path):
        src = tmp_path / "in.csv"
        _write_stream_csv(src, np.full(10, 0.01))
        rc = main(
            [
                "stream",
                "--detector",
                str(tmp_path / "absent.json"),
                "--input",
                str(src),
                "--out",
                str(tmp_path / "x.jsonl"),
            ]
        )
        assert rc == 2


class TestConvertImu:
    def test_known_rotations(self, tmp_path):
        src = tmp_path / "imu.csv"
        half = math.sqrt(0.5)
        src.write_text(f"t,qw,qx,qy,qz\n0.0,1,0,0,0\n0.01,{half},{half},0,0\n")
        out = tmp_path / "tilt.csv"
        assert main(["convert-imu", "--input", str(src), "--out", str(out)]) == 0
        rows = out.read_text().strip().split("\n")
        assert rows[0] == "t,theta"
        assert float(rows[1].split(",")[1]) == pytest.approx(0.0, abs=1e-12)
        assert float(rows[2].split(",")[1]) == pytest.approx(math.pi / 2, abs=1e-9)

    def test_feeds_stream_end_to_end(self, tmp_path):
        ds = _gen(tmp_path)
        detector = _train_small(tmp_path, ds, epochs="8")
        # quaternion log of a pure x-axis tilt ramp, long enough to warm up
        n = 120
        angles = np.linspace(0.0, 0.3, n)
        rows = ["t,qw,qx,qy,qz"]
        for i, a in enumerate(angles):
            rows.append(f"{i / 100.0},{math.cos(a / 2)},{math.sin(a / 2)},0,0")
        src = tmp_path / "imu.csv"
        src.write_text("\n".join(rows) + "\n")
        tilt = tmp_path / "tilt.csv"
        assert main(["convert-imu", "--input", str(src), "--out", str(tilt)]) == 0
        out = tmp_path / "dec.jsonl"
        rc = main(["stream", "--detector", str(detector), "--input", str(tilt), "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().strip().split("\n")) == n - 100 + 1

    def test_zero_quaternion_is_data_error(self, tmp_path):
        src = tmp_path / "imu.csv"
        src.write_text("t,qw,qx,qy,qz\n0.0,0,0,0,0\n")
        assert main(["convert-imu", "--input", str(src), "--out", str(tmp_path / "x.csv")]) == 2


class TestEval:
    def test_matches_final_history_row_on_train_split(self, tmp_path):
        ds = _gen(tmp_path)
        out = tmp_path / "det.json"
        rc = main(
            [
                "train",
                "--task",
                "detect",
                "--data",
                str(ds),
                "--layers",
                "GRU:8",
                "--epochs",
                "4",
                "--seed",
                "1",
                "--validation-fraction",
                "0",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        report_path = tmp_path / "report.json"
        rc = main(
            ["eval", "--model", str(out), "--data", str(ds), "--out", str(report_path)]
        )
        assert rc == 0
        report = json.loads(report_path.read_text())
        final = (tmp_path / "det_history.csv").read_text().strip().split("\n")[-1].split(",")
        assert report["loss"] == pytest.approx(float(final[1]), rel=1e-12)
        assert report["accuracy"] == pytest.approx(float(final[3]), rel=1e-12)
        assert report["recall"] == pytest.approx(float(final[4]), rel=1e-12)

    def test_confusion_matrix_sums_to_dataset_size(self, tmp_path, capsys):
        ds = _gen(tmp_path)
        model = _train_small(tmp_path, ds)
        rc = main(["eval", "--model", str(model), "--data", str(ds)])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        cm = report["confusion_matrix"]
        assert cm["tp"] + cm["fp"] + cm["fn"] + cm["tn"] == report["n"] == 80
        assert report["task"] == "detect"

    def test_empty_dataset_rejected(self, tmp_path):
        ds = _gen(tmp_path)
        model = _train_small(tmp_path, ds)
        empty = Dataset.load(ds).subset(np.array([], dtype=np.int64))
        empty_path = tmp_path / "empty.csv"
        empty.save(empty_path)
        rc = main(["eval", "--model", str(model), "--data", str(empty_path)])
        assert rc == 2

    def test_window_mismatch_rejected(self, tmp_path):
        ds = _gen(tmp_path)
        model = _train_small(tmp_path, ds)
        other = tmp_path / "w80.csv"
        rc = main(
            [
                "gen-data",
                "--n-fall",
                "30",
                "--n-nonfall",
                "15",
                "--seed",
                "3",
                "--window",
                "80",
                "--out",
                str(other),
            ]
        )
        assert rc == 0
        assert main(["eval", "--model", str(model), "--data", str(other)]) == 2
