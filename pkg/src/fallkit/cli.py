"""Command-line frontend tying the simulation, data, training, and streaming pieces together.

One binary, seven subcommands:

    fallkit simulate     write passive fall trajectories as CSV
    fallkit gen-data     build a labeled window or forecast dataset
    fallkit train        fit a detector or forecaster and save it as JSON
    fallkit search       evolve an architecture, save log + best model
    fallkit stream       push t,theta samples through the realtime monitor
    fallkit convert-imu  map quaternion IMU logs to tilt-angle streams
    fallkit eval         score a saved model against a dataset

Options may come from flags or from a JSON config file with flat sections
(scenario, dataset, network, train, ga, realtime); flags win over file
values, and unknown keys in the file are rejected.  Every artifact carries
the effective configuration, either embedded (model files) or in a
.meta.json sidecar.  Exit codes: 0 success, 1 usage error, 2 data or
format error, 3 numeric failure.  Diagnostics go to the error stream only.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .datagen import (
    DataFormatError,
    Dataset,
    DatasetKind,
    GainError,
    ScenarioConfig,
    build_detection_dataset,
    build_forecast_dataset,
    convert_imu_csv,
)
from .dynamics import (
    AlreadyDownError,
    InertiaModel,
    PendulumParams,
    PendulumState,
    simulate_fall,
    write_trajectory_csv,
)
from .ga import GAConfig, _derived_seed, search, write_search_log
from .model_io import ModelFormatError, load_model, save_model
from .nn import CellKind, HeadKind, LayerSpec, NetworkSpec
from .realtime import DEFAULT_TRIGGER_LEAD, StreamState
from .training import TrainConfig, evaluate, train, write_history_csv

_EVAL_CHUNK = 512


class UsageError(Exception):
    """Bad flags or option values; maps to exit code 1."""


class DataError(Exception):
    """Malformed or mismatched input artifacts; maps to exit code 2."""


class NumericError(Exception):
    """Non-finite values encountered; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    # argparse normally exits 2 on bad flags; route through UsageError so
    # the usage exit code stays 1 and code 2 is reserved for data errors.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# Allowed keys per config-file section, mirrored on the module configs.
_CONFIG_SCHEMA = {
    "scenario": {
        "n_fall",
        "n_nonfall",
        "length_range",
        "mass_range",
        "theta0_range",
        "omega0_range",
        "sensor_rate",
        "noise_sigma",
        "bias_drift_rate",
        "seed",
    },
    "dataset": {
        "task",
        "window",
        "horizon",
        "stride",
        "recovery_fraction",
        "windows_per_class",
    },
    "network": {"layers"},
    "train": {
        "epochs",
        "batch_size",
        "learning_rate",
        "adam_beta1",
        "adam_beta2",
        "adam_epsilon",
        "seed",
        "validation_fraction",
    },
    "ga": {
        "population",
        "generations",
        "eval_epochs",
        "mutation_rate",
        "elitism",
        "weight_accuracy",
        "weight_recall",
        "seed",
    },
    "realtime": {"trigger_lead", "sensor_rate"},
}


def load_config(path) -> dict:
    """Read a JSON config file and reject unknown sections or keys."""
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"config {path}: top level must be an object")
    for section, body in raw.items():
        if section not in _CONFIG_SCHEMA:
            known = ", ".join(sorted(_CONFIG_SCHEMA))
            raise UsageError(f"config {path}: unknown section {section!r} (known: {known})")
        if not isinstance(body, dict):
            raise UsageError(f"config {path}: section {section!r} must be an object")
        for key in body:
            if key not in _CONFIG_SCHEMA[section]:
                allowed = ", ".join(sorted(_CONFIG_SCHEMA[section]))
                raise UsageError(
                    f"config {path}: unknown key {key!r} in section {section!r}"
                    f" (allowed: {allowed})"
                )
    return raw


def _pick(flag_value, section: dict, key: str, default):
    """Flag beats config file beats built-in default."""
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def _range_pair(value, name: str) -> tuple[float, float]:
    try:
        lo, hi = value
        return (float(lo), float(hi))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name} must be a pair of numbers") from exc


def _sidecar_path(path: Path) -> Path:
    if path.suffix:
        return path.with_suffix(path.suffix + ".meta.json")
    return path.with_name(path.name + ".meta.json")


def _write_sidecar(path: Path, payload: dict) -> None:
    with open(_sidecar_path(path), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_layers(text: str) -> tuple[LayerSpec, ...]:
    """Parse 'GRU:50,BiLSTM:30' into layer specs."""
    kinds = {k.value.lower(): k for k in CellKind}
    layers = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise UsageError(f"empty layer entry in {text!r}")
        kind_s, sep, units_s = chunk.partition(":")
        if not sep:
            raise UsageError(f"layer {chunk!r} must look like KIND:UNITS")
        kind = kinds.get(kind_s.strip().lower())
        if kind is None:
            raise UsageError(f"unknown cell kind {kind_s!r} (use GRU, LSTM, or BiLSTM)")
        try:
            units = int(units_s)
        except ValueError as exc:
            raise UsageError(f"layer {chunk!r}: units must be an integer") from exc
        layers.append(LayerSpec(kind=kind, hidden_units=units))
    return tuple(layers)


def _layers_from_config(entries) -> tuple[LayerSpec, ...]:
    kinds = {k.value.lower(): k for k in CellKind}
    layers = []
    for entry in entries:
        if not isinstance(entry, dict) or set(entry) != {"kind", "hidden_units"}:
            raise UsageError("network.layers entries need exactly kind and hidden_units")
        kind = kinds.get(str(entry["kind"]).lower())
        if kind is None:
            raise UsageError(f"unknown cell kind {entry['kind']!r} in network.layers")
        layers.append(LayerSpec(kind=kind, hidden_units=int(entry["hidden_units"])))
    return tuple(layers)


def _layers_payload(spec: NetworkSpec) -> list[dict]:
    return [{"kind": l.kind.value, "hidden_units": l.hidden_units} for l in spec.layers]


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    inertia = InertiaModel.UNIFORM_ROD if args.inertia == "rod" else InertiaModel.POINT_MASS
    params = PendulumParams(
        length=args.length, mass=args.mass, gravity=args.gravity, inertia_model=inertia
    )
    theta_toks = [t.strip() for t in args.theta0.split(",") if t.strip()]
    omega_toks = [t.strip() for t in args.omega0.split(",") if t.strip()]
    if not theta_toks or not omega_toks:
        raise UsageError("--theta0 and --omega0 need at least one value")
    if not args.grid and (len(theta_toks) > 1 or len(omega_toks) > 1):
        raise UsageError("multiple theta0/omega0 values need --grid")
    try:
        thetas = [float(t) for t in theta_toks]
        omegas = [float(t) for t in omega_toks]
    except ValueError as exc:
        raise UsageError(f"bad initial condition: {exc}") from exc

    effective = {
        "command": "simulate",
        "length": args.length,
        "mass": args.mass,
        "gravity": args.gravity,
        "inertia": args.inertia,
        "theta0": thetas,
        "omega0": omegas,
        "dt": args.dt,
        "max_t": args.max_t,
        "grid": bool(args.grid),
    }

    if args.grid:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for t_tok, theta in zip(theta_toks, thetas):
            for o_tok, omega in zip(omega_toks, omegas):
                traj = simulate_fall(
                    params, PendulumState(theta=theta, omega=omega), dt=args.dt, max_t=args.max_t
                )
                name = f"fall_theta{t_tok}_omega{o_tok}.csv"
                write_trajectory_csv(traj, out_dir / name)
                written.append(name)
        _write_sidecar(out_dir / "grid", {**effective, "files": written})
        _info(f"wrote {len(written)} trajectories to {out_dir}")
    else:
        traj = simulate_fall(
            params, PendulumState(theta=thetas[0], omega=omegas[0]), dt=args.dt, max_t=args.max_t
        )
        out = Path(args.out)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, out)
        _write_sidecar(out, {**effective, "termination": traj.terminated_by.value})
        _info(f"wrote {traj.theta.shape[0]} samples to {out} ({traj.terminated_by.value})")
    return 0


# ---------------------------------------------------------------------------
# gen-data


def _scenario_from(args, cfg: dict) -> ScenarioConfig:
    sec = cfg.get("scenario", {})
    length_range = _pick(args.length_range, sec, "length_range", (1.5, 2.0))
    mass_range = _pick(args.mass_range, sec, "mass_range", (50.0, 100.0))
    theta0_range = _pick(args.theta0_range, sec, "theta0_range", (0.0, 0.3))
    omega0_range = _pick(args.omega0_range, sec, "omega0_range", (0.0, 0.5))
    try:
        return ScenarioConfig(
            n_fall=int(_pick(args.n_fall, sec, "n_fall", 500)),
            n_nonfall=int(_pick(args.n_nonfall, sec, "n_nonfall", 500)),
            length_range=_range_pair(length_range, "length-range"),
            mass_range=_range_pair(mass_range, "mass-range"),
            theta0_range=_range_pair(theta0_range, "theta0-range"),
            omega0_range=_range_pair(omega0_range, "omega0-range"),
            sensor_rate=float(_pick(args.sensor_rate, sec, "sensor_rate", 100.0)),
            noise_sigma=float(_pick(args.noise_sigma, sec, "noise_sigma", 0.0)),
            bias_drift_rate=float(_pick(args.bias_drift_rate, sec, "bias_drift_rate", 0.0)),
            seed=int(_pick(args.seed, sec, "seed", 0)),
        )
    except ValueError as exc:
        raise UsageError(f"bad scenario configuration: {exc}") from exc


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    dsec = cfg.get("dataset", {})
    task = _pick(args.task, dsec, "task", "detect")
    if task not in ("detect", "forecast"):
        raise UsageError(f"task must be detect or forecast, not {task!r}")
    scenario = _scenario_from(args, cfg)
    W = int(_pick(args.window, dsec, "window", 100))
    H = int(_pick(args.horizon, dsec, "horizon", 50))
    stride = int(_pick(args.stride, dsec, "stride", 10))
    recovery_fraction = float(_pick(args.recovery_fraction, dsec, "recovery_fraction", 0.3))
    windows_per_class = _pick(args.windows_per_class, dsec, "windows_per_class", None)
    if windows_per_class is not None:
        windows_per_class = int(windows_per_class)
    workers = args.workers if args.workers is not None else 1

    if scenario.n_fall + scenario.n_nonfall == 0:
        raise UsageError("nothing to generate: n_fall and n_nonfall are both 0")
    if task == "forecast" and scenario.n_fall == 0:
        raise UsageError("forecast datasets need n_fall > 0")

    try:
        if task == "detect":
            ds = build_detection_dataset(
                scenario,
                W=W,
                stride=stride,
                recovery_fraction=recovery_fraction,
                windows_per_class=windows_per_class,
                workers=workers,
            )
        else:
            ds = build_forecast_dataset(scenario, W=W, H=H, stride=stride, workers=workers)
    except ValueError as exc:
        raise UsageError(f"bad dataset configuration: {exc}") from exc

    ds.metadata["effective_config"] = {
        "command": "gen-data",
        "scenario": asdict(scenario),
        "dataset": {
            "task": task,
            "window": W,
            "horizon": H,
            "stride": stride,
            "recovery_fraction": recovery_fraction,
            "windows_per_class": windows_per_class,
        },
        "workers": workers,
    }
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    ds.save(out)
    _info(f"wrote {len(ds)} {task} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _train_config_from(args, cfg: dict, default_epochs: int = 100) -> TrainConfig:
    sec = cfg.get("train", {})
    try:
        return TrainConfig(
            epochs=int(_pick(args.epochs, sec, "epochs", default_epochs)),
            batch_size=int(_pick(args.batch_size, sec, "batch_size", 32)),
            learning_rate=float(_pick(args.learning_rate, sec, "learning_rate", 1e-3)),
            adam_beta1=float(_pick(args.adam_beta1, sec, "adam_beta1", 0.9)),
            adam_beta2=float(_pick(args.adam_beta2, sec, "adam_beta2", 0.999)),
            adam_epsilon=float(_pick(args.adam_epsilon, sec, "adam_epsilon", 1e-8)),
            seed=int(_pick(args.train_seed, sec, "seed", 0)),
            validation_fraction=float(
                _pick(args.validation_fraction, sec, "validation_fraction", 0.2)
            ),
        )
    except ValueError as exc:
        raise UsageError(f"bad training configuration: {exc}") from exc


def _load_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    return Dataset.load(path)


def _input_meta(ds: Dataset) -> dict:
    return {"W": ds.W, "H": ds.H, "sensor_rate": ds.sensor_rate}


def cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    ds = _load_dataset(args.data)
    expected_kind = DatasetKind.DETECTION if args.task == "detect" else DatasetKind.FORECAST
    if ds.kind is not expected_kind:
        raise DataError(
            f"{args.data} holds a {ds.kind.value} dataset but task is {args.task}"
        )
    if len(ds) == 0:
        raise DataError(f"{args.data} holds no rows")

    nsec = cfg.get("network", {})
    if args.layers is not None:
        layers = _parse_layers(args.layers)
    elif "layers" in nsec:
        layers = _layers_from_config(nsec["layers"])
    elif args.task == "detect":
        layers = (LayerSpec(kind=CellKind.GRU, hidden_units=100),)
    else:
        layers = (
            LayerSpec(kind=CellKind.GRU, hidden_units=100),
            LayerSpec(kind=CellKind.GRU, hidden_units=100),
        )
    head = HeadKind.SIGMOID if args.task == "detect" else HeadKind.LINEAR
    output_dim = 1 if args.task == "detect" else ds.H
    try:
        spec = NetworkSpec(input_dim=1, layers=layers, head=head, output_dim=output_dim)
    except ValueError as exc:
        raise UsageError(f"bad network specification: {exc}") from exc

    config = _train_config_from(args, cfg)
    try:
        result = train(ds, spec, config)
    except ValueError as exc:
        raise DataError(f"training failed: {exc}") from exc

    effective = {
        "command": "train",
        "task": args.task,
        "data": str(args.data),
        "network": {"layers": _layers_payload(spec)},
        "train": asdict(config),
        "dataset_metadata": ds.metadata,
    }

    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_model(result.network, out, input_meta=_input_meta(ds), provenance=effective)
    history_path = (
        Path(args.history) if args.history else out.with_suffix("").with_name(out.stem + "_history.csv")
    )
    write_history_csv(result.history, history_path)
    _write_sidecar(history_path, effective)
    if result.history:
        last = result.history[-1]
        tail = f"loss={last.loss:.6g}"
        if last.accuracy is not None:
            tail += f" accuracy={last.accuracy:.4f} recall={last.recall:.4f}"
        _info(f"trained {config.epochs} epochs: {tail}")
    _info(f"wrote model to {out} and history to {history_path}")
    return 0


# ---------------------------------------------------------------------------
# search


def cmd_search(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    sec = cfg.get("ga", {})
    ds = _load_dataset(args.data)
    if ds.kind is not DatasetKind.DETECTION:
        raise DataError(f"{args.data}: architecture search needs a detection dataset")
    try:
        ga_config = GAConfig(
            population=int(_pick(args.population, sec, "population", 10)),
            generations=int(_pick(args.generations, sec, "generations", 10)),
            eval_epochs=int(_pick(args.eval_epochs, sec, "eval_epochs", 100)),
            mutation_rate=float(_pick(args.mutation_rate, sec, "mutation_rate", 0.3)),
            elitism=int(_pick(args.elitism, sec, "elitism", 1)),
            weight_accuracy=float(_pick(args.weight_accuracy, sec, "weight_accuracy", 0.5)),
            weight_recall=float(_pick(args.weight_recall, sec, "weight_recall", 0.5)),
            seed=int(_pick(args.seed, sec, "seed", 0)),
        )
    except ValueError as exc:
        raise UsageError(f"bad search configuration: {exc}") from exc
    workers = args.workers if args.workers is not None else 1

    result = search(ds, ga_config, workers=workers)

    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    log_path = (
        Path(args.log) if args.log else out.with_suffix("").with_name(out.stem + "_search.jsonl")
    )
    write_search_log(result, log_path)

    # Retrain the winner with its evaluation seed; determinism makes this
    # bit-identical to the network that earned the logged fitness.
    records = result.evaluations
    best_record = max(records, key=lambda r: (r.fitness, -r.generation, -r.slot))
    train_seed = _derived_seed(ga_config.seed, best_record.generation, best_record.slot)
    train_result = train(
        ds,
        result.best_genome.to_spec(),
        TrainConfig(epochs=ga_config.eval_epochs, seed=train_seed),
    )
    effective = {
        "command": "search",
        "data": str(args.data),
        "ga": asdict(ga_config),
        "workers": workers,
        "best_genome": {
            "kind": result.best_genome.kind.value,
            "hidden_units": result.best_genome.hidden_units,
        },
        "best_fitness": result.best_fitness,
        "dataset_metadata": ds.metadata,
    }
    save_model(train_result.network, out, input_meta=_input_meta(ds), provenance=effective)
    _info(
        f"best genome {result.best_genome.kind.value}-{result.best_genome.hidden_units}"
        f" fitness={result.best_fitness:.4f} after {len(records)} evaluations"
    )
    _info(f"wrote model to {out} and log to {log_path}")
    return 0


# ---------------------------------------------------------------------------
# stream


def _open_maybe_stdio(path: str, mode: str):
    if path == "-":
        return (sys.stdin if mode == "r" else sys.stdout), False
    return open(path, mode), True


def _load_network(path, role: str):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{role} model not found: {path}")
    return load_model(path)


def cmd_stream(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    sec = cfg.get("realtime", {})
    detector = _load_network(args.detector, "detector")
    forecaster = _load_network(args.forecaster, "forecaster") if args.forecaster else None

    W = int(detector.input_meta["W"])
    sensor_rate = float(
        _pick(args.sensor_rate, sec, "sensor_rate", detector.input_meta["sensor_rate"])
    )
    trigger_lead = float(_pick(args.trigger_lead, sec, "trigger_lead", DEFAULT_TRIGGER_LEAD))
    if forecaster is not None and int(forecaster.input_meta["W"]) != W:
        raise DataError(
            f"forecaster window {forecaster.input_meta['W']} does not match detector window {W}"
        )
    try:
        state = StreamState(
            detector.network,
            forecaster.network if forecaster is not None else None,
            W=W,
            sensor_rate=sensor_rate,
            trigger_lead=trigger_lead,
        )
    except ValueError as exc:
        raise DataError(f"incompatible models: {exc}") from exc

    in_fh, close_in = _open_maybe_stdio(args.input, "r")
    out_fh, close_out = _open_maybe_stdio(args.out, "w")
    emitted = 0
    total = 0
    try:
        for lineno, line in enumerate(in_fh, start=1):
            text = line.strip()
            if not text:
                continue
            if lineno == 1 and text in ("t,theta", "t,theta,omega"):
                continue
            parts = text.split(",")
            # a trajectory CSV's omega column rides along unused
            if len(parts) not in (2, 3):
                raise DataError(
                    f"line {lineno}: expected 't,theta' or 't,theta,omega', got {text!r}")
            try:
                values = [float(p) for p in parts]
            except ValueError as exc:
                raise DataError(f"line {lineno}: non-numeric field in {text!r}") from exc
            t, theta = values[0], values[1]
            if not (math.isfinite(t) and math.isfinite(theta)):
                raise NumericError(f"line {lineno}: non-finite sample {text!r}")
            try:
                decision = state.push_sample(t, theta)
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
            total += 1
            if decision.p_falling is not None:
                out_fh.write(decision.to_json())
                out_fh.write("\n")
                emitted += 1
    finally:
        if close_in:
            in_fh.close()
        if close_out:
            out_fh.close()
        else:
            out_fh.flush()

    if close_out:
        _write_sidecar(
            Path(args.out),
            {
                "command": "stream",
                "detector": str(args.detector),
                "forecaster": str(args.forecaster) if args.forecaster else None,
                "input": str(args.input),
                "window": W,
                "sensor_rate": sensor_rate,
                "trigger_lead": trigger_lead,
                "samples": total,
                "decisions": emitted,
            },
        )
    _info(f"consumed {total} samples, emitted {emitted} decisions")
    return 0


# ---------------------------------------------------------------------------
# convert-imu


def cmd_convert_imu(args) -> int:
    src = Path(args.input)
    if not src.exists():
        raise DataError(f"input not found: {src}")
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    body_axis = tuple(args.body_axis) if args.body_axis is not None else (0.0, 0.0, 1.0)
    n = convert_imu_csv(src, out, body_axis=body_axis)
    _write_sidecar(
        out,
        {
            "command": "convert-imu",
            "input": str(src),
            "body_axis": list(body_axis),
            "rows": n,
        },
    )
    _info(f"converted {n} samples to {out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _batched_outputs(network, X: np.ndarray) -> np.ndarray:
    outs = [network.forward(X[i : i + _EVAL_CHUNK])[0] for i in range(0, X.shape[0], _EVAL_CHUNK)]
    return np.concatenate(outs, axis=0)


def cmd_eval(args) -> int:
    loaded = _load_network(args.model, "model")
    ds = _load_dataset(args.data)
    if len(ds) == 0:
        raise DataError(f"{args.data} holds no rows; nothing to evaluate")
    if ds.W != int(loaded.input_meta["W"]):
        raise DataError(
            f"dataset window {ds.W} does not match model window {loaded.input_meta['W']}"
        )
    head = loaded.network.spec.head
    if ds.kind is DatasetKind.DETECTION and head is not HeadKind.SIGMOID:
        raise DataError("detection datasets need a sigmoid-head model")
    if ds.kind is DatasetKind.FORECAST:
        if head is not HeadKind.LINEAR:
            raise DataError("forecast datasets need a linear-head model")
        if loaded.network.spec.output_dim != ds.H:
            raise DataError(
                f"model forecasts {loaded.network.spec.output_dim} steps"
                f" but dataset horizon is {ds.H}"
            )

    metrics = evaluate(loaded.network, ds)
    report: dict = {"n": len(ds), "loss": metrics.loss}
    if ds.kind is DatasetKind.DETECTION:
        p = _batched_outputs(loaded.network, ds.angles)
        pred = p > 0.5
        actual = ds.labels.astype(bool)
        tp = int(np.sum(pred & actual))
        fp = int(np.sum(pred & ~actual))
        fn = int(np.sum(~pred & actual))
        tn = int(np.sum(~pred & ~actual))
        report.update(
            {
                "task": "detect",
                "accuracy": metrics.accuracy,
                "recall": metrics.recall,
                "precision": metrics.precision,
                "confusion_matrix": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
            }
        )
    else:
        report.update({"task": "forecast", "rmse": math.sqrt(metrics.loss)})

    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            fh.write(text)
        _write_sidecar(out, {"command": "eval", "model": str(args.model), "data": str(args.data)})
        _info(f"wrote report to {out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="fallkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("simulate", help="write passive fall trajectories as CSV")
    p.add_argument("--length", type=float, default=1.8, help="pendulum length in m")
    p.add_argument("--mass", type=float, default=70.0, help="mass in kg")
    p.add_argument("--gravity", type=float, default=9.81)
    p.add_argument("--inertia", choices=("rod", "point"), default="rod")
    p.add_argument("--theta0", default="0.1", help="initial angle(s), comma separated with --grid")
    p.add_argument("--omega0", default="0.0", help="initial rate(s), comma separated with --grid")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--max-t", type=float, default=30.0)
    p.add_argument("--grid", action="store_true", help="emit one file per (theta0, omega0) pair")
    p.add_argument("-o", "--out", required=True, help="output CSV (directory with --grid)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-data", help="build a labeled window or forecast dataset")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--task", choices=("detect", "forecast"))
    p.add_argument("--n-fall", type=int)
    p.add_argument("--n-nonfall", type=int)
    p.add_argument("--length-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--mass-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--theta0-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--omega0-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--sensor-rate", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--bias-drift-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int, help="input window length in samples")
    p.add_argument("--horizon", type=int, help="forecast horizon in samples")
    p.add_argument("--stride", type=int)
    p.add_argument("--recovery-fraction", type=float)
    p.add_argument("--windows-per-class", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("-o", "--out", required=True, help="output dataset CSV")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit a detector or forecaster and save it as JSON")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--task", choices=("detect", "forecast"), default="detect")
    p.add_argument("--data", required=True, help="dataset CSV from gen-data")
    p.add_argument("--layers", help="architecture, e.g. GRU:100 or GRU:100,GRU:100")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--adam-beta1", type=float)
    p.add_argument("--adam-beta2", type=float)
    p.add_argument("--adam-epsilon", type=float)
    p.add_argument("--seed", dest="train_seed", type=int)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--history", help="history CSV path (default <out>_history.csv)")
    p.add_argument("-o", "--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="evolve an architecture, save log + best model")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--data", required=True, help="detection dataset CSV")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--eval-epochs", type=int)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--elitism", type=int)
    p.add_argument("--weight-accuracy", type=float)
    p.add_argument("--weight-recall", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--log", help="evaluation log path (default <out>_search.jsonl)")
    p.add_argument("-o", "--out", required=True, help="output model JSON for the best genome")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("stream", help="push t,theta samples through the realtime monitor")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--detector", required=True, help="detector model JSON")
    p.add_argument("--forecaster", help="optional forecaster model JSON")
    p.add_argument("--input", default="-", help="t,theta lines; - for standard input")
    p.add_argument("--sensor-rate", type=float)
    p.add_argument("--trigger-lead", type=float)
    p.add_argument("-o", "--out", default="-", help="decision JSONL; - for standard output")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("convert-imu", help="map quaternion IMU logs to tilt-angle streams")
    p.add_argument("--input", required=True, help="CSV with t,qw,qx,qy,qz columns")
    p.add_argument("--body-axis", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("-o", "--out", required=True, help="output t,theta CSV")
    p.set_defaults(func=cmd_convert_imu)

    p = sub.add_parser("eval", help="score a saved model against a dataset")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("-o", "--out", help="write the JSON report here instead of standard output")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError(f"{parser.prog}: a command is required (see fallkit --help)")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, ModelFormatError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AlreadyDownError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GainError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
