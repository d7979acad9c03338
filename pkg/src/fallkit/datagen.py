"""Synthetic supervised datasets built on the pendulum simulator.

Fall scenarios are passive releases; the negative class is PD-stabilized
sway plus recovery maneuvers (a brief passive fall caught by a torque-
limited controller).  Angle series are corrupted with sensor noise and
bias drift, then cut into fixed-length windows for detection or into
input/target pairs for forecasting.

Everything is a pure function of (config, seed): each scenario derives
its own random stream from (seed, stream tag, scenario index), so a
parallel generation schedule produces the same dataset as a sequential
one, byte for byte.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import partial
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import (
    FLOOR_ANGLE,
    AlreadyDownError,
    PendulumParams,
    PendulumState,
    Termination,
    Trajectory,
)

# Integration always runs at 1 kHz and is decimated down to the sensor rate.
SIM_DT = 1e-3

# Non-fall sway must stay strictly inside this bound so label 0 is sound.
MAX_SWAY_ANGLE = 0.35

# A recovery counts as such once the controller has the angle back here.
SETTLE_ANGLE = 0.1

# Perturbation torque for sway: OU process, time constant and stationary
# std as a fraction of the gravity torque scale m*g*d.
PERT_TIME_CONST = 0.5
PERT_SIGMA_FRAC = 0.04

_FMT = "%.17g"

# Stream tags keeping per-purpose random draws independent per scenario.
_STREAM_SCENARIO = 1
_STREAM_NOISE = 2
_STREAM_SWAY = 3
_STREAM_RECOVERY = 4
_STREAM_SUBSAMPLE = 5


class DataFormatError(ValueError):
    """A data file does not match its expected format."""


class GainError(RuntimeError):
    """Stabilized sway exceeded the non-fall angle bound on every attempt."""


def _check_range(name: str, rng: tuple) -> None:
    lo, hi = rng
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"{name} must be a finite [min, max] with min <= max, got {rng}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Randomized scenario ranges plus sensor and noise settings."""

    n_fall: int = 1000
    n_nonfall: int = 1000
    length_range: tuple[float, float] = (1.5, 2.0)
    mass_range: tuple[float, float] = (50.0, 100.0)
    theta0_range: tuple[float, float] = (0.0, 0.3)
    omega0_range: tuple[float, float] = (0.0, 0.5)
    sensor_rate: float = 100.0
    noise_sigma: float = 0.01
    bias_drift_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_fall < 0 or self.n_nonfall < 0:
            raise ValueError("scenario counts must be nonnegative")
        _check_range("length_range", self.length_range)
        _check_range("mass_range", self.mass_range)
        _check_range("theta0_range", self.theta0_range)
        _check_range("omega0_range", self.omega0_range)
        if self.length_range[0] <= 0.0 or self.mass_range[0] <= 0.0:
            raise ValueError("length and mass must be positive")
        if self.theta0_range[0] < 0.0 or self.theta0_range[1] >= FLOOR_ANGLE:
            raise ValueError(f"theta0_range must lie in [0, pi/2), got {self.theta0_range}")
        if self.sensor_rate <= 0.0:
            raise ValueError("sensor_rate must be positive")
        if self.noise_sigma < 0.0 or self.bias_drift_rate < 0.0:
            raise ValueError("noise_sigma and bias_drift_rate must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def _decimation_stride(sensor_rate: float) -> int:
    k = 1.0 / (sensor_rate * SIM_DT)
    stride = round(k)
    if stride < 1 or abs(k - stride) > 1e-9:
        raise ValueError(
            f"sensor_rate {sensor_rate} Hz must evenly divide the {1.0 / SIM_DT:.0f} Hz simulation rate"
        )
    return stride


def _scenario_draw(config: ScenarioConfig, index: int) -> tuple[PendulumParams, PendulumState]:
    rng = np.random.default_rng((config.seed, _STREAM_SCENARIO, index))
    length = rng.uniform(*config.length_range)
    mass = rng.uniform(*config.mass_range)
    theta0 = rng.uniform(*config.theta0_range)
    omega0 = rng.uniform(*config.omega0_range)
    return PendulumParams(length, mass), PendulumState(theta0, omega0)


def sample_scenarios(config: ScenarioConfig) -> list[tuple[PendulumParams, PendulumState]]:
    """Draw all n_fall + n_nonfall scenarios for a config.

    Scenario i draws from its own random stream, so the list is identical
    no matter how generation is later scheduled across workers.  The first
    n_fall entries are the fall scenarios.
    """
    return [_scenario_draw(config, i) for i in range(config.n_fall + config.n_nonfall)]


def generate_fall(
    params: PendulumParams,
    initial: PendulumState,
    sensor_rate: float,
    max_duration: float = 30.0,
) -> Trajectory:
    """Passive fall sampled at the sensor rate (simulated at 1 kHz)."""
    stride = _decimation_stride(sensor_rate)
    if abs(initial.theta) >= FLOOR_ANGLE:
        raise AlreadyDownError(f"initial theta {initial.theta} is already at or past pi/2")
    n_rec = int(round(max_duration * sensor_rate))
    thetas, omegas, stop_idx = _kernels.passive_trajectory(
        params.accel_coeff, initial.theta, initial.omega, SIM_DT, stride, n_rec, FLOOR_ANGLE, 0
    )
    dt = 1.0 / sensor_rate
    t = initial.t + dt * np.arange(thetas.shape[0])
    term = Termination.IMPACT if stop_idx >= 0 else Termination.TIMEOUT
    return Trajectory(dt=dt, t=t, theta=thetas, omega=omegas, terminated_by=term)


def generate_nonfall(
    params: PendulumParams,
    sensor_rate: float,
    duration: float,
    seed,
    initial: PendulumState | None = None,
    pert_sigma: float | None = None,
) -> Trajectory:
    """Bounded sway: the same pendulum held up by an ankle torque.

    The torque is u = -Kp*theta - Kd*omega plus a band-limited random
    perturbation (gains critically damp the linearized pendulum).  The
    result is guaranteed to satisfy max|theta| < MAX_SWAY_ANGLE; if a
    perturbation draw violates that, it is redrawn, at most 10 times,
    after which GainError signals mis-tuned gains.  When `initial` is
    omitted a small starting state is drawn from the seed.
    """
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    stride = _decimation_stride(sensor_rate)
    n_rec = int(round(duration * sensor_rate))
    rng = np.random.default_rng(seed)
    if initial is None:
        initial = PendulumState(rng.uniform(0.0, 0.15), rng.uniform(0.0, 0.2))

    mgd = params.mass * params.gravity * params.com_distance
    kp = 2.0 * mgd
    kd = 2.0 * math.sqrt(params.inertia * kp)
    sigma = PERT_SIGMA_FRAC * mgd if pert_sigma is None else pert_sigma
    phi = math.exp(-SIM_DT / PERT_TIME_CONST)
    scale = sigma * math.sqrt(1.0 - phi * phi)

    n_sim = n_rec * stride
    dt = 1.0 / sensor_rate
    for _ in range(10):
        pert = _kernels.ar1_series(phi, scale, rng.standard_normal(n_sim))
        thetas, omegas, max_abs = _kernels.stabilized_trajectory(
            params.accel_coeff,
            1.0 / params.inertia,
            initial.theta,
            initial.omega,
            SIM_DT,
            stride,
            n_rec,
            kp,
            kd,
            1e18,
            pert,
        )
        if max_abs < MAX_SWAY_ANGLE:
            t = initial.t + dt * np.arange(thetas.shape[0])
            return Trajectory(dt=dt, t=t, theta=thetas, omega=omegas, terminated_by=Termination.RECOVERED)
    raise GainError(
        f"sway exceeded {MAX_SWAY_ANGLE} rad on 10 consecutive perturbation draws "
        f"(initial theta {initial.theta}, omega {initial.omega})"
    )


def generate_recovery(
    params: PendulumParams,
    initial: PendulumState,
    t_react: float,
    sensor_rate: float,
    duration: float = 5.0,
    tau_limit: float | None = None,
) -> Trajectory:
    """A fall caught late: passive for t_react, then torque-limited PD.

    The default torque limit is 0.8*m*g*d, below the gravity torque at the
    floor, so steep or fast starts genuinely cannot be saved.  The outcome
    is reported through terminated_by: Recovered when the controller has
    theta (and omega) back under SETTLE_ANGLE by the end of `duration`,
    Impact when the floor is reached anyway (the sample is a genuine fall,
    not an error), Timeout when neither happened in time.
    """
    if t_react < 0.0:
        raise ValueError(f"t_react must be nonnegative, got {t_react}")
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    stride = _decimation_stride(sensor_rate)
    if abs(initial.theta) >= FLOOR_ANGLE:
        raise AlreadyDownError(f"initial theta {initial.theta} is already at or past pi/2")

    mgd = params.mass * params.gravity * params.com_distance
    kp = 2.0 * mgd
    kd = 2.0 * math.sqrt(params.inertia * kp)
    if tau_limit is None:
        tau_limit = 0.8 * mgd

    n_rec = int(round(duration * sensor_rate))
    react_steps = int(round(t_react / SIM_DT))
    thetas, omegas, stop_idx = _kernels.recovery_trajectory(
        params.accel_coeff,
        1.0 / params.inertia,
        initial.theta,
        initial.omega,
        SIM_DT,
        stride,
        n_rec,
        react_steps,
        kp,
        kd,
        tau_limit,
        FLOOR_ANGLE,
    )
    if stop_idx >= 0:
        term = Termination.IMPACT
    elif abs(thetas[-1]) < SETTLE_ANGLE and abs(omegas[-1]) < SETTLE_ANGLE:
        term = Termination.RECOVERED
    else:
        term = Termination.TIMEOUT
    dt = 1.0 / sensor_rate
    t = initial.t + dt * np.arange(thetas.shape[0])
    return Trajectory(dt=dt, t=t, theta=thetas, omega=omegas, terminated_by=term)


def corrupt(traj: Trajectory, noise_sigma: float, bias_drift_rate: float, seed) -> np.ndarray:
    """Angle series plus white sensor noise and a linear bias drift."""
    if noise_sigma < 0.0 or bias_drift_rate < 0.0:
        raise ValueError("noise_sigma and bias_drift_rate must be nonnegative")
    angles = traj.theta.astype(float, copy=True)
    if bias_drift_rate != 0.0:
        angles += bias_drift_rate * traj.t
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        angles += rng.normal(0.0, noise_sigma, angles.shape[0])
    return angles


@dataclass(frozen=True)
class SourceInfo:
    """Identity and labeling anchor of one generated angle series.

    fall_onset is the time (s) from which windows count as falling; None
    marks a series that never falls (sway and successful recoveries).
    """

    source_id: str
    fall_onset: float | None = None


@dataclass
class LabeledWindow:
    angles: np.ndarray
    label: int
    source_id: str


@dataclass
class ForecastPair:
    input: np.ndarray
    target: np.ndarray


def _window_matrix(angles: np.ndarray, W: int, stride: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(angles, W)[::stride]
    return np.ascontiguousarray(view)


def _window_labels(n: int, W: int, stride: int, sensor_rate: float, fall_onset: float | None) -> np.ndarray:
    starts = np.arange(0, n - W + 1, stride)
    if fall_onset is None:
        return np.zeros(starts.shape[0], dtype=np.int64)
    final_t = (starts + W - 1) / sensor_rate
    return (final_t >= fall_onset).astype(np.int64)


def windowize_detection(
    angles, sensor_rate: float, W: int, stride: int, fall_meta: SourceInfo
) -> list[LabeledWindow]:
    """Sliding windows with the fall/not-fall label of their final sample."""
    angles = np.asarray(angles, dtype=float)
    if W < 1 or stride < 1:
        raise ValueError(f"W and stride must be >= 1, got W={W}, stride={stride}")
    if angles.shape[0] < W:
        raise ValueError(f"sequence of length {angles.shape[0]} is shorter than W={W}")
    if not np.all(np.isfinite(angles)):
        raise ValueError("angle sequence contains non-finite values")
    mat = _window_matrix(angles, W, stride)
    labels = _window_labels(angles.shape[0], W, stride, sensor_rate, fall_meta.fall_onset)
    return [
        LabeledWindow(mat[k], int(labels[k]), fall_meta.source_id) for k in range(mat.shape[0])
    ]


def make_forecast_pairs(angles, W: int, H: int, stride: int) -> list[ForecastPair]:
    """Input windows of length W with the immediately following H samples."""
    angles = np.asarray(angles, dtype=float)
    if W < 1 or H < 1 or stride < 1:
        raise ValueError(f"W, H and stride must be >= 1, got W={W}, H={H}, stride={stride}")
    if angles.shape[0] < W + H:
        raise ValueError(f"sequence of length {angles.shape[0]} is shorter than W+H={W + H}")
    pairs = []
    for start in range(0, angles.shape[0] - W - H + 1, stride):
        pairs.append(
            ForecastPair(
                input=angles[start : start + W].copy(),
                target=angles[start + W : start + W + H].copy(),
            )
        )
    return pairs


def quaternion_to_tilt(q, body_axis=(0.0, 0.0, 1.0)) -> float:
    """Tilt of the rotated body axis against the world up vector (0,0,1).

    q is a (w, x, y, z) quaternion; it is normalized before use and a zero
    quaternion is rejected.  Returns the angle in [0, pi].
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    if not math.isfinite(norm) or norm < 1e-12:
        raise ValueError("zero or non-finite quaternion")
    w, x, y, z = q / norm
    axis = np.asarray(body_axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError(f"body_axis must have 3 components, got shape {axis.shape}")
    if abs(float(np.linalg.norm(axis)) - 1.0) > 1e-6:
        raise ValueError("body_axis must be a unit vector")
    u = np.array([x, y, z])
    t2 = 2.0 * np.cross(u, axis)
    rotated = axis + w * t2 + np.cross(u, t2)
    return float(np.arccos(np.clip(rotated[2], -1.0, 1.0)))


class DatasetKind(Enum):
    DETECTION = "detection"
    FORECAST = "forecast"


@dataclass
class Dataset:
    """Windowed examples plus enough metadata to reproduce them.

    angles holds the (N, W) input windows; detection sets carry labels,
    forecast sets carry (N, H) targets.
    """

    kind: DatasetKind
    angles: np.ndarray
    source_ids: list[str]
    sensor_rate: float
    W: int
    H: int = 0
    labels: np.ndarray | None = None
    targets: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.angles.ndim != 2 or self.angles.shape[1] != self.W:
            raise ValueError(f"angles must be (N, {self.W}), got {self.angles.shape}")
        n = self.angles.shape[0]
        if len(self.source_ids) != n:
            raise ValueError("source_ids length must match the number of rows")
        if self.kind is DatasetKind.DETECTION:
            if self.H != 0 or self.targets is not None:
                raise ValueError("detection datasets have H=0 and no targets")
            if self.labels is None or self.labels.shape != (n,):
                raise ValueError("detection datasets need one label per row")
        else:
            if self.labels is not None:
                raise ValueError("forecast datasets have no labels")
            if self.H < 1 or self.targets is None or self.targets.shape != (n, self.H):
                raise ValueError(f"forecast targets must be (N, {self.H})")

    def __len__(self) -> int:
        return self.angles.shape[0]

    def class_counts(self) -> tuple[int, int]:
        """(negatives, positives); detection sets only."""
        if self.kind is not DatasetKind.DETECTION:
            raise ValueError("class_counts is only defined for detection datasets")
        pos = int(np.sum(self.labels == 1))
        return len(self) - pos, pos

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            kind=self.kind,
            angles=self.angles[indices].copy(),
            source_ids=[self.source_ids[int(i)] for i in indices],
            sensor_rate=self.sensor_rate,
            W=self.W,
            H=self.H,
            labels=None if self.labels is None else self.labels[indices].copy(),
            targets=None if self.targets is None else self.targets[indices].copy(),
            metadata=dict(self.metadata),
        )

    def save(self, path) -> None:
        """Write the CSV plus its .meta.json sidecar."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            a_cols = ",".join(f"a_{i}" for i in range(self.W))
            if self.kind is DatasetKind.DETECTION:
                fh.write(f"source_id,label,{a_cols}\n")
                for sid, label, row in zip(self.source_ids, self.labels, self.angles):
                    fh.write(f"{sid},{int(label)},")
                    fh.write(",".join(_FMT % v for v in row))
                    fh.write("\n")
            else:
                t_cols = ",".join(f"t_{i}" for i in range(self.H))
                fh.write(f"source_id,{a_cols},{t_cols}\n")
                for sid, row, tgt in zip(self.source_ids, self.angles, self.targets):
                    fh.write(f"{sid},")
                    fh.write(",".join(_FMT % v for v in row))
                    fh.write(",")
                    fh.write(",".join(_FMT % v for v in tgt))
                    fh.write("\n")
        meta = {
            "format": self.kind.value,
            "W": self.W,
            "H": self.H,
            "sensor_rate": self.sensor_rate,
            "n_rows": len(self),
            "metadata": self.metadata,
        }
        with open(_meta_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Dataset":
        path = Path(path)
        meta_file = _meta_path(path)
        if not meta_file.exists():
            raise DataFormatError(f"missing dataset sidecar {meta_file}")
        with open(meta_file) as fh:
            try:
                meta = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON in {meta_file}: {exc}") from exc
        try:
            kind = DatasetKind(meta["format"])
            W = int(meta["W"])
            H = int(meta["H"])
            sensor_rate = float(meta["sensor_rate"])
        except (KeyError, ValueError) as exc:
            raise DataFormatError(f"bad dataset sidecar {meta_file}: {exc}") from exc

        with open(path, newline="") as fh:
            header = fh.readline().rstrip("\n")
            expected = _csv_header(kind, W, H)
            if header != expected:
                raise DataFormatError(f"{path}: unexpected header (expected {expected!r})")
            ids: list[str] = []
            labels: list[int] = []
            numeric: list[np.ndarray] = []
            want = (2 if kind is DatasetKind.DETECTION else 1) + W + H
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(",")
                if len(parts) != want:
                    raise DataFormatError(f"{path}:{lineno}: expected {want} fields, got {len(parts)}")
                ids.append(parts[0])
                try:
                    if kind is DatasetKind.DETECTION:
                        label = int(parts[1])
                        if label not in (0, 1):
                            raise ValueError(f"label {label} not in {{0, 1}}")
                        labels.append(label)
                        numeric.append(np.array([float(v) for v in parts[2:]]))
                    else:
                        numeric.append(np.array([float(v) for v in parts[1:]]))
                except ValueError as exc:
                    raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if numeric:
            block = np.vstack(numeric)
        else:
            block = np.empty((0, W + H))
        if int(meta.get("n_rows", block.shape[0])) != block.shape[0]:
            raise DataFormatError(
                f"{path}: {block.shape[0]} rows but sidecar says {meta.get('n_rows')}"
            )
        if kind is DatasetKind.DETECTION:
            return cls(
                kind=kind,
                angles=block,
                source_ids=ids,
                sensor_rate=sensor_rate,
                W=W,
                H=0,
                labels=np.array(labels, dtype=np.int64),
                metadata=meta.get("metadata", {}),
            )
        return cls(
            kind=kind,
            angles=block[:, :W].copy(),
            source_ids=ids,
            sensor_rate=sensor_rate,
            W=W,
            H=H,
            targets=block[:, W:].copy(),
            metadata=meta.get("metadata", {}),
        )


def _csv_header(kind: DatasetKind, W: int, H: int) -> str:
    a_cols = ",".join(f"a_{i}" for i in range(W))
    if kind is DatasetKind.DETECTION:
        return f"source_id,label,{a_cols}"
    t_cols = ",".join(f"t_{i}" for i in range(H))
    return f"source_id,{a_cols},{t_cols}"


def _meta_path(path: Path) -> Path:
    if path.suffix == ".csv":
        return path.with_suffix(".meta.json")
    return Path(str(path) + ".meta.json")


def _detection_rows(config, W, stride, sway_duration, recovery_duration, recovery_count, index):
    """Window matrix and labels for scenario `index`; runs in workers."""
    params, initial = _scenario_draw(config, index)
    onset: float | None
    if index < config.n_fall:
        traj = generate_fall(params, initial, config.sensor_rate)
        source_id = f"fall-{index:06d}"
        onset = 0.0
    elif index < config.n_fall + recovery_count:
        rng = np.random.default_rng((config.seed, _STREAM_RECOVERY, index))
        t_react = rng.uniform(0.1, 0.3)
        traj = generate_recovery(params, initial, t_react, config.sensor_rate, duration=recovery_duration)
        if traj.terminated_by is not Termination.RECOVERED:
            return index, "discarded", None, None, None
        source_id = f"recovery-{index:06d}"
        onset = None
    else:
        # Sway starts are kept gentle so the controller never breaches the
        # non-fall bound; steep starts belong to the recovery class.
        sway_initial = PendulumState(min(initial.theta, 0.15), min(initial.omega, 0.2))
        traj = generate_nonfall(
            params,
            config.sensor_rate,
            sway_duration,
            (config.seed, _STREAM_SWAY, index),
            initial=sway_initial,
        )
        source_id = f"sway-{index:06d}"
        onset = None

    angles = corrupt(traj, config.noise_sigma, config.bias_drift_rate, (config.seed, _STREAM_NOISE, index))
    if angles.shape[0] < W:
        return index, "short", None, None, None
    mat = _window_matrix(angles, W, stride)
    labels = _window_labels(angles.shape[0], W, stride, config.sensor_rate, onset)
    return index, "ok", mat, labels, source_id


def _forecast_rows(config, W, H, stride, index):
    """Forecast input/target rows for fall scenario `index`.

    Starts are phased from the end of the series, so the final pair's
    target always ends at the last sample, i.e. at the impact crossing.
    """
    params, initial = _scenario_draw(config, index)
    traj = generate_fall(params, initial, config.sensor_rate)
    angles = corrupt(traj, config.noise_sigma, config.bias_drift_rate, (config.seed, _STREAM_NOISE, index))
    if angles.shape[0] < W + H:
        return index, "short", None, None, None
    offset = (angles.shape[0] - (W + H)) % stride
    both = _window_matrix(angles[offset:], W + H, stride)
    return index, "ok", both[:, :W].copy(), both[:, W:].copy(), f"fall-{index:06d}"


def _run_indexed(fn, n: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(n)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, n // (workers * 8))
        return list(pool.map(fn, range(n), chunksize=chunk))


def build_detection_dataset(
    config: ScenarioConfig,
    W: int = 100,
    stride: int = 10,
    recovery_fraction: float = 0.3,
    windows_per_class: int | None = None,
    workers: int = 1,
    sway_duration: float = 6.0,
    recovery_duration: float = 5.0,
) -> Dataset:
    """Full detection dataset: falls against sway and caught falls.

    The non-fall scenarios are split into recovery maneuvers (the first
    round(recovery_fraction * n_nonfall) of them) and stabilized sway.
    Recoveries that turn out unrecoverable under the torque limit are
    discarded and counted in the metadata.  With windows_per_class set,
    each class is subsampled to exactly that many windows (seeded, order
    preserving); an error is raised if a class falls short.
    """
    if config.n_fall + config.n_nonfall == 0:
        raise ValueError("config yields no scenarios (n_fall and n_nonfall are both 0)")
    if not 0.0 <= recovery_fraction <= 1.0:
        raise ValueError(f"recovery_fraction must be in [0, 1], got {recovery_fraction}")
    recovery_count = int(round(recovery_fraction * config.n_nonfall))
    fn = partial(_detection_rows, config, W, stride, sway_duration, recovery_duration, recovery_count)
    results = _run_indexed(fn, config.n_fall + config.n_nonfall, workers)

    mats, label_blocks, ids = [], [], []
    discarded = 0
    short = 0
    for _, status, mat, labels, source_id in results:
        if status == "discarded":
            discarded += 1
        elif status == "short":
            short += 1
        else:
            mats.append(mat)
            label_blocks.append(labels)
            ids.extend([source_id] * mat.shape[0])
    if not mats:
        raise ValueError("no scenario produced a full window; check W against trajectory lengths")
    X = np.concatenate(mats, axis=0)
    y = np.concatenate(label_blocks, axis=0)

    if windows_per_class is not None:
        rng = np.random.default_rng((config.seed, _STREAM_SUBSAMPLE))
        keep = []
        for label in (1, 0):
            pool = np.flatnonzero(y == label)
            if pool.shape[0] < windows_per_class:
                raise ValueError(
                    f"only {pool.shape[0]} class-{label} windows available, "
                    f"need {windows_per_class}; raise n_fall/n_nonfall"
                )
            keep.append(rng.choice(pool, size=windows_per_class, replace=False))
        order = np.sort(np.concatenate(keep))
        X = X[order]
        y = y[order]
        ids = [ids[int(i)] for i in order]

    n0, n1 = int(np.sum(y == 0)), int(np.sum(y == 1))
    metadata = {
        "config": asdict(config),
        "seed": config.seed,
        "stride": stride,
        "recovery_fraction": recovery_fraction,
        "windows_per_class": windows_per_class,
        "sway_duration": sway_duration,
        "recovery_duration": recovery_duration,
        "counts": {
            "label_0": n0,
            "label_1": n1,
            "discarded_recoveries": discarded,
            "short_sources": short,
        },
    }
    return Dataset(
        kind=DatasetKind.DETECTION,
        angles=X,
        source_ids=ids,
        sensor_rate=config.sensor_rate,
        W=W,
        labels=y,
        metadata=metadata,
    )


def build_forecast_dataset(
    config: ScenarioConfig,
    W: int = 100,
    H: int = 50,
    stride: int = 10,
    workers: int = 1,
) -> Dataset:
    """Forecast pairs cut from the fall scenarios of a config.

    Falls shorter than W+H sensor samples cannot produce a pair and are
    skipped (counted in metadata).  Pair starts are phased so the final
    pair of each fall ends exactly at the impact sample; impact crossings
    are therefore always represented in training.
    """
    if config.n_fall == 0:
        raise ValueError("config has no fall scenarios (n_fall is 0)")
    fn = partial(_forecast_rows, config, W, H, stride)
    results = _run_indexed(fn, config.n_fall, workers)

    inputs, targets, ids = [], [], []
    short = 0
    for _, status, xin, tgt, source_id in results:
        if status == "short":
            short += 1
        else:
            inputs.append(xin)
            targets.append(tgt)
            ids.extend([source_id] * xin.shape[0])
    if not inputs:
        raise ValueError(f"no fall lasted W+H={W + H} samples; shrink W/H or the initial angles")
    metadata = {
        "config": asdict(config),
        "seed": config.seed,
        "stride": stride,
        "counts": {"pairs": sum(x.shape[0] for x in inputs), "short_sources": short},
    }
    return Dataset(
        kind=DatasetKind.FORECAST,
        angles=np.concatenate(inputs, axis=0),
        source_ids=ids,
        sensor_rate=config.sensor_rate,
        W=W,
        H=H,
        targets=np.concatenate(targets, axis=0),
        metadata=metadata,
    )


def convert_imu_csv(in_path, out_path, body_axis=(0.0, 0.0, 1.0)) -> int:
    """Convert a `t,qw,qx,qy,qz` quaternion CSV to a `t,theta` angle CSV.

    Returns the number of converted rows.  Malformed rows raise
    DataFormatError with the offending line number.
    """
    in_path = Path(in_path)
    with open(in_path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if [c.strip() for c in header.split(",")] != ["t", "qw", "qx", "qy", "qz"]:
            raise DataFormatError(f"{in_path}: expected header 't,qw,qx,qy,qz', got {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise DataFormatError(f"{in_path}:{lineno}: expected 5 fields, got {len(parts)}")
            try:
                t = float(parts[0])
                tilt = quaternion_to_tilt([float(v) for v in parts[1:]], body_axis)
            except ValueError as exc:
                raise DataFormatError(f"{in_path}:{lineno}: {exc}") from exc
            rows.append((t, tilt))
    with open(out_path, "w", newline="") as fh:
        fh.write("t,theta\n")
        for t, tilt in rows:
            fh.write(f"{_FMT % t},{_FMT % tilt}\n")
    return len(rows)
