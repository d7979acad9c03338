"""fallkit: simulate inverted-pendulum falls, train recurrent detectors and
forecasters on the synthetic data, and run a streaming mitigation trigger."""

__version__ = "0.1.0"

from .dynamics import (
    FLOOR_ANGLE,
    AlreadyDownError,
    InertiaModel,
    PendulumParams,
    PendulumState,
    Termination,
    Trajectory,
    UnreachableAngleError,
    advance,
    angular_acceleration,
    energy_of,
    omega_at_angle,
    simulate_fall,
    step_rk4,
    total_energy,
)
from .datagen import (
    DataFormatError,
    Dataset,
    DatasetKind,
    GainError,
    ScenarioConfig,
    build_detection_dataset,
    build_forecast_dataset,
    convert_imu_csv,
    corrupt,
    generate_fall,
    generate_nonfall,
    generate_recovery,
    make_forecast_pairs,
    quaternion_to_tilt,
    sample_scenarios,
    windowize_detection,
)
from .nn import (
    CellKind,
    HeadKind,
    LayerSpec,
    Network,
    NetworkSpec,
    init_weights,
)
from .model_io import ModelFormatError, load_model, save_model
from .training import (
    Metrics,
    TrainConfig,
    TrainResult,
    evaluate,
    train,
    write_history_csv,
)
from .ga import GAConfig, Genome, SearchResult, search, write_search_log
from .realtime import Decision, StreamState, time_to_impact

__all__ = [
    "FLOOR_ANGLE",
    "AlreadyDownError",
    "InertiaModel",
    "PendulumParams",
    "PendulumState",
    "Termination",
    "Trajectory",
    "UnreachableAngleError",
    "advance",
    "angular_acceleration",
    "energy_of",
    "omega_at_angle",
    "simulate_fall",
    "step_rk4",
    "total_energy",
    "DataFormatError",
    "Dataset",
    "DatasetKind",
    "GainError",
    "ScenarioConfig",
    "build_detection_dataset",
    "build_forecast_dataset",
    "convert_imu_csv",
    "corrupt",
    "generate_fall",
    "generate_nonfall",
    "generate_recovery",
    "make_forecast_pairs",
    "quaternion_to_tilt",
    "sample_scenarios",
    "windowize_detection",
    "CellKind",
    "HeadKind",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "init_weights",
    "ModelFormatError",
    "load_model",
    "save_model",
    "Metrics",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "train",
    "write_history_csv",
    "GAConfig",
    "Genome",
    "SearchResult",
    "search",
    "write_search_log",
    "Decision",
    "StreamState",
    "time_to_impact",
]
