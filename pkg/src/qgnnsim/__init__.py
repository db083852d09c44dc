"""Classical and simulated-quantum graph networks for particle dynamics."""
from .estimators import CGNNRegressor, GraphFeaturizer, IQGNNRegressor, SQGNNRegressor
from .exceptions import (CompatibilityError, ConfigError, EmbeddingError, NumericError, ShapeError,
                         UnsupportedParameterError)
from .graphs import GraphSample, TargetScaler, make_dataset, split_dataset
from .physics import SimConfig, Trajectory, generate_trajectory
from .qsim import CircuitProgram, GateInstruction, Statevector

__version__ = "0.1.0"

__all__ = [
    "CGNNRegressor", "SQGNNRegressor", "IQGNNRegressor", "GraphFeaturizer",
    "CompatibilityError", "ConfigError", "EmbeddingError", "NumericError", "ShapeError",
    "UnsupportedParameterError", "GraphSample", "TargetScaler", "make_dataset", "split_dataset",
    "SimConfig", "Trajectory", "generate_trajectory", "CircuitProgram", "GateInstruction", "Statevector",
]
