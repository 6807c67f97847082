"""Offline change point detection from sliding-window neural network test error.

A network is retrained on every window ``[t - T1, t)`` and scored on the
next ``T2`` rows; peaks in that test error mark change points.
"""

__version__ = "0.1.0"

from .config import DetectionConfig, parse_threshold
from .dataset import SeriesDataset, lag_series, read_dataset, write_dataset
from .datagen import GeneratorSpec, generate
from .detector import (
    ChangePointSet,
    DetectionResult,
    NeuralChangePointDetector,
    detect,
    detect_single,
    run_detection,
    suggest_threshold,
    suggest_windows,
    validate_assumptions,
)
from .exceptions import (
    ConfigurationError,
    CpscanError,
    EmptyWindowError,
    IntegrationError,
    SeriesTooShortError,
    ShapeError,
    TrainingDivergenceError,
    UndefinedMetricError,
)
from .metrics import EvalReport, aggregate, evaluate
from .neural import MLPWindowRegressor, MlpSpec, TrainConfig
from .scan import ErrorCurve, compute_error_curve

__all__ = [
    "ChangePointSet",
    "ConfigurationError",
    "CpscanError",
    "DetectionConfig",
    "DetectionResult",
    "EmptyWindowError",
    "ErrorCurve",
    "EvalReport",
    "GeneratorSpec",
    "IntegrationError",
    "MLPWindowRegressor",
    "MlpSpec",
    "NeuralChangePointDetector",
    "SeriesDataset",
    "SeriesTooShortError",
    "ShapeError",
    "TrainConfig",
    "TrainingDivergenceError",
    "UndefinedMetricError",
    "aggregate",
    "compute_error_curve",
    "detect",
    "detect_single",
    "evaluate",
    "generate",
    "lag_series",
    "parse_threshold",
    "read_dataset",
    "run_detection",
    "suggest_threshold",
    "suggest_windows",
    "validate_assumptions",
    "write_dataset",
]
