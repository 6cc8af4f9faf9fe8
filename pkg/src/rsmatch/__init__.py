"""Semi-supervised image classification that detects synthetic contamination
in unlabeled data and routes it away from the real classification head."""

__version__ = "0.1.0"

from .config import TrainConfig, config_hash, parse_config, serialize_config
from .csqueue import CSQueue
from .data import Benchmark, load_benchmark
from .engine import StepReport, Trainer, run_training
from .errors import (AblationError, BenchmarkError, CheckpointError,
                     ConfigError, GenerationError, ManifestError,
                     NonFiniteLossError, RSMatchError)
from .estimator import FixMatchClassifier, RSMatchClassifier
from .manifest import EvaluationSidecar, ManifestRecord, load_manifest, write_manifest

__all__ = [
    "AblationError",
    "Benchmark",
    "BenchmarkError",
    "CheckpointError",
    "ConfigError",
    "CSQueue",
    "EvaluationSidecar",
    "FixMatchClassifier",
    "GenerationError",
    "load_benchmark",
    "load_manifest",
    "ManifestError",
    "ManifestRecord",
    "NonFiniteLossError",
    "parse_config",
    "RSMatchClassifier",
    "RSMatchError",
    "run_training",
    "serialize_config",
    "StepReport",
    "config_hash",
    "Trainer",
    "TrainConfig",
    "write_manifest",
]
