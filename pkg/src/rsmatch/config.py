"""Training configuration: parsing, validation, canonical serialization.

Config files are YAML mappings whose keys are exactly the ``TrainConfig``
field names. Unknown keys are rejected rather than ignored. The environment
variable ``RSMATCH_SEED`` overrides the ``seed`` field of any parsed file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import yaml

from .errors import ConfigError

SEED_ENV_VAR = "RSMATCH_SEED"

ARCHITECTURES = ("wrn-28-2", "resnet-18", "tiny-cnn")
METHODS = ("rsmatch", "fixmatch")
STRATEGIES = ("fixmatch", "flexmatch", "softmatch")
GATE_MODES = ("detector", "all_real")


@dataclass(frozen=True)
class TrainConfig:
    """All scalars steering benchmark training.

    Short symbols used throughout: K = num_classes, B = labeled_batch,
    mu = unlabeled_ratio, tau = confidence_threshold, lambda = unsup_weight,
    N_q = queue_size, P = classes_per_update, Q = enqueue_per_class.
    """

    num_classes: int
    arch: str = "wrn-28-2"
    method: str = "rsmatch"
    strategy: str = "fixmatch"
    labeled_batch: int = 64
    unlabeled_ratio: int = 7
    confidence_threshold: float = 0.95
    detector_threshold: float | None = None  # falls back to confidence_threshold
    unsup_weight: float = 1.0
    queue_size: int = 8
    classes_per_update: int | None = None  # defaults to min(10, num_classes)
    enqueue_per_class: int = 1
    total_iterations: int = 4096
    lr: float = 0.03
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 5e-4
    cosine_factor: float = 7.0 / 16.0
    warmup_iterations: int = 0
    eval_every: int = 512
    seed: int = 0
    gate_mode: str = "detector"
    single_queue: bool = False
    no_dummy_head: bool = False
    shared_detector: bool = False

    def resolved(self) -> "TrainConfig":
        """Fill derived defaults so every field holds a concrete value."""
        updates = {}
        if self.classes_per_update is None:
            updates["classes_per_update"] = min(10, self.num_classes)
        if self.detector_threshold is None:
            updates["detector_threshold"] = self.confidence_threshold
        cfg = dataclasses.replace(self, **updates) if updates else self
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def fail(field, why):
            raise ConfigError(f"invalid config field {field!r}: {why}")

        positive_ints = [
            "num_classes", "labeled_batch", "unlabeled_ratio", "queue_size",
            "enqueue_per_class",
        ]
        for name in positive_ints:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                fail(name, f"expected positive integer, got {v!r}")
        for name in ("total_iterations", "warmup_iterations", "eval_every", "seed"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                fail(name, f"expected nonnegative integer, got {v!r}")
        if self.num_classes < 2:
            fail("num_classes", "need at least 2 classes")
        if not 0.0 < self.confidence_threshold <= 1.0:
            fail("confidence_threshold", f"must lie in (0, 1], got {self.confidence_threshold}")
        if self.detector_threshold is not None and not 0.0 < self.detector_threshold <= 1.0:
            fail("detector_threshold", f"must lie in (0, 1], got {self.detector_threshold}")
        if self.unsup_weight < 0:
            fail("unsup_weight", "must be nonnegative")
        for name in ("lr", "momentum", "weight_decay", "cosine_factor"):
            if getattr(self, name) < 0:
                fail(name, "must be nonnegative")
        if self.classes_per_update is not None:
            if not isinstance(self.classes_per_update, int) or self.classes_per_update < 1:
                fail("classes_per_update", f"expected positive integer, got {self.classes_per_update!r}")
            if self.classes_per_update > self.num_classes:
                fail("classes_per_update", f"P={self.classes_per_update} exceeds num_classes={self.num_classes}")
        if self.enqueue_per_class > self.queue_size:
            fail("enqueue_per_class", f"Q={self.enqueue_per_class} exceeds queue_size={self.queue_size}")
        if self.arch not in ARCHITECTURES:
            fail("arch", f"unknown architecture {self.arch!r}, expected one of {ARCHITECTURES}")
        if self.method not in METHODS:
            fail("method", f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.strategy not in STRATEGIES:
            fail("strategy", f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.gate_mode not in GATE_MODES:
            fail("gate_mode", f"unknown gate mode {self.gate_mode!r}, expected one of {GATE_MODES}")
        if self.method == "fixmatch":
            for flag in ("single_queue", "no_dummy_head", "shared_detector"):
                if getattr(self, flag):
                    fail(flag, "ablation flags require method='rsmatch'")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(TrainConfig)}

_INT_FIELDS = {
    "num_classes", "labeled_batch", "unlabeled_ratio", "queue_size",
    "classes_per_update", "enqueue_per_class", "total_iterations",
    "warmup_iterations", "eval_every", "seed",
}
_FLOAT_FIELDS = {
    "confidence_threshold", "detector_threshold", "unsup_weight", "lr",
    "momentum", "weight_decay", "cosine_factor",
}
_BOOL_FIELDS = {"nesterov", "single_queue", "no_dummy_head", "shared_detector"}
_STR_FIELDS = {"arch", "method", "strategy", "gate_mode"}
_OPTIONAL_FIELDS = {"classes_per_update", "detector_threshold"}


def _coerce(name: str, value):
    if value is None:
        if name in _OPTIONAL_FIELDS:
            return None
        raise ConfigError(f"invalid config field {name!r}: null is not allowed")
    if name in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"invalid config field {name!r}: expected boolean, got {value!r}")
        return value
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"invalid config field {name!r}: expected integer, got {value!r}")
        return value
    if name in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"invalid config field {name!r}: expected number, got {value!r}")
        return float(value)
    if name in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError(f"invalid config field {name!r}: expected string, got {value!r}")
        return value
    raise ConfigError(f"unknown config field {name!r}")


def config_from_mapping(mapping: dict) -> TrainConfig:
    """Build a resolved, validated TrainConfig from a plain mapping."""
    if not isinstance(mapping, dict):
        raise ConfigError(f"config root must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config field {sorted(unknown)[0]!r}")
    if "num_classes" not in mapping:
        raise ConfigError("invalid config field 'num_classes': field is required")
    kwargs = {name: _coerce(name, value) for name, value in mapping.items()}
    return TrainConfig(**kwargs).resolved()


def parse_config(path) -> TrainConfig:
    """Parse a YAML config file into a validated TrainConfig.

    Applies documented defaults for unspecified fields and the
    ``RSMATCH_SEED`` environment override. Raises ConfigError with the
    offending line on malformed YAML and with the offending field name on
    constraint violations.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"malformed config file {path}{where}: {exc}") from exc
    if raw is None:
        raw = {}
    cfg = config_from_mapping(raw)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg = dataclasses.replace(cfg, seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"invalid {SEED_ENV_VAR} value {env_seed!r}: expected integer") from None
    return cfg


def serialize_config(cfg: TrainConfig) -> str:
    """Canonical YAML text for a config; parse(serialize(c)) == c."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)


def write_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))


def config_hash(cfg: TrainConfig) -> str:
    """Stable short hash identifying a resolved configuration."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
