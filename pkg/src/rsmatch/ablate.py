"""Ablation grids.

A grid file describes a base configuration plus named variants (explicit
overrides) and optional axes (cartesian products over single fields). Every
variant is materialized and validated before any training starts, so a bad
combination aborts the whole grid instead of dying halfway through.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .config import TrainConfig, config_from_mapping
from .data import Benchmark
from .engine import run_training
from .errors import AblationError
from .evaluate import make_detector_hook

GRID_FIELDS = {"queue_size", "classes_per_update", "enqueue_per_class",
               "single_queue", "no_dummy_head", "shared_detector",
               "method", "strategy", "seed", "unsup_weight",
               "confidence_threshold", "detector_threshold"}


@dataclass(frozen=True)
class AblationVariant:
    name: str
    overrides: dict
    config: TrainConfig


def _check_overrides(name: str, overrides: dict) -> None:
    unknown = set(overrides) - GRID_FIELDS
    if unknown:
        raise AblationError(
            f"variant {name!r} overrides non-ablatable field {sorted(unknown)[0]!r}")
    if overrides.get("single_queue") and overrides.get("classes_per_update", 1) != 1:
        raise AblationError(
            f"variant {name!r}: single_queue pools all classes, "
            f"classes_per_update must stay 1")


def load_grid(path, base: dict | None = None) -> list[AblationVariant]:
    """Parse a grid file into validated variants.

    Layout: optional ``base`` mapping (full train config), optional
    ``variants`` mapping of name -> overrides, optional ``axes`` mapping of
    field -> list of values (cartesian product, one variant per cell).
    """
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise AblationError(f"grid file {path} must hold a mapping")
    unknown = set(raw) - {"base", "variants", "axes"}
    if unknown:
        raise AblationError(f"grid file has unknown section {sorted(unknown)[0]!r}")
    base_map = dict(base or {})
    base_map.update(raw.get("base") or {})

    named: dict[str, dict] = {}
    for name, overrides in (raw.get("variants") or {}).items():
        named[str(name)] = dict(overrides or {})
    axes = raw.get("axes") or {}
    if axes:
        fields = sorted(axes)
        for values in itertools.product(*(axes[f] for f in fields)):
            overrides = dict(zip(fields, values))
            name = ",".join(f"{f}={v}" for f, v in overrides.items())
            named[name] = overrides
    if not named:
        named["base"] = {}

    variants = []
    for name, overrides in named.items():
        _check_overrides(name, overrides)
        merged = dict(base_map)
        merged.update(overrides)
        try:
            config = config_from_mapping(merged)
            config.validate()
        except Exception as exc:
            raise AblationError(f"variant {name!r} is invalid: {exc}") from exc
        variants.append(AblationVariant(name=name, overrides=overrides, config=config))
    return variants


def run_ablation(variants: list[AblationVariant], benchmark: Benchmark,
                 out_dir, log_every: int = 50) -> list[dict]:
    """Train every variant and write results.{json,csv} plus per-variant runs."""
    if not variants:
        raise AblationError("no variants to run")
    seen = set()
    for v in variants:
        if v.name in seen:
            raise AblationError(f"duplicate variant name {v.name!r}")
        seen.add(v.name)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hooks = (make_detector_hook(benchmark),)
    results = []
    for i, variant in enumerate(variants):
        run_dir = out / f"{i:02d}_{_slug(variant.name)}"
        use_hooks = hooks if variant.config.method == "rsmatch" else ()
        summary = run_training(variant.config, benchmark, run_dir,
                               hooks=use_hooks, log_every=log_every)
        row = {"variant": variant.name, "overrides": variant.overrides, **summary}
        detector_acc = _last_hook_accuracy(run_dir)
        if detector_acc is not None:
            row["detector_accuracy"] = detector_acc
        results.append(row)

    (out / "results.json").write_text(json.dumps(results, indent=2, sort_keys=True),
                                      encoding="utf-8")
    columns = ["variant", "best_test_accuracy", "final_test_accuracy",
               "detector_accuracy", "dummy_utilization", "config_hash"]
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in results:
            writer.writerow([row.get(c, "") for c in columns])
    return results


def _slug(name: str) -> str:
    keep = [c if (c.isalnum() or c in "-_.") else "-" for c in name]
    return "".join(keep)[:80]


def _last_hook_accuracy(run_dir) -> float | None:
    from .evaluate import load_metrics
    acc = None
    for row in load_metrics(run_dir):
        if row.get("kind") == "hook" and row.get("detector_accuracy") is not None:
            acc = row["detector_accuracy"]
    return acc
