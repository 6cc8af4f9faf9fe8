"""Benchmark loading and batch sampling.

Desk-scale images are small, so everything is preloaded into uint8 arrays.
Samplers draw shuffled epochs and expose their full state for bit-exact
training resume.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchgen import load_image
from .errors import BenchmarkError
from .manifest import EvaluationSidecar, load_manifest


@dataclass
class Benchmark:
    """In-memory view of a benchmark directory.

    ``sidecar`` carries the hidden per-sample origins and labels; only
    evaluation code may read it (every read is tagged in its audit log, and
    the training loop is tested to leave that log empty).
    """

    root: Path
    num_classes: int
    image_size: int
    class_names: list[str]
    labeled_images: np.ndarray
    labeled_labels: np.ndarray
    unlabeled_images: np.ndarray
    unlabeled_ids: list[str]
    test_images: np.ndarray
    test_labels: np.ndarray
    sidecar: EvaluationSidecar
    metadata: dict = field(default_factory=dict)


def _load_stack(root: Path, records) -> np.ndarray:
    if not records:
        return np.zeros((0, 1, 1, 3), dtype=np.uint8)
    return np.stack([load_image(root / r.path) for r in records])


def load_benchmark(path) -> Benchmark:
    root = Path(path)
    manifest_path = root / "manifest.jsonl"
    if not manifest_path.exists():
        raise BenchmarkError(f"no manifest.jsonl under {root}")
    records, sidecar = load_manifest(manifest_path)

    sidecar_path = root / "sidecar.jsonl"
    if sidecar_path.exists():
        sidecar.merge(EvaluationSidecar.read(sidecar_path))

    metadata = {}
    meta_path = root / "metadata.json"
    if meta_path.exists():
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))

    labeled = [r for r in records if r.split == "labeled"]
    unlabeled = [r for r in records if r.split == "unlabeled"]
    test = [r for r in records if r.split == "test"]
    if not labeled:
        raise BenchmarkError("benchmark has no labeled records")

    labels = np.array([r.label for r in labeled], dtype=np.int64)
    num_classes = metadata.get("num_classes", int(labels.max()) + 1)
    class_names = metadata.get("class_names", [f"class{i}" for i in range(num_classes)])
    labeled_images = _load_stack(root, labeled)
    return Benchmark(
        root=root,
        num_classes=num_classes,
        image_size=labeled_images.shape[1],
        class_names=class_names,
        labeled_images=labeled_images,
        labeled_labels=labels,
        unlabeled_images=_load_stack(root, unlabeled),
        unlabeled_ids=[r.id for r in unlabeled],
        test_images=_load_stack(root, test),
        test_labels=np.array([r.label for r in test], dtype=np.int64),
        sidecar=sidecar,
        metadata=metadata,
    )


class EpochSampler:
    """Yields index batches from reshuffled epochs of ``size`` items.

    The final short batch of an epoch is dropped so batch shapes stay fixed;
    state_dict captures the live permutation, cursor and generator state.
    """

    def __init__(self, size: int, batch_size: int, rng: np.random.Generator):
        if size < batch_size:
            raise BenchmarkError(
                f"cannot draw batches of {batch_size} from {size} samples")
        self.size = size
        self.batch_size = batch_size
        self._rng = rng
        self._perm = rng.permutation(size)
        self._cursor = 0

    def next_batch(self) -> np.ndarray:
        if self._cursor + self.batch_size > self.size:
            self._perm = self._rng.permutation(self.size)
            self._cursor = 0
        out = self._perm[self._cursor:self._cursor + self.batch_size]
        self._cursor += self.batch_size
        return out.copy()

    def state_dict(self) -> dict:
        return {
            "perm": self._perm.copy(),
            "cursor": self._cursor,
            "rng": self._rng.bit_generator.state,
        }

    def load_state_dict(self, state: dict) -> None:
        self._perm = np.asarray(state["perm"]).copy()
        self._cursor = int(state["cursor"])
        self._rng.bit_generator.state = state["rng"]
