"""Evaluation and embedding export.

These helpers are the only code allowed to read the benchmark sidecar
(hidden origins and true labels of unlabeled samples); every read carries a
reader tag, so the sidecar's audit log shows exactly who looked.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import torch

from .augment import to_tensor
from .data import Benchmark
from .errors import BenchmarkError
from .engine import Trainer


def classifier_accuracy(trainer: Trainer, benchmark: Benchmark) -> float:
    """Top-1 accuracy of the real classification head on the test split."""
    probs = trainer.classifier_probs(benchmark.test_images)
    if len(benchmark.test_labels) == 0:
        raise BenchmarkError("benchmark has no test split")
    return float((probs.argmax(axis=1) == benchmark.test_labels).mean())


def detector_accuracy(trainer: Trainer, benchmark: Benchmark,
                      reader: str = "evaluate.detector") -> dict:
    """Real-vs-synthetic accuracy of the detector over the unlabeled split,
    judged against the hidden origins."""
    if not benchmark.unlabeled_ids:
        raise BenchmarkError("benchmark has no unlabeled split")
    scores = trainer.detector_scores(benchmark.unlabeled_images)
    verdicts = scores > 0.5
    truth = np.array([
        benchmark.sidecar.origin_of(sid, reader) == "synthetic"
        for sid in benchmark.unlabeled_ids
    ])
    correct = verdicts == truth
    n_synth = int(truth.sum())
    return {
        "accuracy": float(correct.mean()),
        "recall_synthetic": float(correct[truth].mean()) if n_synth else None,
        "recall_real": float(correct[~truth].mean()) if n_synth < len(truth) else None,
        "num_unlabeled": len(truth),
        "num_synthetic": n_synth,
    }


def queue_class_entropy(trainer: Trainer, benchmark: Benchmark,
                        reader: str = "evaluate.queue") -> float:
    """Shannon entropy (nats) of the true-class distribution of mining-queue
    members. Low entropy means the queue is dominated by a few classes."""
    if trainer.queue is None:
        raise BenchmarkError("trainer has no mining queue")
    members = [sid for ids in trainer.queue.contents() for sid in ids]
    if not members:
        return 0.0
    labels = [benchmark.sidecar.true_label_of(sid, reader) for sid in members]
    counts = np.bincount(np.asarray(labels))
    probs = counts[counts > 0] / len(labels)
    return float(-(probs * np.log(probs)).sum())


def make_detector_hook(benchmark: Benchmark):
    """Training-time hook reporting detector accuracy; results are logged
    only, never fed back into the training loop."""
    def hook(trainer: Trainer, iteration: int) -> dict:
        if trainer.detector is None:
            return {"detector_accuracy": None}
        report = detector_accuracy(trainer, benchmark, reader="hook.detector")
        return {"detector_accuracy": report["accuracy"]}
    return hook


def evaluate_checkpoint(checkpoint_path, benchmark: Benchmark) -> dict:
    """Restore a trainer from a checkpoint and score it on the benchmark."""
    trainer = Trainer.restore(checkpoint_path, benchmark)
    out = {
        "iteration": trainer.iteration,
        "test_accuracy": classifier_accuracy(trainer, benchmark),
    }
    if trainer.detector is not None and benchmark.unlabeled_ids:
        try:
            out["detector"] = detector_accuracy(trainer, benchmark, reader="evaluate.detector")
        except Exception:
            out["detector"] = None  # sidecar without origins: nothing to judge
    return out


def load_metrics(run_dir) -> list[dict]:
    path = Path(run_dir)
    if path.is_dir():
        path = path / "metrics.jsonl"
    if not path.exists():
        raise BenchmarkError(f"no metrics log at {path}")
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def utilization_series(run_dir) -> tuple[list[int], list[float]]:
    """Fraction of each logged unlabeled batch routed to the dummy head."""
    rows = load_metrics(run_dir)
    path = Path(run_dir)
    cfg_path = (path if path.is_dir() else path.parent) / "config.yaml"
    from .config import parse_config
    cfg = parse_config(cfg_path).resolved()
    denom = cfg.labeled_batch * cfg.unlabeled_ratio
    iters, values = [], []
    for row in rows:
        if row.get("kind") == "train":
            iters.append(row["iteration"])
            values.append(row["dummy_used"] / denom)
    return iters, values


def export_embeddings(trainer: Trainer, benchmark: Benchmark, out_path,
                      splits: tuple[str, ...] = ("test", "unlabeled"),
                      reader: str = "export.embeddings") -> Path:
    """Write penultimate-layer features to CSV, atomically.

    Unlabeled rows carry the hidden origin and true label from the sidecar
    (tagged reads); test rows are real by construction.
    """
    rows = []
    feature_dim = None
    for split in splits:
        if split == "test":
            images, ids = benchmark.test_images, None
        elif split == "unlabeled":
            images, ids = benchmark.unlabeled_images, benchmark.unlabeled_ids
        elif split == "labeled":
            images, ids = benchmark.labeled_images, None
        else:
            raise BenchmarkError(f"unknown split {split!r}")
        if len(images) == 0:
            continue
        was_training = trainer.classifier.training
        trainer.classifier.eval()
        feats = []
        with torch.no_grad():
            for start in range(0, len(images), 512):
                feats.append(trainer.classifier.features(to_tensor(images[start:start + 512])))
        if was_training:
            trainer.classifier.train()
        feats = torch.cat(feats).numpy()
        feature_dim = feats.shape[1]
        for i in range(len(images)):
            if split == "test":
                sid = f"test_{i:06d}"
                origin, label = "real", int(benchmark.test_labels[i])
            elif split == "labeled":
                sid = f"labeled_{i:06d}"
                origin, label = "real", int(benchmark.labeled_labels[i])
            else:
                sid = ids[i]
                origin = benchmark.sidecar.origin_of(sid, reader)
                label = benchmark.sidecar.true_label_of(sid, reader)
            rows.append([sid, split, origin, label] + [f"{v:.6g}" for v in feats[i]])

    if feature_dim is None:
        raise BenchmarkError("no images in the requested splits")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_path.parent, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "split", "origin", "label"]
                            + [f"feat_{j}" for j in range(feature_dim)])
            writer.writerows(rows)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return out_path
