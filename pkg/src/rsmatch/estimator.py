"""Scikit-learn style estimator over the training engine.

``fit(X, y)`` takes an image stack and integer targets where -1 marks
unlabeled samples (the scikit-learn semi-supervised convention); the
contaminated unlabeled data simply arrives as the -1 rows. The estimator is
a thin adapter: all training behavior lives in the engine.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .config import TrainConfig
from .data import Benchmark
from .engine import Trainer
from .errors import RSMatchError
from .manifest import EvaluationSidecar
from .validation import check_image_array, check_semi_supervised_targets


class RSMatchClassifier(BaseEstimator, ClassifierMixin):
    """Semi-supervised image classifier robust to synthetic contamination.

    Co-trains a real-vs-synthetic detector fed by class-wise mined examples
    and routes detected synthetic samples to a dummy head, keeping the real
    classification head clean. Set ``method='fixmatch'`` for the plain
    confidence-threshold baseline without any of that machinery.
    """

    def __init__(self, method: str = "rsmatch", arch: str = "tiny-cnn",
                 strategy: str = "fixmatch", labeled_batch: int = 8,
                 unlabeled_ratio: int = 7, confidence_threshold: float = 0.95,
                 detector_threshold: float | None = None,
                 unsup_weight: float = 1.0, queue_size: int = 8,
                 classes_per_update: int | None = None, enqueue_per_class: int = 1,
                 total_iterations: int = 1024, lr: float = 0.03,
                 momentum: float = 0.9, weight_decay: float = 5e-4,
                 single_queue: bool = False, no_dummy_head: bool = False,
                 shared_detector: bool = False, seed: int = 0):
        self.method = method
        self.arch = arch
        self.strategy = strategy
        self.labeled_batch = labeled_batch
        self.unlabeled_ratio = unlabeled_ratio
        self.confidence_threshold = confidence_threshold
        self.detector_threshold = detector_threshold
        self.unsup_weight = unsup_weight
        self.queue_size = queue_size
        self.classes_per_update = classes_per_update
        self.enqueue_per_class = enqueue_per_class
        self.total_iterations = total_iterations
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.single_queue = single_queue
        self.no_dummy_head = no_dummy_head
        self.shared_detector = shared_detector
        self.seed = seed

    def _build_config(self, num_classes: int, n_labeled: int, n_unlabeled: int) -> TrainConfig:
        labeled_batch = min(self.labeled_batch, n_labeled)
        ratio = self.unlabeled_ratio
        while ratio > 1 and ratio * labeled_batch > n_unlabeled:
            ratio -= 1
        if ratio * labeled_batch > n_unlabeled:
            raise RSMatchError(
                f"not enough unlabeled samples ({n_unlabeled}) for batches of "
                f"{labeled_batch}")
        return TrainConfig(
            num_classes=num_classes, arch=self.arch, method=self.method,
            strategy=self.strategy, labeled_batch=labeled_batch,
            unlabeled_ratio=ratio,
            confidence_threshold=self.confidence_threshold,
            detector_threshold=self.detector_threshold,
            unsup_weight=self.unsup_weight, queue_size=self.queue_size,
            classes_per_update=self.classes_per_update,
            enqueue_per_class=self.enqueue_per_class,
            total_iterations=self.total_iterations, lr=self.lr,
            momentum=self.momentum, weight_decay=self.weight_decay,
            single_queue=self.single_queue, no_dummy_head=self.no_dummy_head,
            shared_detector=self.shared_detector, seed=self.seed,
        ).resolved()

    def fit(self, X, y):
        X = check_image_array(X)
        mapped, classes = check_semi_supervised_targets(y, len(X))
        labeled = mapped >= 0
        if not (~labeled).any():
            raise RSMatchError(
                "no unlabeled samples (y == -1); this is a semi-supervised "
                "classifier and needs both")
        unlabeled_images = X[~labeled]
        benchmark = Benchmark(
            root=Path("."), num_classes=int(classes.size),
            image_size=X.shape[1], class_names=[str(c) for c in classes],
            labeled_images=X[labeled], labeled_labels=mapped[labeled],
            unlabeled_images=unlabeled_images,
            unlabeled_ids=[f"u{i:07d}" for i in range(len(unlabeled_images))],
            test_images=np.zeros((0, X.shape[1], X.shape[2], 3), dtype=np.uint8),
            test_labels=np.zeros((0,), dtype=np.int64),
            sidecar=EvaluationSidecar(),
        )
        config = self._build_config(int(classes.size), int(labeled.sum()),
                                    len(unlabeled_images))
        self.classes_ = classes
        self.config_ = config
        self.trainer_ = Trainer(config, benchmark)
        for _ in range(config.total_iterations):
            self.trainer_.step()
        return self

    def _check_fitted(self):
        if not hasattr(self, "trainer_"):
            raise RSMatchError("this estimator is not fitted yet; call fit first")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_image_array(X)
        return self.trainer_.classifier_probs(X)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[proba.argmax(axis=1)]

    def score(self, X, y, sample_weight=None):
        from sklearn.metrics import accuracy_score
        return accuracy_score(y, self.predict(X), sample_weight=sample_weight)

    def synthetic_scores(self, X):
        """Detector probability that each image is synthetic."""
        self._check_fitted()
        if self.trainer_.detector is None:
            raise RSMatchError("method='fixmatch' trains no detector")
        return self.trainer_.detector_scores(check_image_array(X))


class FixMatchClassifier(RSMatchClassifier):
    """Plain confidence-threshold baseline (no detector, no queue)."""

    def __init__(self, arch: str = "tiny-cnn", strategy: str = "fixmatch",
                 labeled_batch: int = 8, unlabeled_ratio: int = 7,
                 confidence_threshold: float = 0.95, unsup_weight: float = 1.0,
                 total_iterations: int = 1024, lr: float = 0.03,
                 momentum: float = 0.9, weight_decay: float = 5e-4,
                 seed: int = 0):
        super().__init__(
            method="fixmatch", arch=arch, strategy=strategy,
            labeled_batch=labeled_batch, unlabeled_ratio=unlabeled_ratio,
            confidence_threshold=confidence_threshold,
            unsup_weight=unsup_weight, total_iterations=total_iterations,
            lr=lr, momentum=momentum, weight_decay=weight_decay, seed=seed)
