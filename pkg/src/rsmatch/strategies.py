"""Pluggable pseudo-label weighting.

The contamination handling is agnostic to how confidence gating works: a
strategy turns weak-view class probabilities into per-sample loss weights in
[0, 1]. Stateful strategies expose state_dict/load_state_dict so training
resume stays exact.

``weights`` is pure; ``update`` mutates tracking state and is called once
per step by the trainer, after weights were computed.
"""

from __future__ import annotations

import torch

from .errors import ConfigError


class FixedThresholdStrategy:
    """Hard confidence gate: weight 1 where max probability >= threshold."""

    name = "fixmatch"

    def __init__(self, threshold: float):
        self.threshold = threshold

    def weights(self, weak_probs: torch.Tensor) -> torch.Tensor:
        conf, _ = weak_probs.max(dim=1)
        return (conf >= self.threshold).to(weak_probs.dtype)

    def update(self, weak_probs: torch.Tensor) -> None:
        pass

    def state_dict(self) -> dict:
        return {}

    def load_state_dict(self, state: dict) -> None:
        pass


class ClassAdaptiveThresholdStrategy:
    """Per-class thresholds scaled by estimated learning status.

    Tracks a decayed count of confident predictions per class; classes that
    rarely clear the base threshold get a proportionally lower one, so
    hard classes are not starved of pseudo-labels.
    """

    name = "flexmatch"

    def __init__(self, threshold: float, num_classes: int, momentum: float = 0.999):
        self.threshold = threshold
        self.num_classes = num_classes
        self.momentum = momentum
        self._counts = torch.zeros(num_classes, dtype=torch.float64)

    def _class_thresholds(self) -> torch.Tensor:
        top = self._counts.max()
        if top <= 0:
            beta = torch.ones_like(self._counts)
        else:
            beta = self._counts / top
        return (self.threshold * beta).to(torch.float32)

    def weights(self, weak_probs: torch.Tensor) -> torch.Tensor:
        conf, pred = weak_probs.max(dim=1)
        thresholds = self._class_thresholds().to(weak_probs.dtype)[pred]
        return (conf >= thresholds).to(weak_probs.dtype)

    def update(self, weak_probs: torch.Tensor) -> None:
        conf, pred = weak_probs.max(dim=1)
        confident = pred[conf >= self.threshold]
        batch_counts = torch.bincount(confident, minlength=self.num_classes).to(torch.float64)
        self._counts = self.momentum * self._counts + (1 - self.momentum) * batch_counts

    def state_dict(self) -> dict:
        return {"counts": self._counts.clone()}

    def load_state_dict(self, state: dict) -> None:
        self._counts = state["counts"].clone()


class GaussianWeightStrategy:
    """Soft weights from a running Gaussian fit of the confidence distribution.

    Samples above the tracked mean confidence get weight 1; below it the
    weight decays as exp(-(conf - mean)^2 / (2 var)).
    """

    name = "softmatch"

    def __init__(self, num_classes: int, momentum: float = 0.999):
        self.num_classes = num_classes
        self.momentum = momentum
        self._mean = torch.tensor(1.0 / num_classes, dtype=torch.float64)
        self._var = torch.tensor(1.0, dtype=torch.float64)

    def weights(self, weak_probs: torch.Tensor) -> torch.Tensor:
        conf, _ = weak_probs.max(dim=1)
        mean = self._mean.to(weak_probs.dtype)
        var = torch.clamp(self._var.to(weak_probs.dtype), min=1e-8)
        soft = torch.exp(-((conf - mean) ** 2) / (2 * var))
        return torch.where(conf >= mean, torch.ones_like(conf), soft)

    def update(self, weak_probs: torch.Tensor) -> None:
        conf, _ = weak_probs.max(dim=1)
        batch_mean = conf.double().mean()
        batch_var = conf.double().var(unbiased=True) if conf.numel() > 1 else torch.zeros((), dtype=torch.float64)
        m = self.momentum
        self._mean = m * self._mean + (1 - m) * batch_mean
        self._var = m * self._var + (1 - m) * batch_var

    def state_dict(self) -> dict:
        return {"mean": self._mean.clone(), "var": self._var.clone()}

    def load_state_dict(self, state: dict) -> None:
        self._mean = state["mean"].clone()
        self._var = state["var"].clone()


def build_strategy(name: str, threshold: float, num_classes: int):
    if name == "fixmatch":
        return FixedThresholdStrategy(threshold)
    if name == "flexmatch":
        return ClassAdaptiveThresholdStrategy(threshold, num_classes)
    if name == "softmatch":
        return GaussianWeightStrategy(num_classes)
    raise ConfigError(f"unknown strategy {name!r}")
