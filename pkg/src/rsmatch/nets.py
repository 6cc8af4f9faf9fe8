"""The two networks: a two-headed classifier and a lightweight binary detector.

The classifier is an encoder with a real head and a dummy head of identical
shape but disjoint parameters. The detector reuses the same encoder family
with every hidden stage at half width (rounded down) and a 2-logit head, so
its parameter count stays strictly below the classifier's.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import RSMatchError
from .rng import RngStreams


class TinyCNN(nn.Module):
    """Desk-scale encoder: 3 conv blocks with max pooling and a global pool."""

    def __init__(self, width: int = 16):
        super().__init__()
        w = width
        self.blocks = nn.Sequential(
            nn.Conv2d(3, w, 3, padding=1, bias=False),
            nn.BatchNorm2d(w),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(w, 2 * w, 3, padding=1, bias=False),
            nn.BatchNorm2d(2 * w),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(2 * w, 4 * w, 3, padding=1, bias=False),
            nn.BatchNorm2d(4 * w),
            nn.ReLU(inplace=True),
        )
        self.feature_dim = 4 * w

    def forward(self, x):
        h = self.blocks(x)
        return F.adaptive_avg_pool2d(h, 1).flatten(1)


class _WRNBasicBlock(nn.Module):
    def __init__(self, in_planes, out_planes, stride):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(in_planes, momentum=0.001)
        self.conv1 = nn.Conv2d(in_planes, out_planes, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_planes, momentum=0.001)
        self.conv2 = nn.Conv2d(out_planes, out_planes, 3, stride=1, padding=1, bias=False)
        self.equal_io = in_planes == out_planes and stride == 1
        self.shortcut = None if self.equal_io else nn.Conv2d(
            in_planes, out_planes, 1, stride=stride, bias=False)

    def forward(self, x):
        o = F.leaky_relu(self.bn1(x), 0.1)
        out = self.conv2(F.leaky_relu(self.bn2(self.conv1(o)), 0.1))
        return out + (x if self.equal_io else self.shortcut(o))


class WideResNet(nn.Module):
    """WideResNet-28 encoder; hidden widths scale with ``channel_div``."""

    def __init__(self, depth: int = 28, widen: int = 2, channel_div: int = 1):
        super().__init__()
        assert (depth - 4) % 6 == 0
        n = (depth - 4) // 6
        widths = [16 // channel_div, 16 * widen // channel_div,
                  32 * widen // channel_div, 64 * widen // channel_div]
        self.conv1 = nn.Conv2d(3, widths[0], 3, padding=1, bias=False)
        layers = []
        in_planes = widths[0]
        for stage, stride in ((1, 1), (2, 2), (3, 2)):
            for i in range(n):
                layers.append(_WRNBasicBlock(in_planes, widths[stage], stride if i == 0 else 1))
                in_planes = widths[stage]
        self.layers = nn.Sequential(*layers)
        self.bn = nn.BatchNorm2d(widths[3], momentum=0.001)
        self.feature_dim = widths[3]

    def forward(self, x):
        h = self.layers(self.conv1(x))
        h = F.leaky_relu(self.bn(h), 0.1)
        return F.adaptive_avg_pool2d(h, 1).flatten(1)


class _ResNetBasicBlock(nn.Module):
    def __init__(self, in_planes, planes, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(in_planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.down = None
        if stride != 1 or in_planes != planes:
            self.down = nn.Sequential(
                nn.Conv2d(in_planes, planes, 1, stride=stride, bias=False),
                nn.BatchNorm2d(planes),
            )

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        identity = x if self.down is None else self.down(x)
        return F.relu(out + identity)


class ResNet18(nn.Module):
    """ResNet-18 encoder with a 3x3 stem (small-image variant)."""

    def __init__(self, channel_div: int = 1):
        super().__init__()
        widths = [64 // channel_div, 128 // channel_div, 256 // channel_div, 512 // channel_div]
        self.conv1 = nn.Conv2d(3, widths[0], 3, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(widths[0])
        stages = []
        in_planes = widths[0]
        for stage, planes in enumerate(widths):
            stride = 1 if stage == 0 else 2
            stages.append(_ResNetBasicBlock(in_planes, planes, stride))
            stages.append(_ResNetBasicBlock(planes, planes, 1))
            in_planes = planes
        self.stages = nn.Sequential(*stages)
        self.feature_dim = widths[3]

    def forward(self, x):
        h = F.relu(self.bn1(self.conv1(x)))
        h = self.stages(h)
        return F.adaptive_avg_pool2d(h, 1).flatten(1)


def build_encoder(arch: str, channel_div: int = 1) -> nn.Module:
    if arch == "tiny-cnn":
        return TinyCNN(width=16 // channel_div)
    if arch == "wrn-28-2":
        return WideResNet(depth=28, widen=2, channel_div=channel_div)
    if arch == "resnet-18":
        return ResNet18(channel_div=channel_div)
    raise RSMatchError(f"unknown architecture {arch!r}")


class ClassifierModel(nn.Module):
    """Shared encoder with two K-way heads of identical shape, disjoint params.

    Only the real head is ever used to produce pseudo-labels or predictions;
    the dummy head exists so gradients from synthetic-gated samples reach the
    encoder without touching the real head.
    """

    def __init__(self, arch: str, num_classes: int):
        super().__init__()
        self.arch = arch
        self.num_classes = num_classes
        self.encoder = build_encoder(arch)
        self.real_head = nn.Linear(self.encoder.feature_dim, num_classes)
        self.dummy_head = nn.Linear(self.encoder.feature_dim, num_classes)

    def features(self, x):
        return self.encoder(x)

    def forward(self, x):
        return self.real_head(self.encoder(x))


class DetectorModel(nn.Module):
    """Half-width encoder with a binary head emitting [z_real, z_synthetic]."""

    def __init__(self, arch: str):
        super().__init__()
        self.arch = arch
        self.encoder = build_encoder(arch, channel_div=2)
        self.head = nn.Linear(self.encoder.feature_dim, 2)

    def forward(self, x):
        return self.head(self.encoder(x))


class SharedDetectorHead(nn.Module):
    """Ablation: binary head attached to the classifier's encoder.

    Detector losses then backpropagate into the shared encoder, exercising
    the no-independent-models configuration.
    """

    def __init__(self, classifier: ClassifierModel):
        super().__init__()
        # plain list keeps the backbone out of this module's parameters()
        self._backbone = [classifier]
        self.head = nn.Linear(classifier.encoder.feature_dim, 2)

    def forward(self, x):
        return self.head(self._backbone[0].encoder(x))


def _draw(shape, std, gen, like):
    return torch.randn(shape, generator=gen, dtype=like.dtype) * std


def init_parameters(module: nn.Module, gen: torch.Generator) -> None:
    """Deterministic init driven by an explicit generator.

    Convs get He-normal (fan-out), BatchNorm gets (1, 0), Linear layers get
    normal weights scaled by 1/sqrt(fan_in) with zero bias. Iteration follows
    module construction order, so the same generator state reproduces the
    same parameters exactly.
    """
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            fan_out = m.kernel_size[0] * m.kernel_size[1] * m.out_channels
            m.weight.data = _draw(m.weight.shape, math.sqrt(2.0 / fan_out), gen, m.weight)
            if m.bias is not None:
                m.bias.data.zero_()
        elif isinstance(m, nn.BatchNorm2d):
            m.weight.data.fill_(1.0)
            m.bias.data.zero_()
        elif isinstance(m, nn.Linear):
            fan_in = m.weight.shape[1]
            m.weight.data = _draw(m.weight.shape, 1.0 / math.sqrt(fan_in), gen, m.weight)
            m.bias.data.zero_()


def build_models(arch: str, num_classes: int, rngs: RngStreams,
                 shared_detector: bool = False) -> tuple[ClassifierModel, nn.Module]:
    """Construct and initialize the classifier/detector pair.

    The two networks draw from separate init streams, so the classifier's
    initial parameters do not depend on whether a detector exists.
    """
    if num_classes < 2:
        raise RSMatchError(f"need at least 2 classes, got {num_classes}")
    classifier = ClassifierModel(arch, num_classes)
    init_parameters(classifier, rngs.torch("init.classifier"))
    if shared_detector:
        detector = SharedDetectorHead(classifier)
        init_parameters(detector.head, rngs.torch("init.detector"))
    else:
        detector = DetectorModel(arch)
        init_parameters(detector, rngs.torch("init.detector"))
    return classifier, detector


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def _logit_pairs(logits) -> np.ndarray:
    if isinstance(logits, torch.Tensor):
        arr = logits.detach().cpu().numpy()
    else:
        arr = np.asarray(logits, dtype=np.float64)
    arr = arr.astype(np.float64)
    if arr.shape[-1] != 2:
        raise RSMatchError(f"expected logit pairs with final dimension 2, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise RSMatchError("non-finite detector logits")
    return arr


def synth_confidence(logits):
    """Probability of 'synthetic' from a pair (or batch of pairs) of logits.

    Accepts array-likes shaped (..., 2) ordered [z_real, z_synthetic] and is
    numerically stable under large magnitudes via max-subtraction.
    """
    arr = _logit_pairs(logits)
    shifted = arr - arr.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    p = exp[..., 1] / exp.sum(axis=-1)
    return float(p) if p.ndim == 0 else p


def synth_margin(logits):
    """Synthetic-minus-real logit margin, a monotone form of the probability.

    Ranking by this margin orders samples exactly as ranking by
    ``synth_confidence`` would in exact arithmetic, but stays informative
    where confident probabilities would all round to 1.0.
    """
    arr = _logit_pairs(logits)
    z = arr[..., 1] - arr[..., 0]
    return float(z) if z.ndim == 0 else z
