"""Loss terms for contamination-aware semi-supervised training.

Five terms share the step: supervised classification, gated consistency on
the real branch, gated consistency on the dummy branch, supervised detection
over labeled-vs-queue batches, and detector self-training. Gates are
computed once from weak-view outputs and passed into the loss functions, so
gradient checks can freeze them while probing a single term.

Sum-over-fixed-denominator form is used for all gated terms: absent samples
contribute exact zeros instead of shrinking the denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F


@dataclass(frozen=True)
class Gates:
    """Per-sample routing for one unlabeled batch, from detached weak views.

    ``pseudo`` always comes from the real classification head; the dummy
    branch reuses it. ``weight`` is the strategy's confidence weight and
    ``synth_verdict`` the detector's argmax call (score > 0.5).
    """

    pseudo: torch.Tensor         # (n,) long
    weight: torch.Tensor         # (n,) float in [0, 1]
    synth_verdict: torch.Tensor  # (n,) bool

    @property
    def real_weight(self) -> torch.Tensor:
        return self.weight * (~self.synth_verdict).to(self.weight.dtype)

    @property
    def synth_weight(self) -> torch.Tensor:
        return self.weight * self.synth_verdict.to(self.weight.dtype)


def compute_gates(weak_class_logits: torch.Tensor, synth_scores: torch.Tensor | None,
                  strategy, gate_mode: str = "detector") -> Gates:
    """Derive routing gates; ``gate_mode='all_real'`` forces real verdicts
    without consulting the detector (synth_scores may be None)."""
    with torch.no_grad():
        probs = torch.softmax(weak_class_logits.detach(), dim=1)
        weight = strategy.weights(probs)
        pseudo = probs.argmax(dim=1)
        if gate_mode == "all_real" or synth_scores is None:
            verdict = torch.zeros(probs.shape[0], dtype=torch.bool)
        else:
            scores = synth_scores.detach() if isinstance(synth_scores, torch.Tensor) \
                else torch.as_tensor(synth_scores)
            verdict = scores > 0.5
    return Gates(pseudo=pseudo, weight=weight, synth_verdict=verdict)


def supervised_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy on the labeled batch."""
    return F.cross_entropy(logits, labels)


def weighted_consistency_loss(strong_logits: torch.Tensor, pseudo: torch.Tensor,
                              weight: torch.Tensor, denom: int) -> torch.Tensor:
    """Sum of per-sample weighted cross-entropy divided by a fixed count."""
    ce = F.cross_entropy(strong_logits, pseudo, reduction="none")
    return (ce * weight).sum() / denom


def real_branch_loss(strong_real_logits: torch.Tensor, gates: Gates, denom: int) -> torch.Tensor:
    """Consistency on samples that are confident and judged real."""
    return weighted_consistency_loss(strong_real_logits, gates.pseudo, gates.real_weight, denom)


def dummy_branch_loss(strong_dummy_logits: torch.Tensor, gates: Gates, denom: int):
    """Consistency on samples that are confident and judged synthetic.

    Returns the python float 0.0 when nothing is routed to the dummy head,
    so totals composed with it stay bitwise identical to runs where the
    branch does not exist at all.
    """
    w = gates.synth_weight
    if not bool((w > 0).any()):
        return 0.0
    return weighted_consistency_loss(strong_dummy_logits, gates.pseudo, w, denom)


def detection_supervised_loss(real_logits: torch.Tensor, synth_logits: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over a balanced real/synthetic detector batch.

    Index 0 is real, index 1 is synthetic (matching ``synth_confidence``).
    """
    logits = torch.cat([real_logits, synth_logits], dim=0)
    targets = torch.cat([
        torch.zeros(real_logits.shape[0], dtype=torch.long),
        torch.ones(synth_logits.shape[0], dtype=torch.long),
    ])
    return F.cross_entropy(logits, targets)


def detection_verdicts(weak_det_logits: torch.Tensor, threshold: float
                       ) -> tuple[torch.Tensor, torch.Tensor]:
    """Hard verdicts and confidence mask from detached weak detector views."""
    with torch.no_grad():
        probs = torch.softmax(weak_det_logits.detach(), dim=1)
        conf, verdict = probs.max(dim=1)
        mask = (conf >= threshold).to(probs.dtype)
    return verdict, mask


def detection_consistency_loss(strong_det_logits: torch.Tensor, verdict: torch.Tensor,
                               mask: torch.Tensor, denom: int) -> torch.Tensor:
    ce = F.cross_entropy(strong_det_logits, verdict, reduction="none")
    return (ce * mask.to(strong_det_logits.dtype)).sum() / denom


def detection_selftrain_loss(weak_det_logits: torch.Tensor, strong_det_logits: torch.Tensor,
                             threshold: float, denom: int) -> torch.Tensor:
    """Detector consistency: confident weak verdicts supervise strong views."""
    verdict, mask = detection_verdicts(weak_det_logits, threshold)
    return detection_consistency_loss(strong_det_logits, verdict, mask, denom)
