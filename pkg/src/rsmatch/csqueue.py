"""Class-wise synthetic data queue.

K bounded FIFO sub-queues of mined sample ids, one per class. Each training
iteration picks P classes, and for each pushes the top-Q batch candidates
ranked by detector synthetic-confidence, evicting oldest entries beyond the
capacity. A pooled single-queue mode backs the class-wise-vs-single ablation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RSMatchError


@dataclass
class QueueUpdate:
    class_id: int
    pushed: list[str]
    evicted: list[str]


@dataclass
class QueueStats:
    per_class: list[int]
    total: int


@dataclass
class _Entry:
    sample_id: str
    timestamp: int


class CSQueue:
    """Bounded FIFO sub-queues of sample ids, deduplicated per sub-queue.

    ``pooled=True`` collapses the structure to one shared sub-queue of the
    same capacity; every pseudo-label then maps to sub-queue 0 (the ablation
    that removes the class-wise design).
    """

    def __init__(self, num_classes: int, capacity: int, pooled: bool = False):
        if num_classes < 1 or capacity < 1:
            raise RSMatchError("queue needs at least one class and capacity >= 1")
        self.num_classes = num_classes
        self.capacity = capacity
        self.pooled = pooled
        self.num_sub_queues = 1 if pooled else num_classes
        self._queues: list[list[_Entry]] = [[] for _ in range(self.num_sub_queues)]
        self._clock = 0

    def _slot(self, class_id: int) -> int:
        return 0 if self.pooled else class_id

    def update(self, batch_ids, pseudo_labels, synth_scores,
               classes_per_update: int, enqueue_per_class: int,
               rng: np.random.Generator) -> list[QueueUpdate]:
        """Mine one unlabeled batch into the sub-queues.

        For each of ``classes_per_update`` classes drawn uniformly without
        replacement, batch members pseudo-labeled with that class and not
        already enqueued are ranked by synthetic confidence (ties broken by
        lower batch index) and the top ``enqueue_per_class`` are appended;
        oldest entries are evicted down to capacity.
        """
        batch_ids = list(batch_ids)
        pseudo_labels = np.asarray(pseudo_labels)
        synth_scores = np.asarray(synth_scores, dtype=np.float64)
        if not (len(batch_ids) == len(pseudo_labels) == len(synth_scores)):
            raise RSMatchError(
                f"misaligned queue update inputs: {len(batch_ids)} ids, "
                f"{len(pseudo_labels)} pseudo-labels, {len(synth_scores)} scores")
        if pseudo_labels.size and (pseudo_labels.min() < 0 or pseudo_labels.max() >= self.num_classes):
            raise RSMatchError("pseudo-label outside [0, num_classes)")

        if self.pooled:
            chosen = [0]
        else:
            p = min(classes_per_update, self.num_classes)
            chosen = [int(c) for c in rng.choice(self.num_classes, size=p, replace=False)]

        updates = []
        for class_id in chosen:
            slot = self._slot(class_id)
            queue = self._queues[slot]
            present = {e.sample_id for e in queue}
            if self.pooled:
                candidates = [i for i in range(len(batch_ids)) if batch_ids[i] not in present]
            else:
                candidates = [i for i in range(len(batch_ids))
                              if pseudo_labels[i] == class_id and batch_ids[i] not in present]
            # stable sort on -score keeps lower batch index first on ties
            candidates.sort(key=lambda i: -synth_scores[i])
            pushed, evicted = [], []
            for i in candidates[:enqueue_per_class]:
                queue.append(_Entry(batch_ids[i], self._clock))
                self._clock += 1
                pushed.append(batch_ids[i])
            while len(queue) > self.capacity:
                evicted.append(queue.pop(0).sample_id)
            if pushed or evicted:
                updates.append(QueueUpdate(class_id, pushed, evicted))
        return updates

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[str] | None:
        """Draw ``batch_size`` ids uniformly with replacement, or None if empty."""
        if batch_size < 1:
            raise RSMatchError("batch_size must be >= 1")
        union = [e.sample_id for q in self._queues for e in q]
        if not union:
            return None
        picks = rng.integers(0, len(union), size=batch_size)
        return [union[i] for i in picks]

    def stats(self) -> QueueStats:
        if self.pooled:
            per_class = [len(self._queues[0])]
        else:
            per_class = [len(q) for q in self._queues]
        return QueueStats(per_class=per_class, total=sum(per_class))

    def contents(self) -> list[list[str]]:
        return [[e.sample_id for e in q] for q in self._queues]

    def state_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "capacity": self.capacity,
            "pooled": self.pooled,
            "clock": self._clock,
            "queues": [[(e.sample_id, e.timestamp) for e in q] for q in self._queues],
        }

    def load_state_dict(self, state: dict) -> None:
        if (state["num_classes"] != self.num_classes or state["capacity"] != self.capacity
                or state["pooled"] != self.pooled):
            raise RSMatchError("queue state does not match queue shape")
        self._clock = state["clock"]
        self._queues = [[_Entry(sid, ts) for sid, ts in q] for q in state["queues"]]
