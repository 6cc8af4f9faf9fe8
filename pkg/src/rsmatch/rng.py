"""Named deterministic random streams derived from a single run seed.

Every consumer of randomness (data shuffling, augmentation, queue class
selection, parameter init, ...) pulls from its own named stream, so adding
or removing one consumer never perturbs the draws seen by the others.
Identical seed therefore means bit-identical draws per stream across runs.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch


def _entropy_words(seed: int, name: str) -> list[int]:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    words = np.frombuffer(digest, dtype=np.uint32)
    return [seed & 0xFFFFFFFFFFFFFFFF] + [int(w) for w in words]


class RngStreams:
    """Lazy registry of independent numpy and torch generators."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._numpy: dict[str, np.random.Generator] = {}
        self._torch: dict[str, torch.Generator] = {}

    def numpy(self, name: str) -> np.random.Generator:
        if name not in self._numpy:
            ss = np.random.SeedSequence(_entropy_words(self.seed, "numpy:" + name))
            self._numpy[name] = np.random.default_rng(ss)
        return self._numpy[name]

    def torch(self, name: str) -> torch.Generator:
        if name not in self._torch:
            ss = np.random.SeedSequence(_entropy_words(self.seed, "torch:" + name))
            gen = torch.Generator()
            gen.manual_seed(int(ss.generate_state(1, np.uint64)[0] >> 1))
            self._torch[name] = gen
        return self._torch[name]

    def state_dict(self) -> dict:
        return {
            "seed": self.seed,
            "numpy": {k: g.bit_generator.state for k, g in self._numpy.items()},
            "torch": {k: g.get_state() for k, g in self._torch.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.seed = int(state["seed"])
        for name, bg_state in state["numpy"].items():
            self.numpy(name).bit_generator.state = bg_state
        for name, t_state in state["torch"].items():
            self.torch(name).set_state(t_state)
