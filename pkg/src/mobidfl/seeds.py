"""Named, independent random substreams derived from a master seed.

Every stream is a pure function of ``(master_seed, run, purpose, *keys)``, so
changing one part of an experiment (say the mobility pattern) never shifts the
draws used by another (initial locations, data partition, model init).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def purpose_code(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


@dataclass(frozen=True)
class RunSeed:
    master_seed: int
    run: int = 0

    def sequence(self, purpose: str, *keys: int) -> np.random.SeedSequence:
        entropy = [int(self.master_seed), int(self.run), purpose_code(purpose), *map(int, keys)]
        if any(e < 0 for e in entropy):
            raise ValueError(f"seed components must be nonnegative, got {entropy}")
        return np.random.SeedSequence(entropy)

    def rng(self, purpose: str, *keys: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(purpose, *keys))
