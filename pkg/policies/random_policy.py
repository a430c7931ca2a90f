"""Choix uniforme parmi les threads prêts, reproductible par graine."""

import random

from policies.base import SchedulePolicy


class RandomPolicy(SchedulePolicy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)

    def choose(self, enabled: list[str], turn: int) -> str:
        self._require(enabled)
        return self._rng.choice(enabled)

    def __repr__(self) -> str:
        return f"<random seed={self.seed}>"
