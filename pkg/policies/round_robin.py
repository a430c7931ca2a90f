"""Tourniquet dans l'ordre de première apparition des threads."""

from policies.base import SchedulePolicy


class RoundRobinPolicy(SchedulePolicy):
    name = "rr"

    def __init__(self) -> None:
        self._rank: dict[str, int] = {}
        self._last: str | None = None

    def choose(self, enabled: list[str], turn: int) -> str:
        self._require(enabled)
        for name in enabled:
            self._rank.setdefault(name, len(self._rank))
        ordered = sorted(enabled, key=self._rank.__getitem__)
        if self._last is None:
            pick = ordered[0]
        else:
            last = self._rank.get(self._last, -1)
            later = [n for n in ordered if self._rank[n] > last]
            pick = later[0] if later else ordered[0]
        self._last = pick
        return pick
