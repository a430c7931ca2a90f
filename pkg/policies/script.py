"""Choix imposés (`--script a0,a0,a1`), puis politique de repli."""

from core.errors import ErrorCode, MachineError
from core.logging_config import get_logger
from policies.base import SchedulePolicy
from policies.random_policy import RandomPolicy
from policies.round_robin import RoundRobinPolicy

logger = get_logger(__name__)


class ScriptPolicy(SchedulePolicy):
    """Suit la liste de choix; au-delà, délègue à `fallback`.

    Raises (à l'appel de choose):
        MachineError: thread scripté absent du pool (E503)
    """

    name = "script"

    def __init__(self, choices: list[str], fallback: SchedulePolicy | None = None):
        self.choices = list(choices)
        self.fallback = fallback or RoundRobinPolicy()
        self._pos = 0

    @property
    def exhausted(self) -> bool:
        return self._pos >= len(self.choices)

    def choose(self, enabled: list[str], turn: int) -> str:
        self._require(enabled)
        if self.exhausted:
            return self.fallback.choose(enabled, turn)
        pick = self.choices[self._pos]
        self._pos += 1
        if pick not in enabled:
            raise MachineError(
                f"scripted thread '{pick}' is not enabled at turn {turn} (enabled: {', '.join(enabled)})",
                code=ErrorCode.THREAD_NOT_ENABLED,
                thread=pick,
            )
        return pick


def parse_script(text: str) -> list[str]:
    """`a0,a0 a1` → ['a0', 'a0', 'a1'] (virgules ou espaces)."""
    return [part for part in text.replace(",", " ").split() if part]


def make_policy(name: str, seed: int = 0, script: list[str] | None = None) -> SchedulePolicy:
    """Fabrique une politique depuis les options de la CLI.

    Raises:
        MachineError: nom inconnu ou script manquant (E504)
    """
    if name == "random":
        return RandomPolicy(seed)
    if name == "rr":
        return RoundRobinPolicy()
    if name == "script":
        if not script:
            raise MachineError("script policy needs a non-empty script", code=ErrorCode.INVALID_POLICY)
        logger.debug(f"Script policy with {len(script)} choice(s), random fallback seed={seed}")
        return ScriptPolicy(script, fallback=RandomPolicy(seed))
    raise MachineError(f"unknown policy '{name}'", code=ErrorCode.INVALID_POLICY)
