"""Base Policy - contrat commun des politiques d'ordonnancement du run."""

from abc import ABC, abstractmethod

from core.errors import ErrorCode, MachineError


class SchedulePolicy(ABC):
    """Choisit le thread qui joue le prochain tour."""

    name: str = "base"

    @abstractmethod
    def choose(self, enabled: list[str], turn: int) -> str:
        """Retourne un nom pris dans `enabled` (non vide, ordre du pool)."""
        pass

    def _require(self, enabled: list[str]) -> None:
        if not enabled:
            raise MachineError("no enabled thread to schedule", code=ErrorCode.INVALID_POLICY)

    def __repr__(self) -> str:
        return f"<{self.name}>"
