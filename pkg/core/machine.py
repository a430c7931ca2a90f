"""État de la machine à pile: cadres, états de pile, threads et configuration.

Une configuration ⟨μ; σ; W; L⟩ regroupe:
- μ   pool des threads prêts (ordre d'insertion conservé)
- σ   mémoire: cellule → (valeur, sommet écrivain, signature de l'écrivain)
- W   attentes: nom de CV ou de mutex → liste FIFO d'enregistrements
- L   verrous: mutex → (détenteur, u1, u2); absent = libre

Les piles sont des tuples, cadre le plus interne en dernier.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Union

from core.errors import ErrorCode, MachineError
from core.lang import PermissionMap, Signature, Type

# ==============================================================================
# CADRES ET ÉTATS DE PILE
# ==============================================================================


@dataclass(frozen=True)
class HoleSeq:
    """[] ; s"""

    rest: Any


@dataclass(frozen=True)
class LetHole:
    """let x = [] in s"""

    var: str
    body: Any


@dataclass(frozen=True)
class WithLockAcquired:
    mutex: str


@dataclass(frozen=True)
class WithLockPromoted:
    """Section critique re-logée au plafond; rend la main à (thread, prio)."""

    mutex: str
    thread: str
    prio: str


Frame = Union[HoleSeq, LetHole, WithLockAcquired, WithLockPromoted]
Stack = tuple[Frame, ...]


@dataclass(frozen=True)
class RunInstr:
    stack: Stack
    instr: Any


@dataclass(frozen=True)
class RetVal:
    stack: Stack
    value: Any


@dataclass(frozen=True)
class RunStmt:
    stack: Stack
    stmt: Any


@dataclass(frozen=True)
class RetStmt:
    stack: Stack


StackState = Union[RunInstr, RetVal, RunStmt, RetStmt]


def priority_ceiling_lift(state: StackState, mutex: str, thread: str, prio: str) -> StackState:
    """K ↑β,a,ρ K″: le cadre WithLockAcquired(β) le plus interne devient promu.

    Les cadres des autres mutex sont traversés sans changement.

    Raises:
        MachineError: aucun cadre acquis pour β (E501)
    """
    frames = list(state.stack)
    for idx in range(len(frames) - 1, -1, -1):
        frame = frames[idx]
        if isinstance(frame, WithLockAcquired) and frame.mutex == mutex:
            frames[idx] = WithLockPromoted(mutex, thread, prio)
            return replace(state, stack=tuple(frames))
    raise MachineError(
        f"no acquired critical section for mutex '{mutex}' in the stack of {thread}",
        code=ErrorCode.LIFTING_FAILED,
        thread=thread,
    )


def is_liftable(state: StackState, mutex: str) -> bool:
    return any(isinstance(f, WithLockAcquired) and f.mutex == mutex for f in state.stack)


# ==============================================================================
# THREADS ET ENREGISTREMENTS
# ==============================================================================


@dataclass(frozen=True)
class ThreadState:
    name: str
    prio: str
    sig: Signature
    state: StackState
    perms: PermissionMap = field(default_factory=PermissionMap.empty)

    def with_state(self, state: StackState, **changes: Any) -> "ThreadState":
        return replace(self, state=state, **changes)


@dataclass(frozen=True)
class Waiter:
    """Thread bloqué sur un CV ou un mutex, avec ses sommets (u1, u2)."""

    thread: ThreadState
    u1: int
    u2: int

    @property
    def name(self) -> str:
        return self.thread.name

    @property
    def prio(self) -> str:
        return self.thread.prio


@dataclass(frozen=True)
class LockHolder:
    thread: str
    u1: int
    u2: int


@dataclass(frozen=True)
class MemEntry:
    value: Any
    vertex: int | None
    sig: Signature
    type: Type | None = None


# ==============================================================================
# CONFIGURATION
# ==============================================================================


@dataclass
class Configuration:
    pool: dict[str, ThreadState] = field(default_factory=dict)
    mem: dict[str, MemEntry] = field(default_factory=dict)
    waiting: dict[str, list[Waiter]] = field(default_factory=dict)
    locks: dict[str, LockHolder] = field(default_factory=dict)
    mutex_ceilings: dict[str, str] = field(default_factory=dict)
    cv_names: set[str] = field(default_factory=set)
    promoted: dict[str, str] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    def clone(self) -> "Configuration":
        """Copie indépendante (les états de thread sont immuables)."""
        return Configuration(
            pool=dict(self.pool),
            mem=dict(self.mem),
            waiting={k: list(v) for k, v in self.waiting.items()},
            locks=dict(self.locks),
            mutex_ceilings=dict(self.mutex_ceilings),
            cv_names=set(self.cv_names),
            promoted=dict(self.promoted),
            counters=dict(self.counters),
        )

    def fresh(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0)
        self.counters[prefix] = n + 1
        return f"{prefix}{n}"

    def enabled(self) -> list[str]:
        return list(self.pool)

    def waiters(self) -> list[tuple[str, Waiter]]:
        return [(key, w) for key, ws in self.waiting.items() for w in ws]

    def all_threads(self) -> list[ThreadState]:
        return list(self.pool.values()) + [w.thread for _, w in self.waiters()]

    def find_waiter(self, name: str) -> tuple[str, int] | None:
        for key, ws in self.waiting.items():
            for idx, w in enumerate(ws):
                if w.name == name:
                    return key, idx
        return None

    def resolve(self, name: str) -> str:
        """Suit la chaîne de promotion d'un détenteur (b → b′ → …)."""
        seen = set()
        while name in self.promoted and name not in seen:
            seen.add(name)
            name = self.promoted[name]
        return name

    def is_deadlocked(self) -> bool:
        return not self.pool and any(self.waiting.values())

    def is_finished(self) -> bool:
        return not self.pool and not any(self.waiting.values())
