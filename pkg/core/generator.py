"""Génération aléatoire de programmes bien typés, mutation et minimisation.

Les programmes sont bien typés par construction:
- le thread principal (priorité la plus basse) crée cellules, mutex et CV
- chaque CV a un unique émetteur, qui reçoit `c@ρ: owned` à sa priorité
- les attentes portent sur une poignée de priorité égale à celle du thread:
  la poignée d'origine (plus basse priorité) ou, quand l'émetteur est au
  sommet de l'ordre, une poignée promue après son spawn
- les sections critiques ne touchent que les cellules (mutex au plafond
  le plus haut, pas d'imbrication)

La mutation casse une annotation (grant, priorité) pour exercer les chemins
de rejet du vérificateur.
"""

import random
from dataclasses import dataclass, replace
from typing import Any, Callable

from core.lang import NAT, OWNED, PriorityOrder
from core.logging_config import get_logger
from core.syntax import (
    DISCARD,
    Assign,
    Broadcast,
    Deref,
    Grant,
    If,
    Let,
    NewCV,
    NewMutex,
    NewRef,
    Num,
    Promote,
    Seq,
    Signal,
    Skip,
    SourceProgram,
    Spawn,
    TryWith,
    Var,
    Wait,
    While,
    WithLock,
    rewrite,
)

logger = get_logger(__name__)

PRIORITY_SETS: tuple[tuple[str, ...], ...] = (
    ("P",),
    ("Low", "High"),
    ("Low", "Med", "High"),
)


@dataclass(frozen=True)
class GenSize:
    cvs: int
    workers: int
    ops: int
    waiters: int


SIZES: dict[str, GenSize] = {
    "small": GenSize(cvs=1, workers=2, ops=3, waiters=1),
    "medium": GenSize(cvs=2, workers=3, ops=5, waiters=2),
}

Item = tuple[str, Any, Any]  # ("let", var, instr) | ("instr", None, instr) | ("stmt", None, stmt)


def fold(items: list[Item]) -> Any:
    """Replie une suite d'éléments en statement (même forme que le parser)."""
    if not items:
        return Skip()
    body: Any = None
    for kind, var, node in reversed(items):
        if kind == "stmt":
            body = node if body is None else Seq(node, body)
        else:
            name = var if kind == "let" else DISCARD
            body = Let(name, node, Skip() if body is None else body)
    return body


def program_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


class ProgramGenerator:
    """Générateur reproductible depuis une graine.

    Usage:
        program = ProgramGenerator(seed=7, size="small").generate()
    """

    def __init__(self, seed: int, size: str = "small"):
        self.seed = seed
        self.size = SIZES[size]
        self.rng = random.Random(seed)
        self._vars = 0
        self.refs: list[str] = []
        self.mutexes: list[str] = []

    def _fresh(self, prefix: str) -> str:
        self._vars += 1
        return f"{prefix}{self._vars}"

    # ------------------------------------------------------------------
    # corps de threads
    # ------------------------------------------------------------------

    def _cell_ops(self, n: int) -> list[Item]:
        """Opérations neutres en permissions: lectures, écritures, skip."""
        rng = self.rng
        out: list[Item] = []
        for _ in range(n):
            r = Var(rng.choice(self.refs))
            pick = rng.random()
            if pick < 0.4:
                out.append(("instr", None, Assign(r, Num(rng.randint(0, 2)))))
            elif pick < 0.8:
                x = self._fresh("x")
                out.append(("let", x, Deref(r)))
                then = fold([("instr", None, Assign(r, Num(0)))]) if rng.random() < 0.5 else Skip()
                out.append(("stmt", None, If(Var(x), then, Skip())))
            else:
                out.append(("stmt", None, Skip()))
        return out

    def _ops(self, n: int, order: PriorityOrder) -> list[Item]:
        rng = self.rng
        out: list[Item] = []
        for _ in range(n):
            pick = rng.random()
            if self.mutexes and pick < 0.25:
                m = Var(rng.choice(self.mutexes))
                out.append(("stmt", None, WithLock(m, fold(self._cell_ops(rng.randint(1, 2))))))
            elif self.mutexes and pick < 0.35:
                m = Var(rng.choice(self.mutexes))
                acquired = fold(self._cell_ops(1))
                out.append(("stmt", None, TryWith(m, acquired, fold(self._cell_ops(1)))))
            elif pick < 0.45:
                child = Spawn(rng.choice(order.names), (), fold(self._cell_ops(rng.randint(1, 2))))
                out.append(("instr", None, child))
            elif pick < 0.5:
                out.append(("stmt", None, While(Num(0), fold(self._cell_ops(1)))))
            else:
                out.extend(self._cell_ops(1))
        return out

    def _body(self, order: PriorityOrder, core: list[Item]) -> Any:
        rng = self.rng
        before = self._ops(rng.randint(0, self.size.ops), order)
        after = self._ops(rng.randint(0, 1), order)
        return fold(before + core + after)

    # ------------------------------------------------------------------
    # programme
    # ------------------------------------------------------------------

    def _channel(self, order: PriorityOrder) -> list[Item]:
        """Un CV: création, un émetteur propriétaire, des threads en attente."""
        rng = self.rng
        low, high = order.lowest, order.highest
        cv = self._fresh("c")
        items: list[Item] = [("let", cv, NewCV(low))]

        signaler_prio = rng.choice(order.names)
        waiters = rng.randint(0, self.size.waiters)
        promote = signaler_prio == high and high != low and rng.random() < 0.5
        handle, waiter_prio = cv, low
        if promote:
            handle, waiter_prio = self._fresh("p"), high

        if waiters > 1 and rng.random() < 0.5:
            wake: list[Item] = [("instr", None, Broadcast(Var(cv)))]
        else:
            wake = [("instr", None, Signal(Var(cv))) for _ in range(max(1, waiters))]
        signaler = Spawn(
            signaler_prio,
            (Grant(Var(cv), signaler_prio, OWNED),),
            self._body(order, wake),
        )
        waiting = [
            ("instr", None, Spawn(waiter_prio, (), self._body(order, [("instr", None, Wait(Var(handle)))])))
            for _ in range(waiters)
        ]

        if promote:
            items.append(("instr", None, signaler))
            items.append(("let", handle, Promote(Var(cv), high)))
            items.extend(waiting)
        else:
            spawns = [("instr", None, signaler)] + waiting
            rng.shuffle(spawns)
            items.extend(spawns)
        return items

    def generate(self) -> SourceProgram:
        rng = self.rng
        order = PriorityOrder(rng.choice(PRIORITY_SETS))
        items: list[Item] = []

        for _ in range(rng.randint(1, 2)):
            r = self._fresh("r")
            self.refs.append(r)
            items.append(("let", r, NewRef(NAT, Num(rng.randint(0, 1)))))
        if rng.random() < 0.6:
            m = self._fresh("m")
            self.mutexes.append(m)
            items.append(("let", m, NewMutex(order.highest)))

        for _ in range(rng.randint(0, self.size.cvs)):
            items.extend(self._channel(order))
        for _ in range(rng.randint(0, self.size.workers)):
            worker = Spawn(rng.choice(order.names), (), self._body(order, []))
            items.append(("instr", None, worker))
        items.extend(self._ops(rng.randint(0, 2), order))
        return SourceProgram(order, fold(items))


def generate_programs(seed: int, count: int, size: str = "small") -> list[tuple[int, SourceProgram]]:
    """`count` programmes; chacun est reproductible depuis sa propre graine."""
    out = []
    for index in range(count):
        s = program_seed(seed, index)
        out.append((s, ProgramGenerator(s, size).generate()))
    return out


# ==============================================================================
# MUTATION
# ==============================================================================

def _mutations(order: PriorityOrder) -> list[tuple[str, Callable[[Any], bool], Callable[[Any], Any]]]:
    low, high = order.lowest, order.highest
    others = lambda p: [q for q in order.names if q != p]  # noqa: E731
    return [
        (
            "drop-grants",
            lambda n: isinstance(n, Spawn) and bool(n.grants),
            lambda n: replace(n, grants=()),
        ),
        (
            "grant-prio",
            lambda n: isinstance(n, Grant) and n.prio is not None and bool(others(n.prio)),
            lambda n: replace(n, prio=others(n.prio)[0]),
        ),
        (
            "newcv-up",
            lambda n: isinstance(n, NewCV) and n.prio != high,
            lambda n: replace(n, prio=high),
        ),
        (
            "spawn-up",
            lambda n: isinstance(n, Spawn) and n.prio != high,
            lambda n: replace(n, prio=high),
        ),
        (
            "mutex-down",
            lambda n: isinstance(n, NewMutex) and n.prio != low,
            lambda n: replace(n, prio=low),
        ),
    ]


def _rewrite_at(node: Any, match: Callable[[Any], bool], change: Callable[[Any], Any], target: int) -> tuple[Any, int]:
    """Applique `change` au `target`-ième nœud satisfaisant `match` (ordre ascendant)."""
    seen = 0

    def fn(n: Any) -> Any:
        nonlocal seen
        if not match(n):
            return n
        seen += 1
        return change(n) if seen - 1 == target else n

    return rewrite(node, fn), seen


def mutate(program: SourceProgram, rng: random.Random) -> tuple[str, SourceProgram] | None:
    """Une mutation au hasard parmi les sites applicables; None si aucun."""
    sites = []
    for name, match, change in _mutations(program.order):
        _, count = _rewrite_at(program.body, match, change, -1)
        sites.extend((name, match, change, k) for k in range(count))
    if not sites:
        return None
    name, match, change, k = rng.choice(sites)
    body, _ = _rewrite_at(program.body, match, change, k)
    return name, replace(program, body=body)


# ==============================================================================
# MINIMISATION
# ==============================================================================

def _reducible(n: Any) -> bool:
    if isinstance(n, Let):
        return n.var == DISCARD
    if isinstance(n, Spawn):
        return not isinstance(n.body, Skip)
    return isinstance(n, (Seq, WithLock, TryWith, If, While))


def _reduce(n: Any) -> Any:
    if isinstance(n, Let):
        return n.body
    if isinstance(n, Seq):
        return n.second
    if isinstance(n, Spawn):
        return replace(n, body=Skip())
    if isinstance(n, WithLock):
        return n.body
    if isinstance(n, TryWith):
        return n.failed
    if isinstance(n, If):
        return n.then
    return Skip()


def shrink(program: SourceProgram, still_fails: Callable[[SourceProgram], bool], max_attempts: int = 500) -> SourceProgram:
    """Suppression gloutonne de statements tant que l'échec persiste."""
    current = program
    attempts = 0
    improved = True
    while improved and attempts < max_attempts:
        improved = False
        _, count = _rewrite_at(current.body, _reducible, _reduce, -1)
        for k in range(count):
            attempts += 1
            body, _ = _rewrite_at(current.body, _reducible, _reduce, k)
            candidate = replace(current, body=body)
            if candidate != current and still_fails(candidate):
                current = candidate
                improved = True
                break
            if attempts >= max_attempts:
                break
    logger.debug(f"Shrink finished after {attempts} attempt(s)")
    return current
