"""Arbre de syntaxe abstraite des programmes l4s.

Les instructions ne contiennent que des valeurs comme sous-composants: toute
expression composée doit être liée par un `let` dans le source.

Chaque nœud porte une position source optionnelle (`span`) ignorée par
l'égalité, pour que parse(pretty_print(ast)) == ast.
"""

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Any, Callable, Iterator, Union

from core.lang import PermissionLevel, PriorityOrder, Type


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int
    end_column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


def _span() -> Any:
    return field(default=None, compare=False, repr=False)


# ==============================================================================
# VALEURS
# ==============================================================================

@dataclass(frozen=True)
class Var:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class UnitVal:
    span: Span | None = _span()


@dataclass(frozen=True)
class Num:
    n: int
    span: Span | None = _span()


@dataclass(frozen=True)
class CVHandle:
    """Poignée de CV à l'exécution; `prio` est la priorité de la poignée."""

    name: str
    prio: str
    span: Span | None = _span()


@dataclass(frozen=True)
class MutexHandle:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class RefHandle:
    name: str
    span: Span | None = _span()


Value = Union[Var, UnitVal, Num, CVHandle, MutexHandle, RefHandle]


# ==============================================================================
# INSTRUCTIONS
# ==============================================================================

@dataclass(frozen=True)
class Grant:
    """Entrée de la carte passée à un spawn.

    `x@P:level` passe `level` pour le CV de x à la priorité P; `all(x)`
    (prio et level à None) passe toute la permission du spawner sur ce CV.
    """

    target: Value
    prio: str | None = None
    level: PermissionLevel | None = None
    span: Span | None = _span()

    @property
    def is_all(self) -> bool:
        return self.prio is None


@dataclass(frozen=True)
class Spawn:
    prio: str
    grants: tuple[Grant, ...]
    body: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class NewRef:
    type: Type
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class Deref:
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class Assign:
    target: Value
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class NewCV:
    prio: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Wait:
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class Signal:
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class Broadcast:
    value: Value
    span: Span | None = _span()


@dataclass(frozen=True)
class Promote:
    value: Value
    prio: str
    span: Span | None = _span()


@dataclass(frozen=True)
class NewMutex:
    prio: str
    span: Span | None = _span()


@dataclass(frozen=True)
class ReturnVal:
    value: Value
    span: Span | None = _span()


Instruction = Union[
    Spawn, NewRef, Deref, Assign, NewCV, Wait, Signal, Broadcast, Promote, NewMutex, ReturnVal
]


# ==============================================================================
# INSTRUCTIONS DE CONTRÔLE (STATEMENTS)
# ==============================================================================

@dataclass(frozen=True)
class Let:
    var: str
    instr: Instruction
    body: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class WithLock:
    mutex: Value
    body: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class TryWith:
    mutex: Value
    acquired: "Statement"
    failed: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class If:
    cond: Value
    then: "Statement"
    orelse: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class While:
    cond: Value
    body: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class Seq:
    first: "Statement"
    second: "Statement"
    span: Span | None = _span()


@dataclass(frozen=True)
class Skip:
    span: Span | None = _span()


Statement = Union[Let, WithLock, TryWith, If, While, Seq, Skip]

# Variable liée par le sucre `i;` (instruction en position de statement)
DISCARD = "_"


@dataclass(frozen=True)
class SourceProgram:
    order: PriorityOrder
    body: Statement
    text: str = field(default="", compare=False, repr=False)


# ==============================================================================
# PARCOURS ET RÉÉCRITURES
# ==============================================================================

def children(node: Any) -> Iterator[Any]:
    """Sous-nœuds directs (valeurs, instructions, statements, grants)."""
    for f in fields(node):
        if f.name == "span":
            continue
        val = getattr(node, f.name)
        if isinstance(val, tuple):
            yield from (v for v in val if is_dataclass(v))
        elif is_dataclass(val) and not isinstance(val, (PriorityOrder, Span)):
            yield val


def walk(node: Any) -> Iterator[Any]:
    """Parcours préfixe de tous les nœuds."""
    yield node
    for child in children(node):
        yield from walk(child)


def substitute(node: Any, var: str, value: Value) -> Any:
    """[value/var]node, en respectant le masquage par `let`."""
    if isinstance(node, Var):
        return value if node.name == var else node
    if isinstance(node, Let):
        instr = substitute(node.instr, var, value)
        body = node.body if node.var == var else substitute(node.body, var, value)
        return replace(node, instr=instr, body=body)
    if isinstance(node, Grant):
        return replace(node, target=substitute(node.target, var, value))
    if isinstance(node, (UnitVal, Num, CVHandle, MutexHandle, RefHandle, Skip)):
        return node
    changes = {}
    for f in fields(node):
        val = getattr(node, f.name)
        if isinstance(val, tuple):
            changes[f.name] = tuple(substitute(v, var, value) for v in val)
        elif f.name != "type" and is_dataclass(val) and not isinstance(val, Span):
            changes[f.name] = substitute(val, var, value)
    return replace(node, **changes)


def map_priorities(node: Any, mapping: dict[str, str]) -> Any:
    """Renomme les priorités partout (nœuds, grants, types)."""
    if isinstance(node, tuple):
        return tuple(map_priorities(n, mapping) for n in node)
    if isinstance(node, SourceProgram):
        order = PriorityOrder(tuple(mapping.get(n, n) for n in node.order.names))
        return replace(node, order=order, body=map_priorities(node.body, mapping))
    if not is_dataclass(node) or isinstance(node, Span):
        return node
    changes = {}
    for f in fields(node):
        val = getattr(node, f.name)
        if f.name == "prio" and isinstance(val, str):
            changes[f.name] = mapping.get(val, val)
        elif isinstance(val, tuple) or (is_dataclass(val) and not isinstance(val, Span)):
            changes[f.name] = map_priorities(val, mapping)
    return replace(node, **changes) if changes else node


def rewrite(node: Any, fn: Callable[[Any], Any]) -> Any:
    """Réécriture ascendante: `fn` est appliquée à chaque nœud après ses enfants."""
    if isinstance(node, tuple):
        return tuple(rewrite(n, fn) for n in node)
    if not is_dataclass(node) or isinstance(node, (Span, PriorityOrder)):
        return node
    changes = {}
    for f in fields(node):
        if f.name in ("span", "type"):
            continue
        val = getattr(node, f.name)
        if isinstance(val, tuple) or is_dataclass(val):
            changes[f.name] = rewrite(val, fn)
    rebuilt = replace(node, **changes) if changes else node
    return fn(rebuilt)
