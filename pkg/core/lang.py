"""Définitions partagées du calcul: priorités, types, permissions, signatures.

Toutes les valeurs de ce module sont immuables: les méthodes de mise à jour
retournent une nouvelle instance. Elles peuvent donc être partagées entre
analyses sans précaution particulière.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union

from core.errors import ErrorCode, ParseError, ResolutionError


# ==============================================================================
# PRIORITÉS
# ==============================================================================

@dataclass(frozen=True)
class PriorityOrder:
    """Ordre total déclaré par le programme (`priorities Low < Med < High;`).

    Validation:
    - au moins une priorité
    - noms distincts
    """

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.names:
            raise ParseError(
                "priority declaration must name at least one priority",
                code=ErrorCode.INVALID_PRIORITY_ORDER,
            )
        if len(set(self.names)) != len(self.names):
            raise ParseError(
                f"duplicate priority in declaration: {' < '.join(self.names)}",
                code=ErrorCode.INVALID_PRIORITY_ORDER,
            )

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ResolutionError(
                f"unknown priority '{name}'",
                code=ErrorCode.UNKNOWN_PRIORITY,
            ) from None

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def le(self, a: str, b: str) -> bool:
        return self.index(a) <= self.index(b)

    def lt(self, a: str, b: str) -> bool:
        return self.index(a) < self.index(b)

    @property
    def lowest(self) -> str:
        return self.names[0]

    @property
    def highest(self) -> str:
        return self.names[-1]

    def at_or_above(self, prio: str) -> tuple[str, ...]:
        """Priorités ρ0 telles que prio ⪯ ρ0."""
        return self.names[self.index(prio):]

    def between(self, low: str, high: str) -> tuple[str, ...]:
        """Priorités ρ0 avec low ⪯ ρ0 et ρ0 ≺ high (intervalle semi-ouvert)."""
        return self.names[self.index(low):self.index(high)]

    def rank(self, prio: str) -> int:
        """Rang pour le tri (plus grand = plus prioritaire)."""
        return self.index(prio)

    def __str__(self) -> str:
        return " < ".join(self.names)


def prio_le(order: PriorityOrder, a: str, b: str) -> bool:
    """a ⪯ b dans l'ordre déclaré (ResolutionError si un nom est inconnu)."""
    return order.le(a, b)


# ==============================================================================
# NIVEAUX ET CARTES DE PERMISSION
# ==============================================================================

class PermissionLevel(str, Enum):
    """Niveau de permission d'un thread sur un CV à une priorité."""

    NONE = "none"
    SHARED = "shared"
    OWNED = "owned"


NONE = PermissionLevel.NONE
SHARED = PermissionLevel.SHARED
OWNED = PermissionLevel.OWNED

# Règles de découpage π ⇝ π2/π3
_SPLITS: dict[PermissionLevel, frozenset[tuple[PermissionLevel, PermissionLevel]]] = {
    OWNED: frozenset({(OWNED, NONE), (NONE, OWNED), (SHARED, SHARED)}),
    SHARED: frozenset({(NONE, SHARED), (SHARED, NONE), (SHARED, SHARED)}),
    NONE: frozenset({(NONE, NONE)}),
}


def split_permission(level: PermissionLevel) -> frozenset[tuple[PermissionLevel, PermissionLevel]]:
    """Paires (π2, π3) autorisées par le découpage de `level`."""
    return _SPLITS[level]


PermKey = tuple[str, str]  # (nom de CV, priorité)


@dataclass(frozen=True)
class PermissionMap:
    """Ψ: (CV, priorité) → niveau. Les entrées absentes valent NONE.

    Les entrées NONE ne sont jamais stockées, ce qui rend l'égalité
    structurelle identique à l'égalité des fonctions totales.
    """

    entries: Mapping[PermKey, PermissionLevel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned = {k: v for k, v in self.entries.items() if v is not NONE}
        object.__setattr__(self, "entries", cleaned)

    @classmethod
    def empty(cls) -> "PermissionMap":
        return cls({})

    def get(self, cv: str, prio: str) -> PermissionLevel:
        return self.entries.get((cv, prio), NONE)

    def set(self, cv: str, prio: str, level: PermissionLevel) -> "PermissionMap":
        updated = dict(self.entries)
        updated[(cv, prio)] = level
        return PermissionMap(updated)

    def update(self, changes: Mapping[PermKey, PermissionLevel]) -> "PermissionMap":
        updated = dict(self.entries)
        updated.update(changes)
        return PermissionMap(updated)

    def cvs(self) -> set[str]:
        return {cv for cv, _ in self.entries}

    def row(self, cv: str) -> dict[str, PermissionLevel]:
        """Permissions non nulles d'un CV, indexées par priorité."""
        return {p: lvl for (c, p), lvl in self.entries.items() if c == cv}

    def restrict(self, cvs: Iterable[str]) -> "PermissionMap":
        keep = set(cvs)
        return PermissionMap({k: v for k, v in self.entries.items() if k[0] in keep})

    def keys(self) -> set[PermKey]:
        return set(self.entries)

    def __iter__(self) -> Iterator[tuple[PermKey, PermissionLevel]]:
        return iter(sorted(self.entries.items()))

    def __len__(self) -> int:
        return len(self.entries)

    def __str__(self) -> str:
        if not self.entries:
            return "{}"
        body = ", ".join(f"{cv}@{p}:{lvl.value}" for (cv, p), lvl in self)
        return "{" + body + "}"


def validate_split(whole: PermissionMap, kept: PermissionMap, passed: PermissionMap) -> bool:
    """Vrai si (kept, passed) découpe `whole` point par point."""
    keys = whole.keys() | kept.keys() | passed.keys()
    return all(
        (kept.get(*k), passed.get(*k)) in split_permission(whole.get(*k))
        for k in keys
    )


def derive_kept(whole: PermissionMap, passed: PermissionMap) -> PermissionMap | None:
    """Reste du spawner après avoir passé `passed`.

    Choix par entrée: Owned/Owned → None, Owned/Shared → Shared,
    Shared/Shared → Shared, X/None → X. Retourne None si `passed` ne peut
    pas être prélevé sur `whole`.
    """
    kept: dict[PermKey, PermissionLevel] = {}
    for key in whole.keys() | passed.keys():
        have, give = whole.get(*key), passed.get(*key)
        if give is NONE:
            rest = have
        elif give is SHARED and have in (OWNED, SHARED):
            rest = SHARED
        elif give is OWNED and have is OWNED:
            rest = NONE
        else:
            return None
        kept[key] = rest
    return PermissionMap(kept)


# ==============================================================================
# TYPES
# ==============================================================================

@dataclass(frozen=True)
class UnitType:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class NatType:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class RefType:
    inner: "Type"

    def __str__(self) -> str:
        return f"ref<{self.inner}>"


@dataclass(frozen=True)
class CVType:
    """cv[α]⟨ρ⟩. Dans le source, `cv` est le nom de la variable qui désigne α."""

    cv: str
    prio: str

    def __str__(self) -> str:
        return f"cv[{self.cv}]<{self.prio}>"


@dataclass(frozen=True)
class MutexType:
    prio: str

    def __str__(self) -> str:
        return f"mutex<{self.prio}>"


Type = Union[UnitType, NatType, RefType, CVType, MutexType]

UNIT = UnitType()
NAT = NatType()


# ==============================================================================
# SIGNATURES
# ==============================================================================

@dataclass(frozen=True)
class Signature:
    """Σ: cellules, mutex et poignées de CV connus d'un thread.

    Un CV peut apparaître avec plusieurs priorités de poignée (promotion).
    """

    refs: Mapping[str, Type] = field(default_factory=dict)
    mutexes: Mapping[str, str] = field(default_factory=dict)
    cvs: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def with_ref(self, cell: str, ty: Type) -> "Signature":
        refs = dict(self.refs)
        refs[cell] = ty
        return Signature(refs, self.mutexes, self.cvs)

    def with_mutex(self, mutex: str, ceiling: str) -> "Signature":
        mutexes = dict(self.mutexes)
        mutexes[mutex] = ceiling
        return Signature(self.refs, mutexes, self.cvs)

    def with_cv(self, cv: str, prio: str) -> "Signature":
        cvs = dict(self.cvs)
        cvs[cv] = cvs.get(cv, frozenset()) | {prio}
        return Signature(self.refs, self.mutexes, cvs)

    def merge(self, other: "Signature") -> "Signature":
        """Union de deux signatures (lecture d'une cellule écrite ailleurs)."""
        if other is self:
            return self
        refs = {**other.refs, **self.refs}
        mutexes = {**other.mutexes, **self.mutexes}
        cvs = dict(self.cvs)
        for cv, prios in other.cvs.items():
            cvs[cv] = cvs.get(cv, frozenset()) | prios
        return Signature(refs, mutexes, cvs)

    def cv_prios(self, cv: str) -> frozenset[str]:
        return self.cvs.get(cv, frozenset())
