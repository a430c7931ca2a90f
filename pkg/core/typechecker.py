"""Vérificateur de types l4s: valeurs, instructions, statements et permissions.

Jugement implémenté: Σ;Γ;Ψ ⊢ρ i : τ ⊣ Ψ′ (instructions) et Σ;Γ;Ψ ⊢ρ s ⊣ Ψ′
(statements). Les cartes de permission sont threadées dans l'ordre du source.

RÈGLES (résumé)
===============

    Spawn<ρ′>[passed]{s}   découpage whole = kept ⊕ passed; pour chaque CV passé,
                           le spawner détient une permission non nulle à sa
                           propre priorité; s est vérifié à ρ′ sous `passed`
    Wait(v)                v : cv[α]⟨ρ′⟩ et ρ ⪯ ρ′
    Signal/Broadcast(v)    Ψ(α)(ρ) ≠ None
    Promote<ρ2>(v)         v : cv[α]⟨ρ1⟩, ρ1 ⪯ ρ2, Owned sur [ρ1, ρ2);
                           sortie None sous ρ2, inchangée au-dessus
    NewCV<ρ′>              ρ′ ⪯ ρ; Owned pour tout ρ0 ⪰ ρ′
    with(m){s}             m : mutex⟨ρ′⟩, ρ ⪯ ρ′, s vérifié à ρ ET à ρ′ avec la
                           même transformation Ψ → Ψ′
    if / trywith           branches avec des cartes de sortie identiques
    while                  corps Ψ → Ψ

RÉCUPÉRATION D'ERREUR
=====================
Une erreur d'instruction est enregistrée, puis la vérification continue avec
la carte de sortie déclarée par la règle. Le type d'une instruction fautive
peut être inconnu (None): les usages suivants ne produisent pas d'erreur en
cascade.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from core.lang import (
    NAT,
    NONE,
    OWNED,
    UNIT,
    CVType,
    MutexType,
    NatType,
    PermissionLevel,
    PermissionMap,
    PriorityOrder,
    RefType,
    Signature,
    Type,
    derive_kept,
)
from core.logging_config import get_logger
from core.syntax import (
    Assign,
    Broadcast,
    CVHandle,
    Deref,
    If,
    Let,
    MutexHandle,
    NewCV,
    NewMutex,
    NewRef,
    Num,
    Promote,
    RefHandle,
    ReturnVal,
    Seq,
    Signal,
    Skip,
    SourceProgram,
    Span,
    Spawn,
    TryWith,
    UnitVal,
    Var,
    Wait,
    While,
    WithLock,
)

logger = get_logger(__name__)


class TypeErrorKind(str, Enum):
    """Taxonomie stable des erreurs de typage."""

    WAIT_PRIORITY_TOO_HIGH = "WaitPriorityTooHigh"
    SIGNAL_WITHOUT_PERMISSION = "SignalWithoutPermission"
    SPAWN_PERMISSION_LEAK = "SpawnPermissionLeak"
    PROMOTE_NOT_UPWARD = "PromoteNotUpward"
    PROMOTE_MISSING_OWNERSHIP = "PromoteMissingOwnership"
    NEWCV_ABOVE_THREAD = "NewCVAboveThread"
    MUTEX_CEILING_VIOLATION = "MutexCeilingViolation"
    CRITICAL_SECTION_FAILS_AT_CEILING = "CriticalSectionFailsAtCeiling"
    BRANCH_PERMISSION_MISMATCH = "BranchPermissionMismatch"
    LOOP_PERMISSION_NOT_INVARIANT = "LoopPermissionNotInvariant"
    INVALID_SPLIT = "InvalidSplit"
    PLAIN_TYPE_MISMATCH = "PlainTypeMismatch"
    UNKNOWN_NAME = "UnknownName"


@dataclass(frozen=True)
class TypeDiagnostic:
    kind: TypeErrorKind
    span: Span | None
    message: str

    def to_dict(self) -> dict[str, Any]:
        span = None
        if self.span:
            span = {
                "line": self.span.line,
                "column": self.span.column,
                "end_line": self.span.end_line,
                "end_column": self.span.end_column,
            }
        return {"kind": self.kind.value, "span": span, "message": self.message}

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.kind.value}: {self.message}"


@dataclass
class CheckReport:
    """Résultat de check_program: erreurs, ou carte finale si succès."""

    errors: list[TypeDiagnostic]
    perms: PermissionMap | None = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def kinds(self) -> list[TypeErrorKind]:
        return [e.kind for e in self.errors]


@dataclass(frozen=True)
class TypeContext:
    """Γ: variables → types (None = type inconnu après une erreur)."""

    vars: Mapping[str, Type | None] = field(default_factory=dict)

    def extend(self, name: str, ty: Type | None) -> "TypeContext":
        return TypeContext({**self.vars, name: ty})

    def __contains__(self, name: str) -> bool:
        return name in self.vars

    def lookup(self, name: str) -> Type | None:
        return self.vars[name]


@dataclass(frozen=True)
class CheckState:
    sig: Signature
    perms: PermissionMap
    prio: str

    def with_perms(self, perms: PermissionMap) -> "CheckState":
        return CheckState(self.sig, perms, self.prio)

    def at(self, prio: str) -> "CheckState":
        return CheckState(self.sig, self.perms, prio)


class TypeChecker:
    """Vérificateur pour un ordre de priorités donné.

    Les diagnostics s'accumulent dans `errors`, dans l'ordre du source.

    Usage:
        checker = TypeChecker(order)
        perms = checker.check_statement(state, TypeContext(), body)
        checker.errors
    """

    def __init__(self, order: PriorityOrder):
        self.order = order
        self.errors: list[TypeDiagnostic] = []
        self.fresh_sig = Signature()
        self._fresh = 0

    # ------------------------------------------------------------------
    # utilitaires
    # ------------------------------------------------------------------

    def _error(self, kind: TypeErrorKind, node: Any, message: str) -> None:
        self.errors.append(TypeDiagnostic(kind, getattr(node, "span", None), message))

    def _fresh_cv(self) -> str:
        self._fresh += 1
        return f"cv{self._fresh}"

    def _expect_cv(self, st: CheckState, ctx: TypeContext, v: Any, node: Any) -> CVType | None:
        ty = self.check_value(st.sig, ctx, v)
        if ty is None or isinstance(ty, CVType):
            return ty
        self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, node, f"expected a condition variable, got {ty}")
        return None

    def _expect_nat(self, st: CheckState, ctx: TypeContext, v: Any, node: Any) -> None:
        ty = self.check_value(st.sig, ctx, v)
        if ty is not None and not isinstance(ty, NatType):
            self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, node, f"expected nat, got {ty}")

    # ------------------------------------------------------------------
    # valeurs
    # ------------------------------------------------------------------

    def check_value(self, sig: Signature, ctx: TypeContext, v: Any) -> Type | None:
        """Type d'une valeur; None si inconnu (erreur déjà signalée)."""
        if isinstance(v, Var):
            if v.name not in ctx:
                self._error(TypeErrorKind.UNKNOWN_NAME, v, f"unbound variable '{v.name}'")
                return None
            return ctx.lookup(v.name)
        if isinstance(v, UnitVal):
            return UNIT
        if isinstance(v, Num):
            return NAT
        known = sig.merge(self.fresh_sig)
        if isinstance(v, CVHandle):
            if v.prio in known.cv_prios(v.name):
                return CVType(v.name, v.prio)
            self._error(TypeErrorKind.UNKNOWN_NAME, v, f"no handle for cv '{v.name}' at {v.prio}")
            return None
        if isinstance(v, MutexHandle):
            if v.name in known.mutexes:
                return MutexType(known.mutexes[v.name])
            self._error(TypeErrorKind.UNKNOWN_NAME, v, f"unknown mutex '{v.name}'")
            return None
        if isinstance(v, RefHandle):
            if v.name in known.refs:
                return RefType(known.refs[v.name])
            self._error(TypeErrorKind.UNKNOWN_NAME, v, f"unknown reference cell '{v.name}'")
            return None
        self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, v, f"not a value: {v!r}")
        return None

    def _resolve_type(self, ctx: TypeContext, ty: Type, node: Any) -> Type | None:
        """Remplace le nom de variable d'un cv[x]⟨ρ⟩ par le CV qu'elle désigne."""
        if isinstance(ty, RefType):
            inner = self._resolve_type(ctx, ty.inner, node)
            return None if inner is None else RefType(inner)
        if isinstance(ty, CVType):
            bound = ctx.lookup(ty.cv) if ty.cv in ctx else None
            if bound is None:
                return None
            if not isinstance(bound, CVType):
                self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, node, f"'{ty.cv}' is not a condition variable")
                return None
            return CVType(bound.cv, ty.prio)
        return ty

    # ------------------------------------------------------------------
    # instructions
    # ------------------------------------------------------------------

    def _passed_map(self, st: CheckState, ctx: TypeContext, spawn: Spawn) -> PermissionMap:
        entries: dict[tuple[str, str], PermissionLevel] = {}
        for grant in spawn.grants:
            ty = self._expect_cv(st, ctx, grant.target, grant)
            if ty is None:
                continue
            if grant.is_all:
                for prio, level in st.perms.row(ty.cv).items():
                    entries[(ty.cv, prio)] = level
            else:
                entries[(ty.cv, grant.prio)] = grant.level
        return PermissionMap(entries)

    def check_instruction(self, st: CheckState, ctx: TypeContext, i: Any) -> tuple[Type | None, PermissionMap]:
        """Type de l'instruction et carte de sortie Ψ′."""
        order = self.order

        if isinstance(i, Spawn):
            passed = self._passed_map(st, ctx, i)
            kept = derive_kept(st.perms, passed)
            if kept is None:
                self._error(
                    TypeErrorKind.INVALID_SPLIT,
                    i,
                    f"cannot pass {passed} out of {st.perms}",
                )
                kept = st.perms
            else:
                for cv in sorted(passed.cvs()):
                    if st.perms.get(cv, st.prio) is NONE:
                        self._error(
                            TypeErrorKind.SPAWN_PERMISSION_LEAK,
                            i,
                            f"passes permission on '{cv}' but the spawner holds none at its own priority {st.prio}",
                        )
                        break
            self.check_statement(CheckState(st.sig, passed, i.prio), ctx, i.body)
            return UNIT, kept

        if isinstance(i, NewRef):
            expected = self._resolve_type(ctx, i.type, i)
            actual = self.check_value(st.sig, ctx, i.value)
            if expected is not None and actual is not None and actual != expected:
                self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, i, f"newref<{expected}> initialised with {actual}")
            return (RefType(expected) if expected is not None else None), st.perms

        if isinstance(i, Deref):
            ty = self.check_value(st.sig, ctx, i.value)
            if ty is None:
                return None, st.perms
            if not isinstance(ty, RefType):
                self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, i, f"dereference of non-reference {ty}")
                return None, st.perms
            return ty.inner, st.perms

        if isinstance(i, Assign):
            target = self.check_value(st.sig, ctx, i.target)
            value = self.check_value(st.sig, ctx, i.value)
            if target is not None and not isinstance(target, RefType):
                self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, i, f"assignment to non-reference {target}")
            elif target is not None and value is not None and target.inner != value:
                self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, i, f"assigning {value} to {target}")
            return UNIT, st.perms

        if isinstance(i, NewCV):
            if not order.le(i.prio, st.prio):
                self._error(
                    TypeErrorKind.NEWCV_ABOVE_THREAD,
                    i,
                    f"newcv<{i.prio}> created by a thread at {st.prio}",
                )
            cv = self._fresh_cv()
            self.fresh_sig = self.fresh_sig.with_cv(cv, i.prio)
            perms = st.perms.update({(cv, p): OWNED for p in order.at_or_above(i.prio)})
            return CVType(cv, i.prio), perms

        if isinstance(i, Wait):
            ty = self._expect_cv(st, ctx, i.value, i)
            if ty is not None and not order.le(st.prio, ty.prio):
                self._error(
                    TypeErrorKind.WAIT_PRIORITY_TOO_HIGH,
                    i,
                    f"thread at {st.prio} waits on a handle at {ty.prio}",
                )
            return UNIT, st.perms

        if isinstance(i, (Signal, Broadcast)):
            ty = self._expect_cv(st, ctx, i.value, i)
            if ty is not None and st.perms.get(ty.cv, st.prio) is NONE:
                op = "signal" if isinstance(i, Signal) else "broadcast"
                self._error(
                    TypeErrorKind.SIGNAL_WITHOUT_PERMISSION,
                    i,
                    f"{op} on '{ty.cv}' without permission at {st.prio}",
                )
            return UNIT, st.perms

        if isinstance(i, Promote):
            ty = self._expect_cv(st, ctx, i.value, i)
            if ty is None:
                return None, st.perms
            if not order.le(ty.prio, i.prio):
                self._error(
                    TypeErrorKind.PROMOTE_NOT_UPWARD,
                    i,
                    f"promote from {ty.prio} down to {i.prio}",
                )
            else:
                missing = [p for p in order.between(ty.prio, i.prio) if st.perms.get(ty.cv, p) is not OWNED]
                if missing:
                    self._error(
                        TypeErrorKind.PROMOTE_MISSING_OWNERSHIP,
                        i,
                        f"promote<{i.prio}> needs Owned on '{ty.cv}' at {', '.join(missing)}",
                    )
            below = order.names[: order.index(i.prio)]
            perms = st.perms.update({(ty.cv, p): NONE for p in below})
            self.fresh_sig = self.fresh_sig.with_cv(ty.cv, i.prio)
            return CVType(ty.cv, i.prio), perms

        if isinstance(i, NewMutex):
            return MutexType(i.prio), st.perms

        if isinstance(i, ReturnVal):
            return self.check_value(st.sig, ctx, i.value), st.perms

        self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, i, f"not an instruction: {i!r}")
        return None, st.perms

    # ------------------------------------------------------------------
    # statements
    # ------------------------------------------------------------------

    def _check_critical_section(self, st: CheckState, ctx: TypeContext, body: Any, ceiling: str, node: Any) -> PermissionMap:
        """Vérifie le corps à ρ puis à la priorité plafond.

        Les erreurs de la seconde passe ne sont pas rapportées telles quelles:
        elles deviennent une unique CriticalSectionFailsAtCeiling.
        """
        before = len(self.errors)
        fresh_before = self._fresh
        out_low = self.check_statement(st, ctx, body)
        if ceiling == st.prio or len(self.errors) > before:
            return out_low

        fresh_low = self._fresh
        self._fresh = fresh_before
        mark = len(self.errors)
        out_high = self.check_statement(st.at(ceiling), ctx, body)
        ceiling_errors = self.errors[mark:]
        del self.errors[mark:]
        self._fresh = max(fresh_low, self._fresh)

        if ceiling_errors or out_high != out_low:
            reason = str(ceiling_errors[0]) if ceiling_errors else "permissions differ at the ceiling"
            self._error(
                TypeErrorKind.CRITICAL_SECTION_FAILS_AT_CEILING,
                node,
                f"critical section is ill-typed at ceiling {ceiling} ({reason})",
            )
        return out_low

    def _check_lock(self, st: CheckState, ctx: TypeContext, mutex: Any, body: Any, node: Any) -> PermissionMap:
        ty = self.check_value(st.sig, ctx, mutex)
        if ty is None:
            return self.check_statement(st, ctx, body)
        if not isinstance(ty, MutexType):
            self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, node, f"lock on non-mutex {ty}")
            return self.check_statement(st, ctx, body)
        if not self.order.le(st.prio, ty.prio):
            self._error(
                TypeErrorKind.MUTEX_CEILING_VIOLATION,
                node,
                f"thread at {st.prio} locks a mutex with ceiling {ty.prio}",
            )
            return self.check_statement(st, ctx, body)
        return self._check_critical_section(st, ctx, body, ty.prio, node)

    def check_statement(self, st: CheckState, ctx: TypeContext, s: Any) -> PermissionMap:
        """Carte de sortie Ψ′ du statement."""
        # Colonne vertébrale let/seq en itératif
        while True:
            if isinstance(s, Let):
                ty, perms = self.check_instruction(st, ctx, s.instr)
                st = st.with_perms(perms)
                ctx = ctx.extend(s.var, ty)
                s = s.body
                continue
            if isinstance(s, Seq):
                st = st.with_perms(self.check_statement(st, ctx, s.first))
                s = s.second
                continue
            break

        if isinstance(s, Skip):
            return st.perms

        if isinstance(s, If):
            self._expect_nat(st, ctx, s.cond, s)
            out_then = self.check_statement(st, ctx, s.then)
            out_else = self.check_statement(st, ctx, s.orelse)
            if out_then != out_else:
                self._error(
                    TypeErrorKind.BRANCH_PERMISSION_MISMATCH,
                    s,
                    f"branches end with {out_then} and {out_else}",
                )
            return out_then

        if isinstance(s, While):
            self._expect_nat(st, ctx, s.cond, s)
            out = self.check_statement(st, ctx, s.body)
            if out != st.perms:
                self._error(
                    TypeErrorKind.LOOP_PERMISSION_NOT_INVARIANT,
                    s,
                    f"loop body maps {st.perms} to {out}",
                )
            return st.perms

        if isinstance(s, WithLock):
            return self._check_lock(st, ctx, s.mutex, s.body, s)

        if isinstance(s, TryWith):
            out_acquired = self._check_lock(st, ctx, s.mutex, s.acquired, s)
            out_failed = self.check_statement(st, ctx, s.failed)
            if out_acquired != out_failed:
                self._error(
                    TypeErrorKind.BRANCH_PERMISSION_MISMATCH,
                    s,
                    f"trywith branches end with {out_acquired} and {out_failed}",
                )
            return out_acquired

        self._error(TypeErrorKind.PLAIN_TYPE_MISMATCH, s, f"not a statement: {s!r}")
        return st.perms


def check_program(program: SourceProgram) -> CheckReport:
    """Vérifie le statement de tête à la plus basse priorité déclarée."""
    checker = TypeChecker(program.order)
    state = CheckState(Signature(), PermissionMap.empty(), program.order.lowest)
    perms = checker.check_statement(state, TypeContext(), program.body)
    if checker.errors:
        logger.info(f"Program rejected with {len(checker.errors)} error(s)")
        return CheckReport(errors=list(checker.errors))
    logger.debug(f"Program accepted, final permissions {perms}")
    return CheckReport(errors=[], perms=perms)
