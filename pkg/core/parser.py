"""Analyse de la syntaxe concrète des programmes l4s (.l4s).

La grammaire (LALR) vit dans `core/l4s.lark`. Le parse se fait en trois temps:

1. lark produit l'arbre concret (positions propagées)
2. `AstBuilder` le transforme en AST (core.syntax), en désucrant `i; s`
   en `let _ = i in s` et `i` final en `let _ = i in skip`
3. `resolve` vérifie que chaque variable est liée et chaque priorité déclarée

Toute erreur est une ParseError (ou ResolutionError) avec ligne/colonne.
"""

from pathlib import Path

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from core.errors import ErrorCode, ParseError, ResolutionError
from core.lang import NAT, UNIT, CVType, MutexType, PermissionLevel, PriorityOrder, RefType
from core.logging_config import get_logger
from core.syntax import (
    DISCARD,
    Assign,
    Broadcast,
    CVHandle,
    Deref,
    Grant,
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

GRAMMAR_FILE = Path(__file__).parent / "l4s.lark"


def _span(meta) -> Span | None:
    if getattr(meta, "empty", True):
        return None
    return Span(meta.line, meta.column, meta.end_line, meta.end_column)


# ==============================================================================
# ARBRE CONCRET → AST
# ==============================================================================

@v_args(meta=True)
class AstBuilder(Transformer):
    """Transforme l'arbre lark en nœuds de core.syntax."""

    def start(self, meta, children):
        order, body = children
        return order, body

    def header(self, meta, children):
        return PriorityOrder(tuple(str(tok) for tok in children))

    # --- statements ---

    def let_stmt(self, meta, children):
        name, instr, body = children
        return Let(str(name), instr, body, span=_span(meta))

    def instr_seq(self, meta, children):
        instr, rest = children
        return Let(DISCARD, instr, rest, span=_span(meta))

    def instr_last(self, meta, children):
        (instr,) = children
        return Let(DISCARD, instr, Skip(span=_span(meta)), span=_span(meta))

    def seq(self, meta, children):
        first, second = children
        return Seq(first, second, span=_span(meta))

    def skip(self, meta, children):
        return Skip(span=_span(meta))

    def block(self, meta, children):
        if not children:
            return Skip(span=_span(meta))
        return children[0]

    def if_stmt(self, meta, children):
        cond, then = children[0], children[1]
        orelse = children[2] if len(children) > 2 else Skip(span=_span(meta))
        return If(cond, then, orelse, span=_span(meta))

    def while_stmt(self, meta, children):
        cond, body = children
        return While(cond, body, span=_span(meta))

    def with_stmt(self, meta, children):
        mutex, body = children
        return WithLock(mutex, body, span=_span(meta))

    def trywith_stmt(self, meta, children):
        mutex, acquired, failed = children
        return TryWith(mutex, acquired, failed, span=_span(meta))

    # --- instructions ---

    def ret(self, meta, children):
        return ReturnVal(children[0], span=_span(meta))

    def assign(self, meta, children):
        target, value = children
        return Assign(target, value, span=_span(meta))

    def deref(self, meta, children):
        return Deref(children[0], span=_span(meta))

    def spawn(self, meta, children):
        prio = str(children[0])
        grants = children[1] if len(children) == 3 else ()
        return Spawn(prio, grants, children[-1], span=_span(meta))

    def newref(self, meta, children):
        ty, value = children
        return NewRef(ty, value, span=_span(meta))

    def newcv(self, meta, children):
        return NewCV(str(children[0]), span=_span(meta))

    def wait(self, meta, children):
        return Wait(children[0], span=_span(meta))

    def signal(self, meta, children):
        return Signal(children[0], span=_span(meta))

    def broadcast(self, meta, children):
        return Broadcast(children[0], span=_span(meta))

    def promote(self, meta, children):
        prio, value = children
        return Promote(value, str(prio), span=_span(meta))

    def newmutex(self, meta, children):
        return NewMutex(str(children[0]), span=_span(meta))

    def grants(self, meta, children):
        return tuple(children)

    def grant_all(self, meta, children):
        return Grant(children[0], span=_span(meta))

    def grant_one(self, meta, children):
        target, prio, level = children
        return Grant(target, str(prio), PermissionLevel(str(level)), span=_span(meta))

    # --- types ---

    def unit_type(self, meta, children):
        return UNIT

    def nat_type(self, meta, children):
        return NAT

    def ref_type(self, meta, children):
        return RefType(children[0])

    def cv_type(self, meta, children):
        name, prio = children
        return CVType(str(name), str(prio))

    def mutex_type(self, meta, children):
        return MutexType(str(children[0]))

    # --- valeurs ---

    def var(self, meta, children):
        return Var(str(children[0]), span=_span(meta))

    def unit_val(self, meta, children):
        return UnitVal(span=_span(meta))

    def num(self, meta, children):
        return Num(int(children[0]), span=_span(meta))

    def cv_handle(self, meta, children):
        name, prio = str(children[0]).removeprefix("#cv:").split("@")
        return CVHandle(name, prio, span=_span(meta))

    def mutex_handle(self, meta, children):
        return MutexHandle(str(children[0]).removeprefix("#mutex:"), span=_span(meta))

    def ref_handle(self, meta, children):
        return RefHandle(str(children[0]).removeprefix("#ref:"), span=_span(meta))


# ==============================================================================
# RÉSOLUTION DES NOMS
# ==============================================================================

def _where(node) -> tuple[int | None, int | None]:
    span = getattr(node, "span", None)
    return (span.line, span.column) if span else (None, None)


def resolve(program: SourceProgram) -> None:
    """Vérifie les variables liées et les priorités déclarées.

    Raises:
        ResolutionError: première occurrence fautive, dans l'ordre du source
    """
    order = program.order

    def check_prio(prio: str, node) -> None:
        if prio not in order:
            line, col = _where(node)
            raise ResolutionError(
                f"unknown priority '{prio}' (declared: {order})",
                line=line,
                column=col,
                code=ErrorCode.UNKNOWN_PRIORITY,
            )

    def check_type(ty, scope: frozenset[str], node) -> None:
        if isinstance(ty, RefType):
            check_type(ty.inner, scope, node)
        elif isinstance(ty, CVType):
            check_prio(ty.prio, node)
            if ty.cv not in scope:
                line, col = _where(node)
                raise ResolutionError(f"unbound variable '{ty.cv}' in type", line=line, column=col)
        elif isinstance(ty, MutexType):
            check_prio(ty.prio, node)

    def value(v, scope: frozenset[str]) -> None:
        if isinstance(v, Var) and v.name not in scope:
            line, col = _where(v)
            raise ResolutionError(f"unbound variable '{v.name}'", line=line, column=col)
        if isinstance(v, CVHandle):
            check_prio(v.prio, v)

    def instr(i, scope: frozenset[str]) -> None:
        if isinstance(i, Spawn):
            check_prio(i.prio, i)
            for grant in i.grants:
                value(grant.target, scope)
                if grant.prio is not None:
                    check_prio(grant.prio, grant)
            stmt(i.body, scope)
        elif isinstance(i, NewRef):
            check_type(i.type, scope, i)
            value(i.value, scope)
        elif isinstance(i, Assign):
            value(i.target, scope)
            value(i.value, scope)
        elif isinstance(i, (NewCV, NewMutex)):
            check_prio(i.prio, i)
        elif isinstance(i, Promote):
            value(i.value, scope)
            check_prio(i.prio, i)
        else:
            value(i.value, scope)

    def stmt(s, scope: frozenset[str]) -> None:
        # Itératif sur la colonne vertébrale let/seq: les programmes longs
        # ne doivent pas épuiser la pile Python.
        while True:
            if isinstance(s, Let):
                instr(s.instr, scope)
                scope = scope | {s.var}
                s = s.body
            elif isinstance(s, Seq):
                stmt(s.first, scope)
                s = s.second
            elif isinstance(s, (WithLock, While)):
                value(s.mutex if isinstance(s, WithLock) else s.cond, scope)
                s = s.body
            elif isinstance(s, TryWith):
                value(s.mutex, scope)
                stmt(s.acquired, scope)
                s = s.failed
            elif isinstance(s, If):
                value(s.cond, scope)
                stmt(s.then, scope)
                s = s.orelse
            else:
                return

    stmt(program.body, frozenset())


# ==============================================================================
# API
# ==============================================================================

_parser: Lark | None = None


def get_parser() -> Lark:
    """Retourne l'instance singleton du parser lark."""
    global _parser
    if _parser is None:
        _parser = Lark.open(
            str(GRAMMAR_FILE),
            parser="lalr",
            propagate_positions=True,
            maybe_placeholders=False,
        )
        logger.debug(f"Grammar loaded from {GRAMMAR_FILE}")
    return _parser


def _last_position(text: str) -> tuple[int, int]:
    lines = text.splitlines() or [""]
    return len(lines), len(lines[-1]) + 1


def parse_program(text: str) -> SourceProgram:
    """Parse un programme complet et résout ses noms.

    Raises:
        ParseError: erreur lexicale (E101) ou syntaxique (E102)
        ResolutionError: priorité inconnue (E103) ou variable non liée (E104)
    """
    try:
        tree = get_parser().parse(text)
    except UnexpectedCharacters as e:
        raise ParseError(
            f"unexpected character {text[e.pos_in_stream]!r}",
            line=e.line,
            column=e.column,
            code=ErrorCode.LEXICAL_ERROR,
        ) from None
    except UnexpectedEOF:
        line, col = _last_position(text)
        raise ParseError("unexpected end of input", line=line, column=col) from None
    except UnexpectedInput as e:
        token = getattr(e, "token", None)
        found = f" {str(token)!r}" if token else ""
        line, col = e.line, e.column
        if line is None or line < 1:
            line, col = _last_position(text)
        raise ParseError(f"unexpected token{found}", line=line, column=col) from None

    try:
        order, body = AstBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, ParseError):
            raise e.orig_exc from None
        raise
    program = SourceProgram(order=order, body=body, text=text)
    resolve(program)
    logger.debug(f"Parsed program over priorities {order}")
    return program


def parse_file(path: Path) -> SourceProgram:
    """Lit un fichier .l4s (UTF-8) et le parse."""
    return parse_program(path.read_text(encoding="utf-8"))
