"""Pretty-printer canonique: parse(pretty_print(p)) == p."""

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
    Spawn,
    TryWith,
    UnitVal,
    Var,
    Wait,
    While,
    WithLock,
)

INDENT = "    "


def format_value(v) -> str:
    if isinstance(v, Var):
        return v.name
    if isinstance(v, UnitVal):
        return "()"
    if isinstance(v, Num):
        return str(v.n)
    if isinstance(v, CVHandle):
        return f"#cv:{v.name}@{v.prio}"
    if isinstance(v, MutexHandle):
        return f"#mutex:{v.name}"
    if isinstance(v, RefHandle):
        return f"#ref:{v.name}"
    raise TypeError(f"not a value: {v!r}")


def format_grant(g: Grant) -> str:
    if g.is_all:
        return f"all({format_value(g.target)})"
    return f"{format_value(g.target)}@{g.prio}:{g.level.value}"


def format_instruction(i, depth: int = 0) -> str:
    if isinstance(i, Spawn):
        grants = ", ".join(format_grant(g) for g in i.grants)
        return f"spawn<{i.prio}>[{grants}] {_block(i.body, depth)}"
    if isinstance(i, NewRef):
        return f"newref<{i.type}>({format_value(i.value)})"
    if isinstance(i, Deref):
        return f"!{format_value(i.value)}"
    if isinstance(i, Assign):
        return f"{format_value(i.target)} := {format_value(i.value)}"
    if isinstance(i, NewCV):
        return f"newcv<{i.prio}>"
    if isinstance(i, Wait):
        return f"wait({format_value(i.value)})"
    if isinstance(i, Signal):
        return f"signal({format_value(i.value)})"
    if isinstance(i, Broadcast):
        return f"broadcast({format_value(i.value)})"
    if isinstance(i, Promote):
        return f"promote<{i.prio}>({format_value(i.value)})"
    if isinstance(i, NewMutex):
        return f"newmutex<{i.prio}>"
    if isinstance(i, ReturnVal):
        return format_value(i.value)
    raise TypeError(f"not an instruction: {i!r}")


def _block(s, depth: int) -> str:
    pad = INDENT * (depth + 1)
    inner = format_statement(s, depth + 1)
    return "{\n" + pad + inner + "\n" + INDENT * depth + "}"


def format_statement(s, depth: int = 0) -> str:
    """Texte d'un statement; les lignes suivantes sont indentées à `depth`."""
    pad = INDENT * depth
    parts: list[str] = []
    # La colonne vertébrale let/seq est déroulée itérativement.
    while True:
        if isinstance(s, Let):
            instr = format_instruction(s.instr, depth)
            if s.var != DISCARD:
                parts.append(f"let {s.var} = {instr} in")
            elif isinstance(s.body, Skip):
                parts.append(instr)
                break
            else:
                parts.append(f"{instr};")
            s = s.body
        elif isinstance(s, Seq):
            first = s.first
            if isinstance(first, (Let, Seq)):
                parts.append(f"{_block(first, depth)};")
            else:
                parts.append(f"{format_statement(first, depth)};")
            s = s.second
        else:
            parts.append(_compound(s, depth))
            break
    return ("\n" + pad).join(parts)


def _compound(s, depth: int) -> str:
    if isinstance(s, Skip):
        return "skip"
    if isinstance(s, If):
        return (
            f"if {format_value(s.cond)} {_block(s.then, depth)} "
            f"else {_block(s.orelse, depth)}"
        )
    if isinstance(s, While):
        return f"while {format_value(s.cond)} {_block(s.body, depth)}"
    if isinstance(s, WithLock):
        return f"with ({format_value(s.mutex)}) {_block(s.body, depth)}"
    if isinstance(s, TryWith):
        return (
            f"trywith ({format_value(s.mutex)}) {_block(s.acquired, depth)} "
            f"else {_block(s.failed, depth)}"
        )
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(program: SourceProgram) -> str:
    """Texte canonique complet (en-tête de priorités compris)."""
    header = f"priorities {' < '.join(program.order.names)};"
    return f"{header}\n{format_statement(program.body)}\n"
