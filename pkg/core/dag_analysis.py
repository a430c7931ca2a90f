"""Analyses d'un graphe de coût: bonne formation, renforcement, travail et span.

Conventions d'ancestralité:
- bonne formation et renforcement: ⪯ réflexif (u ⋠ s exclut s lui-même)
- travail concurrent et a-span: on exclut les ancêtres *stricts* de s; les
  sommets du thread a comptent donc (une chaîne de n sommets a un travail n
  et un span n)
- longueur de chemin = nombre de sommets
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import networkx as nx

from core.cost_graph import STRONG_KINDS, CostGraph, EdgeKind
from core.errors import ErrorCode, GraphError
from core.logging_config import get_logger

logger = get_logger(__name__)


class WfKind(str, Enum):
    LOW_PRIORITY_ON_CRITICAL_PATH = "LowPriorityOnCriticalPath"
    MISSING_WEAK_EDGE_WITNESS = "MissingWeakEdgeWitness"


@dataclass(frozen=True)
class WfViolation:
    kind: WfKind
    thread: str
    vertex: int
    witness: tuple[int, ...] = field(default_factory=tuple)
    message: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "thread": self.thread,
            "vertex": self.vertex,
            "witness": list(self.witness),
            "message": self.message,
        }

    def __str__(self) -> str:
        path = " -> ".join(str(u) for u in self.witness)
        return f"{self.kind.value} in thread {self.thread} at vertex {self.vertex} ({path}): {self.message}"


@dataclass(frozen=True)
class Metrics:
    competitor_work: int
    a_span: int


@dataclass
class _ThreadView:
    """Ensembles d'ancêtres de s et t pour un thread donné."""

    thread: str
    prio: str
    s: int
    t: int
    anc_s: set[int]
    weak_t: set[int]
    strong_t: set[int]

    @property
    def critical(self) -> set[int]:
        """u ⪯s t et u ⋠ s."""
        return self.strong_t - self.anc_s


def _view(g: CostGraph, thread: str) -> _ThreadView | None:
    info = g.thread(thread)
    if not info.vertices:
        return None
    s, t = info.vertices[0], info.vertices[-1]
    anc_t = g.ancestors(t)
    weak_t = g.weak_ancestors(t, anc_t)
    return _ThreadView(thread, info.prio, s, t, g.ancestors(s), weak_t, anc_t - weak_t)


def _strong_in(g: CostGraph) -> dict[int, list[tuple[EdgeKind, int]]]:
    incoming: dict[int, list[tuple[EdgeKind, int]]] = {u: [] for u in g.vertex_thread}
    for kind, a, b in g.edges():
        if kind in STRONG_KINDS:
            incoming[b].append((kind, a))
    return incoming


def _witnesses(
    g: CostGraph,
    view: _ThreadView,
    source: int,
    strong_in: dict[int, list[tuple[EdgeKind, int]]],
) -> list[tuple[int, int]]:
    """Arêtes faibles (x, u″) qui témoignent pour `source`, directes d'abord.

    x est `source` ou l'un de ses descendants forts; u″ est sur le chemin
    critique de t, n'est pas premier de son thread, et ne reçoit comme arêtes
    fortes que celle de son parent et des arêtes sync.
    """
    below = nx.descendants(g.dag(strong_only=True), source) | {source}
    out = []
    for x, y in g.weak_edges:
        if x not in below or y not in view.critical or g.is_first(y):
            continue
        parent = g.parent(y)
        if all(
            (kind is EdgeKind.THREAD and src == parent) or kind is EdgeKind.SYNC
            for kind, src in strong_in[y]
        ):
            out.append((x, y))
    return sorted(out, key=lambda e: (e[0] != source, e[1], e[0]))


def _covered(g: CostGraph, view: _ThreadView, source: int) -> bool:
    """Les ancêtres forts de `source` hors de s sont tous de priorité ≥ ρ."""
    above = nx.ancestors(g.dag(strong_only=True), source) | {source}
    return all(g.order.le(view.prio, g.prio(y)) for y in above - view.anc_s)


def _require_dag(g: CostGraph) -> None:
    if not g.is_acyclic(strong_only=False):
        cycle = nx.find_cycle(g.dag())
        raise GraphError(
            "graph has a cycle (deadlocked run?)",
            code=ErrorCode.CYCLIC_GRAPH,
            cycle=[a for a, _ in cycle],
        )


def _strong_path(g: CostGraph, u: int, t: int) -> tuple[int, ...]:
    try:
        return tuple(nx.shortest_path(g.dag(strong_only=True), u, t))
    except nx.NetworkXNoPath:
        return (u, t)


def check_thread(g: CostGraph, thread: str) -> WfViolation | None:
    """Vérifie les deux clauses de bonne formation pour un thread.

    Une arête forte (u′, u) vers le chemin critique, avec u′ ancêtre faible de
    t, est admise si une arête faible témoin part de u′ ou d'un descendant
    fort de u′, ou si tous les ancêtres forts de u′ hors de s sont au moins à
    la priorité du thread.
    """
    view = _view(g, thread)
    if view is None:
        return None
    order = g.order

    for u in sorted(view.critical):
        if order.lt(g.prio(u), view.prio):
            return WfViolation(
                WfKind.LOW_PRIORITY_ON_CRITICAL_PATH,
                thread,
                u,
                _strong_path(g, u, view.t),
                f"vertex {u} at {g.prio(u)} is on the critical path of {thread} at {view.prio}",
            )

    strong_in = _strong_in(g)
    for u in sorted(view.critical):
        for kind, src in strong_in[u]:
            if src not in view.weak_t or _covered(g, view, src):
                continue
            if not _witnesses(g, view, src, strong_in):
                return WfViolation(
                    WfKind.MISSING_WEAK_EDGE_WITNESS,
                    thread,
                    u,
                    (src, u),
                    f"{kind.value} edge {src}->{u} leaves a weak ancestor of {view.t} without a witness weak edge",
                )
    return None


def is_well_formed(g: CostGraph) -> WfViolation | None:
    """None si le graphe est bien formé, sinon la première violation.

    Raises:
        GraphError: graphe cyclique (E303)
    """
    _require_dag(g)
    for name in g.threads:
        violation = check_thread(g, name)
        if violation is not None:
            logger.debug(f"Ill-formed graph: {violation}")
            return violation
    return None


def strengthen(g: CostGraph, thread: str) -> CostGraph:
    """a-renforcement: nouvelle copie de g, g inchangé.

    Pour chaque arête forte (u′, u) avec u′ ancêtre faible de t, u ancêtre fort
    de t et u ⋠ s: retire l'arête faible témoin (x, u″), ajoute une arête
    forte (parent(u″), u) et retire (u′, u). Sans témoin qui évite un cycle,
    une arête dont la source est couverte en priorité reste en place. Les
    réécritures sont calculées sur le graphe d'origine.

    Raises:
        GraphError: aucun témoin pour une arête (E304)
    """
    _require_dag(g)
    view = _view(g, thread)
    out = g.copy()
    if view is None or not g.weak_edges:
        return out

    strong_in = _strong_in(g)
    rewrites: list[tuple[EdgeKind, int, int, tuple[int, int]]] = []
    kept = 0
    for kind, src, u in g.edges():
        if kind not in STRONG_KINDS or u not in view.critical or src not in view.weak_t:
            continue
        candidates = _witnesses(g, view, src, strong_in)
        covered = _covered(g, view, src)
        if not candidates and not covered:
            raise GraphError(
                f"no weak-edge witness for {kind.value} edge {src}->{u}",
                code=ErrorCode.MISSING_WITNESS,
                edge=f"{src}->{u}",
                thread=thread,
            )
        # un témoin dont le parent descend de u fermerait un cycle
        below = g.descendants(u)
        acyclic = [e for e in candidates if g.parent(e[1]) not in below]
        if not acyclic and covered:
            kept += 1
            continue
        candidates = acyclic or candidates
        on_thread = [e for e in candidates if g.vertex_thread[e[1]] == thread]
        rewrites.append((kind, src, u, (on_thread or candidates)[0]))

    for kind, src, u, (x, witness) in rewrites:
        if (x, witness) in out.weak_edges:
            out.remove_edge(EdgeKind.WEAK, x, witness)
        out.add_edge(EdgeKind.STRONG, g.parent(witness), u)
        out.remove_edge(kind, src, u)
    logger.debug(f"Strengthened for {thread}: {len(rewrites)} rewrite(s), {kept} kept")
    return out


def competitor_work(g: CostGraph, thread: str) -> int:
    """|{u : ¬(u ≺ s), ¬(t ≺ u), prio(a) ⪯ prio(u)}| (ancêtres stricts)."""
    info = g.thread(thread)
    if not info.vertices:
        return 0
    s, t = info.vertices[0], info.vertices[-1]
    before_s = g.ancestors(s) - {s}
    after_t = g.descendants(t) - {t}
    return sum(
        1
        for u in g.vertex_thread
        if u not in before_s and u not in after_t and g.order.le(info.prio, g.prio(u))
    )


def a_span(g: CostGraph, thread: str) -> int:
    """Plus long chemin fort se terminant en t dans le graphe renforcé, hors ancêtres stricts de s."""
    info = g.thread(thread)
    if not info.vertices:
        return 0
    strengthened = strengthen(g, thread)
    if not strengthened.is_acyclic(strong_only=False):
        raise GraphError(
            f"strengthening for {thread} closes a cycle",
            code=ErrorCode.CYCLIC_GRAPH,
            thread=thread,
        )
    s, t = info.vertices[0], info.vertices[-1]
    allowed = set(strengthened.vertex_thread) - (strengthened.ancestors(s) - {s})
    strong = strengthened.dag(strong_only=True).subgraph(allowed)
    reach = nx.ancestors(strong, t) | {t}
    return nx.dag_longest_path_length(strong.subgraph(reach)) + 1


def thread_metrics(g: CostGraph, thread: str) -> Metrics:
    return Metrics(competitor_work(g, thread), a_span(g, thread))
