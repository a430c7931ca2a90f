"""Graphe de coût d'une exécution: chaînes de threads + arêtes create/sync/weak.

Représentation:
- chaque thread est une chaîne de sommets; les arêtes de thread (u_i, u_i+1)
  sont implicites (sauf celles coupées par un renforcement)
- les arêtes create sont stockées (sommet, thread) et résolues vers le premier
  sommet du thread, dès qu'il existe
- les arêtes STRONG sont celles ajoutées par un renforcement

Les requêtes d'ancestralité passent par un networkx.DiGraph reconstruit à la
demande (cache invalidé à chaque mutation).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import networkx as nx

from core.errors import ErrorCode, GraphError
from core.lang import PriorityOrder, Signature
from core.logging_config import get_logger

logger = get_logger(__name__)


class EdgeKind(str, Enum):
    THREAD = "thread"
    CREATE = "create"
    SYNC = "sync"
    WEAK = "weak"
    STRONG = "strong"


STRONG_KINDS = frozenset({EdgeKind.THREAD, EdgeKind.CREATE, EdgeKind.SYNC, EdgeKind.STRONG})


class Ancestry(str, Enum):
    NOT_ANCESTOR = "not-ancestor"
    STRONG = "strong-ancestor"
    WEAK = "weak-ancestor"


@dataclass
class ThreadInfo:
    name: str
    prio: str
    vertices: list[int] = field(default_factory=list)


Edge = tuple[EdgeKind, int, int]


class CostGraph:
    """Graphe g = ⟨T, Ec, Es, Ew⟩ avec priorités par thread."""

    def __init__(self, order: PriorityOrder):
        self.order = order
        self.threads: dict[str, ThreadInfo] = {}
        self.vertex_thread: dict[int, str] = {}
        self.vertex_index: dict[int, int] = {}
        self.vertex_sig: dict[int, Signature] = {}
        self.labels: dict[int, str] = {}
        self.create_edges: set[tuple[int, str]] = set()
        self.sync_edges: set[tuple[int, int]] = set()
        self.weak_edges: set[tuple[int, int]] = set()
        self.strong_edges: set[tuple[int, int]] = set()
        self.cut_thread_edges: set[tuple[int, int]] = set()
        self._next_vertex = 0
        self._dag: dict[bool, nx.DiGraph] = {}

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def _touch(self) -> None:
        self._dag.clear()

    def add_thread(self, name: str, prio: str) -> ThreadInfo:
        if name in self.threads:
            raise GraphError(f"thread '{name}' already exists", code=ErrorCode.UNKNOWN_THREAD, thread=name)
        self.order.index(prio)
        info = ThreadInfo(name, prio)
        self.threads[name] = info
        return info

    def append_vertex(
        self,
        thread: str,
        sig: Signature | None = None,
        label: str = "",
        vertex: int | None = None,
    ) -> int:
        """g ⊕a [u:Σ]: ajoute un sommet en fin de chaîne du thread.

        `vertex` force l'identifiant (rechargement d'un dump).
        """
        info = self.threads.get(thread)
        if info is None:
            raise GraphError(f"unknown thread '{thread}'", code=ErrorCode.UNKNOWN_THREAD, thread=thread)
        if vertex is not None and vertex in self.vertex_thread:
            raise GraphError(f"duplicate vertex {vertex}", code=ErrorCode.UNKNOWN_VERTEX, vertex=vertex)
        u = self._next_vertex if vertex is None else vertex
        self._next_vertex = max(self._next_vertex, u + 1)
        self.vertex_index[u] = len(info.vertices)
        info.vertices.append(u)
        self.vertex_thread[u] = thread
        self.vertex_sig[u] = sig if sig is not None else Signature()
        if label:
            self.labels[u] = label
        self._touch()
        return u

    def _require_vertex(self, u: int) -> None:
        if u not in self.vertex_thread:
            raise GraphError(f"unknown vertex {u}", code=ErrorCode.MISSING_ENDPOINT, vertex=u)

    def add_edge(self, kind: EdgeKind, src: int, dst: int | str) -> None:
        """Ajoute une arête; `dst` est un nom de thread pour CREATE."""
        kind = EdgeKind(kind)
        self._require_vertex(src)
        if kind is EdgeKind.CREATE:
            if dst not in self.threads:
                raise GraphError(f"create edge to unknown thread '{dst}'", code=ErrorCode.MISSING_ENDPOINT, thread=dst)
            self.create_edges.add((src, dst))
        else:
            self._require_vertex(dst)
            if kind is EdgeKind.SYNC:
                self.sync_edges.add((src, dst))
            elif kind is EdgeKind.WEAK:
                self.weak_edges.add((src, dst))
            elif kind is EdgeKind.STRONG:
                self.strong_edges.add((src, dst))
            else:
                raise GraphError("thread edges are implied by the chains", code=ErrorCode.MISSING_ENDPOINT)
        self._touch()

    def remove_edge(self, kind: EdgeKind, src: int, dst: int) -> None:
        """Retire une arête résolue (une arête de thread est coupée)."""
        kind = EdgeKind(kind)
        if kind is EdgeKind.THREAD:
            if self.parent(dst) != src:
                raise GraphError(f"no thread edge {src}->{dst}", code=ErrorCode.MISSING_ENDPOINT)
            self.cut_thread_edges.add((src, dst))
        elif kind is EdgeKind.CREATE:
            thread = self.vertex_thread.get(dst)
            if (src, thread) not in self.create_edges or self.first(thread) != dst:
                raise GraphError(f"no create edge {src}->{dst}", code=ErrorCode.MISSING_ENDPOINT)
            self.create_edges.discard((src, thread))
        else:
            pool = {
                EdgeKind.SYNC: self.sync_edges,
                EdgeKind.WEAK: self.weak_edges,
                EdgeKind.STRONG: self.strong_edges,
            }[kind]
            if (src, dst) not in pool:
                raise GraphError(f"no {kind.value} edge {src}->{dst}", code=ErrorCode.MISSING_ENDPOINT)
            pool.discard((src, dst))
        self._touch()

    def copy(self) -> "CostGraph":
        g = CostGraph(self.order)
        g.threads = {n: ThreadInfo(t.name, t.prio, list(t.vertices)) for n, t in self.threads.items()}
        g.vertex_thread = dict(self.vertex_thread)
        g.vertex_index = dict(self.vertex_index)
        g.vertex_sig = dict(self.vertex_sig)
        g.labels = dict(self.labels)
        g.create_edges = set(self.create_edges)
        g.sync_edges = set(self.sync_edges)
        g.weak_edges = set(self.weak_edges)
        g.strong_edges = set(self.strong_edges)
        g.cut_thread_edges = set(self.cut_thread_edges)
        g._next_vertex = self._next_vertex
        return g

    # ------------------------------------------------------------------
    # accesseurs
    # ------------------------------------------------------------------

    def thread(self, name: str) -> ThreadInfo:
        info = self.threads.get(name)
        if info is None:
            raise GraphError(f"unknown thread '{name}'", code=ErrorCode.UNKNOWN_THREAD, thread=name)
        return info

    def first(self, thread: str) -> int | None:
        vs = self.thread(thread).vertices
        return vs[0] if vs else None

    def last(self, thread: str) -> int | None:
        vs = self.thread(thread).vertices
        return vs[-1] if vs else None

    def parent(self, u: int) -> int | None:
        """Prédécesseur de u dans son thread."""
        idx = self.vertex_index[u]
        return self.threads[self.vertex_thread[u]].vertices[idx - 1] if idx > 0 else None

    def is_first(self, u: int) -> bool:
        return self.parent(u) is None

    def prio(self, u: int) -> str:
        """uprio(g)(u): priorité du thread du sommet."""
        return self.threads[self.vertex_thread[u]].prio

    def vertices(self) -> list[int]:
        return sorted(self.vertex_thread)

    def __len__(self) -> int:
        return len(self.vertex_thread)

    def edges(self) -> list[Edge]:
        """Toutes les arêtes résolues, triées."""
        out: list[Edge] = []
        for info in self.threads.values():
            for a, b in zip(info.vertices, info.vertices[1:]):
                if (a, b) not in self.cut_thread_edges:
                    out.append((EdgeKind.THREAD, a, b))
        for u, thread in self.create_edges:
            target = self.first(thread)
            if target is not None:
                out.append((EdgeKind.CREATE, u, target))
        out.extend((EdgeKind.SYNC, a, b) for a, b in self.sync_edges)
        out.extend((EdgeKind.WEAK, a, b) for a, b in self.weak_edges)
        out.extend((EdgeKind.STRONG, a, b) for a, b in self.strong_edges)
        return sorted(out, key=lambda e: (e[1], e[2], e[0].value))

    def in_edges(self, u: int) -> list[Edge]:
        return [e for e in self.edges() if e[2] == u]

    # ------------------------------------------------------------------
    # ancestralité
    # ------------------------------------------------------------------

    def dag(self, strong_only: bool = False) -> nx.DiGraph:
        cached = self._dag.get(strong_only)
        if cached is not None:
            return cached
        graph = nx.DiGraph()
        graph.add_nodes_from(self.vertex_thread)
        for kind, a, b in self.edges():
            if strong_only and kind not in STRONG_KINDS:
                continue
            graph.add_edge(a, b)
        self._dag[strong_only] = graph
        return graph

    def is_acyclic(self, strong_only: bool = True) -> bool:
        return nx.is_directed_acyclic_graph(self.dag(strong_only))

    def ancestors(self, u: int) -> set[int]:
        """{u′ | u′ ⪯ u} (réflexif, toutes arêtes)."""
        return nx.ancestors(self.dag(), u) | {u}

    def descendants(self, u: int) -> set[int]:
        return nx.descendants(self.dag(), u) | {u}

    def weak_ancestors(self, t: int, anc: set[int] | None = None) -> set[int]:
        """Sommets dont un chemin vers t contient une arête faible."""
        anc = anc if anc is not None else self.ancestors(t)
        out: set[int] = set()
        for x, y in self.weak_edges:
            if y in anc and x not in out:
                out |= self.ancestors(x)
        return out

    def strong_ancestors(self, t: int) -> set[int]:
        """Sommets dont tous les chemins vers t sont forts."""
        anc = self.ancestors(t)
        return anc - self.weak_ancestors(t, anc)

    def ancestor_query(self, u: int, v: int) -> Ancestry:
        self._require_vertex(u)
        self._require_vertex(v)
        if u == v:
            return Ancestry.STRONG
        anc_v = self.ancestors(v)
        if u not in anc_v:
            return Ancestry.NOT_ANCESTOR
        desc_u = self.descendants(u)
        if any(x in desc_u and y in anc_v for x, y in self.weak_edges):
            return Ancestry.WEAK
        return Ancestry.STRONG

    # ------------------------------------------------------------------
    # identité structurelle
    # ------------------------------------------------------------------

    def position(self, u: int) -> tuple[str, int]:
        return self.vertex_thread[u], self.vertex_index[u]

    def canonical_key(self) -> tuple:
        """Clé invariante par renumérotation des sommets au sein des threads."""
        threads = tuple(sorted((t.name, t.prio, len(t.vertices)) for t in self.threads.values()))
        edges = frozenset(
            (kind.value, self.position(a), self.position(b)) for kind, a, b in self.edges()
        )
        return threads, edges

    def summary(self) -> dict[str, int]:
        counts = {kind.value: 0 for kind in EdgeKind}
        for kind, _, _ in self.edges():
            counts[kind.value] += 1
        counts["vertices"] = len(self)
        counts["threads"] = len(self.threads)
        return counts


def build_graph(
    order: PriorityOrder,
    threads: Iterable[tuple[str, str, int]],
    edges: Iterable[tuple[str, int, int | str]],
    labels: dict[str, list[str]] | None = None,
) -> CostGraph:
    """Construit un graphe à la main (tests, dumps).

    Args:
        threads: (nom, priorité, nombre de sommets), dans l'ordre de numérotation
        edges: (kind, source, cible) avec cible = nom de thread pour create
        labels: étiquettes par thread, dans l'ordre des sommets
    """
    g = CostGraph(order)
    for name, prio, count in threads:
        g.add_thread(name, prio)
        names = (labels or {}).get(name, [])
        for idx in range(count):
            g.append_vertex(name, label=names[idx] if idx < len(names) else "")
    for kind, src, dst in edges:
        g.add_edge(EdgeKind(kind), src, dst)
    return g
