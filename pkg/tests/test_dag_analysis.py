"""Tests des analyses de graphe: bonne formation, renforcement, travail, span.

Les propriétés sont vérifiées contre tests/oracles.py (énumération brute
des chemins) sur des graphes aléatoires d'au plus 12 sommets.
"""

import pytest
from hypothesis import given, settings

from core.cost_graph import EdgeKind, build_graph
from core.dag_analysis import (
    WfKind,
    a_span,
    check_thread,
    competitor_work,
    is_well_formed,
    strengthen,
    thread_metrics,
)
from core.errors import ErrorCode, GraphError
from core.lang import PriorityOrder
from tests import oracles
from tests.oracles import small_graphs


@pytest.fixture
def inverted_graph():
    """Fixture: un sommet Low sur le chemin critique d'un thread High."""
    return build_graph(
        PriorityOrder(("Low", "High")),
        [("lo", "Low", 2), ("hi", "High", 2)],
        [("sync", 0, 3)],
    )


@pytest.fixture
def unwitnessed_graph():
    """Fixture: arête forte depuis un ancêtre faible Low, seul témoin en tête de thread.

    a (Low): 0 1   b (High): 2 3   c (High): 4 5
    weak 0→4, sync 4→3, sync 0→3
    """
    return build_graph(
        PriorityOrder(("Low", "High")),
        [("a", "Low", 2), ("b", "High", 2), ("c", "High", 2)],
        [("weak", 0, 4), ("sync", 4, 3), ("sync", 0, 3)],
    )


@pytest.fixture
def contended_spawn_graph():
    """Fixture: main crée un thread qui prend le verrou, puis le demande à son tour.

    a0: 0 newmutex → 1 spawn → 2 lock → 3 locked → 4 unlock
    a1: 5 lock → 6 locked → 7 unlock
    create 1→a1; weak 5→3; sync 7→3
    """
    return build_graph(
        PriorityOrder(("Low", "High")),
        [("a0", "Low", 5), ("a1", "Low", 3)],
        [("create", 1, "a1"), ("weak", 5, 3), ("sync", 7, 3)],
    )


class TestWellFormedness:
    """Tests de la bonne formation."""

    def test_contention_graph_is_well_formed(self, contention_graph):
        assert is_well_formed(contention_graph) is None

    def test_low_priority_on_critical_path(self, inverted_graph):
        violation = is_well_formed(inverted_graph)
        assert violation.kind is WfKind.LOW_PRIORITY_ON_CRITICAL_PATH
        assert violation.thread == "hi"
        assert violation.vertex == 0
        assert violation.witness[0] == 0
        assert violation.witness[-1] == 3

    def test_low_thread_itself_is_fine(self, inverted_graph):
        """La clause ne concerne que les threads de priorité supérieure."""
        assert check_thread(inverted_graph, "lo") is None

    def test_missing_witness(self, unwitnessed_graph):
        violation = is_well_formed(unwitnessed_graph)
        assert violation.kind is WfKind.MISSING_WEAK_EDGE_WITNESS
        assert violation.thread == "b"
        assert violation.witness == (0, 3)

    def test_witness_from_strong_descendant(self, contended_spawn_graph):
        """Le spawn n'a pas d'arête faible propre: celle du verrou de a1 en témoigne."""
        assert is_well_formed(contended_spawn_graph) is None

    def test_source_covered_by_priority(self):
        """Sans aucun témoin, une source au moins à la priorité du thread suffit."""
        g = build_graph(
            PriorityOrder(("Low", "High")),
            [("a", "High", 2), ("b", "High", 2), ("c", "High", 2)],
            [("weak", 0, 4), ("sync", 4, 3), ("sync", 0, 3)],
        )
        assert is_well_formed(g) is None

    def test_violation_to_dict(self, inverted_graph):
        data = is_well_formed(inverted_graph).to_dict()
        assert data["kind"] == "LowPriorityOnCriticalPath"
        assert data["thread"] == "hi"
        assert isinstance(data["witness"], list)

    def test_cyclic_graph_rejected(self, contention_graph):
        g = contention_graph.copy()
        g.add_edge(EdgeKind.SYNC, 6, 4)
        with pytest.raises(GraphError) as exc:
            is_well_formed(g)
        assert exc.value.code == ErrorCode.CYCLIC_GRAPH
        assert exc.value.where().startswith("cycle=")

    def test_empty_thread(self):
        """Un thread sans sommet ne contraint rien."""
        g = build_graph(PriorityOrder(("P",)), [("a", "P", 0), ("b", "P", 1)], [])
        assert is_well_formed(g) is None
        assert competitor_work(g, "a") == 0
        assert a_span(g, "a") == 0

    @settings(max_examples=200, deadline=None)
    @given(g=small_graphs())
    def test_matches_path_enumeration(self, g):
        """Même verdict que les deux clauses évaluées chemin par chemin."""
        assert (is_well_formed(g) is None) == oracles.well_formed(g)


class TestStrengthen:
    """Tests du renforcement."""

    def test_contention_graph_for_t2(self, contention_graph):
        """La section critique de t1 devient un ancêtre fort de t2."""
        g = strengthen(contention_graph, "t2")
        assert not g.weak_edges
        assert g.strong_edges == {(4, 2)}
        assert g.cut_thread_edges == {(1, 2)}
        edges = {(k.value, a, b) for k, a, b in g.edges()}
        assert edges == {
            ("thread", 2, 3),
            ("thread", 4, 5),
            ("thread", 5, 6),
            ("create", 0, 1),
            ("create", 0, 4),
            ("sync", 3, 5),
            ("strong", 4, 2),
        }

    def test_input_unchanged(self, contention_graph):
        before = contention_graph.edges()
        strengthen(contention_graph, "t2")
        assert contention_graph.edges() == before

    def test_nothing_to_do_for_t1(self, contention_graph):
        """Aucune arête faible n'atteint t1."""
        g = strengthen(contention_graph, "t1")
        assert g.edges() == contention_graph.edges()

    def test_missing_witness_raises(self, unwitnessed_graph):
        with pytest.raises(GraphError) as exc:
            strengthen(unwitnessed_graph, "b")
        assert exc.value.code == ErrorCode.MISSING_WITNESS
        assert exc.value.where() == "thread=b edge=0->3"
        assert str(exc.value).startswith("E304 graph: no weak-edge witness")

    def test_result_is_acyclic(self, contention_graph):
        assert strengthen(contention_graph, "t2").is_acyclic(strong_only=False)

    def test_covered_edge_kept_when_witness_closes_cycle(self, contended_spawn_graph):
        """Le témoin (5, 3) a pour parent 2: l'arête 1→2 reste, 5→6 est réécrite."""
        g = strengthen(contended_spawn_graph, "a0")
        assert g.cut_thread_edges == {(5, 6)}
        assert g.strong_edges == {(2, 6)}
        assert not g.weak_edges
        assert (EdgeKind.THREAD, 1, 2) in g.edges()
        assert g.is_acyclic(strong_only=False)

    def test_covered_edge_metrics(self, contended_spawn_graph):
        """Span: 0 → 1 → 2 → 6 → 7 → 3 → 4."""
        metrics = thread_metrics(contended_spawn_graph, "a0")
        assert metrics.a_span == 7
        assert metrics.competitor_work == 8


class TestMetrics:
    """Tests du travail concurrent et de l'a-span."""

    def test_contention_graph(self, contention_graph):
        """W = 6 (tout sauf la racine), span = 5 (4 → 2 → 3 → 5 → 6)."""
        metrics = thread_metrics(contention_graph, "t2")
        assert metrics.competitor_work == 6
        assert metrics.a_span == 5

    def test_chain(self):
        """Une chaîne de n sommets: travail n, span n."""
        g = build_graph(PriorityOrder(("P",)), [("a", "P", 5)], [])
        assert competitor_work(g, "a") == 5
        assert a_span(g, "a") == 5

    def test_lower_priority_work_excluded(self):
        """Le travail Low concurrent ne compte pas pour un thread High."""
        g = build_graph(
            PriorityOrder(("Low", "High")),
            [("hi", "High", 2), ("lo", "Low", 4)],
            [],
        )
        assert competitor_work(g, "hi") == 2
        assert competitor_work(g, "lo") == 6

    def test_descendants_excluded(self):
        """Les successeurs stricts de t ne sont pas concurrents."""
        g = build_graph(
            PriorityOrder(("P",)),
            [("a", "P", 2), ("b", "P", 3)],
            [("create", 1, "b")],
        )
        assert competitor_work(g, "a") == 2

    @settings(max_examples=200, deadline=None)
    @given(g=small_graphs())
    def test_competitor_work_matches_enumeration(self, g):
        for name in g.threads:
            assert competitor_work(g, name) == oracles.competitor_work(g, name)

    @settings(max_examples=200, deadline=None)
    @given(g=small_graphs())
    def test_a_span_matches_enumeration(self, g):
        """Plus long chemin fort dans le graphe renforcé (graphes bien formés)."""
        if is_well_formed(g) is not None:
            return
        for name in g.threads:
            strengthened = strengthen(g, name)
            if not strengthened.is_acyclic(strong_only=False):
                with pytest.raises(GraphError):
                    a_span(g, name)
                continue
            assert a_span(g, name) == oracles.longest_strong_path(strengthened, name)
