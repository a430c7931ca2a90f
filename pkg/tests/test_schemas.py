"""Tests des schémas Pydantic.

Vérifie que:
- Les valeurs invalides lèvent ValidationError
- Le dump de graphe se relit à l'identique
- Les rapports restent cohérents (ok, satisfied, statut)
- Les combinaisons d'options CLI sont validées
"""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from core.cost_graph import EdgeKind
from core.dag_analysis import strengthen
from core.schemas import (
    SCHEMA_VERSION,
    AnalyzeReport,
    CheckReportModel,
    CliConfig,
    DeadlockInfo,
    EdgeDump,
    FuzzSummary,
    GraphDump,
    RunSummary,
    ScheduleReport,
)
from core.typechecker import check_program


def dump_dict(**overrides):
    data = {
        "priorities": ["Low", "High"],
        "threads": [
            {"name": "a", "prio": "Low", "vertices": [0, 1]},
            {"name": "b", "prio": "High", "vertices": [2]},
        ],
        "edges": [{"kind": "create", "from": 0, "to": "b"}, {"kind": "weak", "from": 1, "to": 2}],
    }
    data.update(overrides)
    return data


class TestGraphDump:
    """Tests du format graph.json."""

    def test_valid(self):
        dump = GraphDump.model_validate(dump_dict())
        g = dump.to_graph()
        assert g.create_edges == {(0, "b")}
        assert g.weak_edges == {(1, 2)}
        assert dump.schema_version == SCHEMA_VERSION

    def test_graph_round_trip(self, contention_graph):
        g = GraphDump.from_json(GraphDump.from_graph(contention_graph).to_json()).to_graph()
        assert g.edges() == contention_graph.edges()
        assert g.labels == contention_graph.labels

    def test_strengthened_round_trip(self, contention_graph):
        """Arêtes strong et arêtes de thread coupées survivent au dump."""
        s = strengthen(contention_graph, "t2")
        g = GraphDump.from_graph(s).to_graph()
        assert g.strong_edges == {(4, 2)}
        assert g.cut_thread_edges == {(1, 2)}

    def test_json_uses_from_to(self, contention_graph):
        text = GraphDump.from_graph(contention_graph).to_json()
        assert '"from": 1' in text
        assert '"to": "t1"' in text

    @pytest.mark.parametrize(
        "overrides",
        [
            {"priorities": []},
            {"priorities": ["P", "P"]},
            {"threads": [{"name": "a", "prio": "Mid", "vertices": [0]}], "edges": []},
            {"threads": [{"name": "a", "prio": "Low", "vertices": [0, 0]}], "edges": []},
            {"edges": [{"kind": "sync", "from": 0, "to": 9}]},
            {"edges": [{"kind": "create", "from": 0, "to": "zz"}]},
            {"schema_version": "0.1.0"},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ValidationError):
            GraphDump.model_validate(dump_dict(**overrides))

    @pytest.mark.parametrize(
        "edge",
        [
            {"kind": "thread", "from": 0, "to": 1},
            {"kind": "create", "from": 0, "to": 1},
            {"kind": "sync", "from": 0, "to": "b"},
        ],
    )
    def test_invalid_edges(self, edge):
        with pytest.raises(ValidationError):
            EdgeDump.model_validate(edge)

    def test_edge_by_name(self):
        edge = EdgeDump(kind=EdgeKind.SYNC, source=0, target=1)
        assert edge.model_dump(by_alias=True) == {"kind": EdgeKind.SYNC, "from": 0, "to": 1}


class TestScheduleReport:
    """Tests du rapport d'ordonnancement."""

    def report(self, **overrides):
        data = {
            "thread": "t",
            "P": 2,
            "responseTime": 5,
            "competitorWork": 6,
            "aSpan": 5,
            "bound": "11/2",
            "satisfied": True,
        }
        data.update(overrides)
        return ScheduleReport.model_validate(data)

    def test_parse_rational(self):
        assert self.report().bound == Fraction(11, 2)

    def test_integer_bound_serialized(self):
        assert '"bound": "6/1"' in self.report(bound=6, responseTime=6).to_json()

    def test_satisfied_must_match(self):
        with pytest.raises(ValidationError):
            self.report(satisfied=False)
        with pytest.raises(ValidationError):
            self.report(responseTime=6)

    @pytest.mark.parametrize("bad", ["x/2", "1/0", 2.5])
    def test_invalid_bound(self, bad):
        with pytest.raises(ValidationError):
            self.report(bound=bad)

    def test_zero_processors(self):
        with pytest.raises(ValidationError):
            self.report(P=0)

    def test_analyze_ok(self):
        ok = AnalyzeReport(thread="t", well_formed=True, reports=[self.report()])
        assert ok.ok
        assert not AnalyzeReport(thread="t", well_formed=False, violation={"kind": "x"}).ok


class TestCheckReportModel:
    """Tests du rapport de typage."""

    def test_from_accepted(self, corpus):
        model = CheckReportModel.from_report(check_program(corpus("pc_fixed")), program="pc_fixed")
        assert model.ok
        assert model.errors == []

    def test_from_rejected(self, corpus):
        model = CheckReportModel.from_report(check_program(corpus("pc_terr")))
        assert not model.ok
        assert model.errors[0].kind == "SpawnPermissionLeak"
        assert model.errors[0].span.line > 0

    def test_ok_must_match_errors(self):
        with pytest.raises(ValidationError):
            CheckReportModel(ok=True, errors=[{"kind": "SignalWithoutPermission"}])
        with pytest.raises(ValidationError):
            CheckReportModel(ok=False)

    def test_extra_field_forbidden(self):
        with pytest.raises(ValidationError):
            CheckReportModel(ok=True, verdict="fine")


class TestRunSummary:
    """Tests des résumés d'exécution et de fuzzing."""

    def test_deadlock_requires_details(self):
        with pytest.raises(ValidationError):
            RunSummary(policy="rr", status="deadlock", steps=3)
        summary = RunSummary(policy="rr", status="deadlock", steps=3, deadlock=DeadlockInfo(cycle=["a1", "a2"]))
        assert summary.deadlock.cycle == ["a1", "a2"]

    def test_failure_requires_message(self):
        with pytest.raises(ValidationError):
            RunSummary(policy="random", status="failure", steps=1)

    def test_unknown_status(self):
        with pytest.raises(ValidationError):
            RunSummary(policy="random", status="crashed", steps=1)

    def test_fuzz_rates(self):
        summary = FuzzSummary(seed=0, count=2, size="small", runs_per_program=1, accepted=2, mutants=4, mutants_rejected=3)
        assert summary.ok
        assert summary.rejection_rate == 0.75
        empty = FuzzSummary(seed=0, count=0, size="small", runs_per_program=1, accepted=0)
        assert empty.rejection_rate == 0.0


class TestCliConfig:
    """Tests des combinaisons d'options."""

    def test_defaults(self):
        config = CliConfig(subcommand="run", input="x.l4s")
        assert config.procs == [1, 2, 3, 4]
        assert config.signal == "fifo"
        assert config.steps == 10_000

    @pytest.mark.parametrize(
        "values",
        [
            {"subcommand": "check", "input": "x.l4s", "unsafe": True},
            {"subcommand": "run", "input": "x.l4s", "policy": "script"},
            {"subcommand": "run", "input": "x.l4s", "output_format": "dot"},
            {"subcommand": "run"},
            {"subcommand": "analyze", "input": "g.json"},
            {"subcommand": "analyze", "input": "g.json", "thread": "a1", "procs": [0]},
            {"subcommand": "analyze", "input": "g.json", "thread": "a1", "procs": []},
            {"subcommand": "run", "input": "x.l4s", "steps": 0},
            {"subcommand": "run", "input": "x.l4s", "signal": "lifo"},
            {"subcommand": "lint", "input": "x.l4s"},
        ],
    )
    def test_invalid(self, values):
        with pytest.raises(ValidationError):
            CliConfig.model_validate(values)

    def test_valid_combinations(self):
        CliConfig(subcommand="explore", input="x.l4s", unsafe=True)
        CliConfig(subcommand="run", input="x.l4s", policy="script", script=["a0"])
        CliConfig(subcommand="graph", input="g.json", output_format="dot")
        CliConfig(subcommand="fuzz")
