"""Tests de l'évaluateur pas à pas et du graphe qu'il construit.

Les scénarios utilisent des scripts de choix de threads pour fixer
l'interleaving, puis un tourniquet une fois le script épuisé.
"""

from pathlib import Path

import pytest

from core.dag_analysis import WfKind, is_well_formed
from core.errors import ErrorCode, MachineError
from core.interpreter import MAIN_THREAD, Blocked, Finished, Interpreter, Progressed, explore, run
from core.invariants import check_invariants
from core.parser import parse_file
from core.scheduler import check_bound
from core.syntax import Num
from policies import RandomPolicy, RoundRobinPolicy, ScriptPolicy


def scripted(*choices: str) -> ScriptPolicy:
    return ScriptPolicy(list(choices))


def rules(result) -> list[str]:
    return [entry.rule for entry in result.trace]


# a0 (Low) réveille a1 (High), qui reste ensuite bloqué sur d
LOW_SIGNAL_THEN_STUCK = """
priorities Low < High;
let c = newcv<High> in
let d = newcv<High> in
spawn<High>[] { wait(c); wait(d) };
signal(c)
"""


class TestSteps:
    """Tests des règles individuelles."""

    def test_main_thread_at_lowest_priority(self, parse):
        program = parse("priorities Low < High; skip")
        config, g = Interpreter(program.order).initial(program)
        assert config.enabled() == [MAIN_THREAD]
        assert g.thread(MAIN_THREAD).prio == "Low"

    def test_structural_rules_add_no_vertex(self, parse):
        """Let1 n'ajoute rien; l'instruction qui suit ajoute un sommet."""
        program = parse("priorities P; let m = newmutex<P> in skip")
        interp = Interpreter(program.order)
        config, g = interp.initial(program)
        first = interp.step(config, g, MAIN_THREAD)
        assert first == Progressed(MAIN_THREAD, "Let1")
        second = interp.step(config, g, MAIN_THREAD)
        assert second.rule == "NewMutex"
        assert second.vertices == (0,)
        assert g.labels[0] == "newmutex"

    def test_turn_runs_to_next_vertex(self, parse):
        program = parse("priorities P; let m = newmutex<P> in skip")
        interp = Interpreter(program.order)
        config, g = interp.initial(program)
        trace = []
        outcome = interp.turn(config, g, MAIN_THREAD, trace)
        assert outcome.rule == "NewMutex"
        assert [e.rule for e in trace] == ["Let1", "NewMutex"]

    def test_finish(self, parse):
        program = parse("priorities P; skip")
        interp = Interpreter(program.order)
        config, g = interp.initial(program)
        interp.turn(config, g, MAIN_THREAD)
        assert isinstance(interp.turn(config, g, MAIN_THREAD), Finished)
        assert config.is_finished()

    def test_wait_blocks_with_two_vertices(self, parse):
        program = parse("priorities P; let c = newcv<P> in wait(c)")
        interp = Interpreter(program.order)
        config, g = interp.initial(program)
        interp.turn(config, g, MAIN_THREAD)
        outcome = interp.turn(config, g, MAIN_THREAD)
        assert isinstance(outcome, Blocked)
        assert outcome.rule == "Wait"
        assert [g.labels[u] for u in outcome.vertices] == ["wait", "wake"]
        assert config.is_deadlocked()

    def test_step_on_unknown_thread(self, parse):
        program = parse("priorities P; skip")
        interp = Interpreter(program.order)
        config, g = interp.initial(program)
        with pytest.raises(MachineError) as exc:
            interp.step(config, g, "a7")
        assert exc.value.code == ErrorCode.THREAD_NOT_ENABLED

    def test_unknown_signal_mode(self, two_levels):
        with pytest.raises(MachineError):
            Interpreter(two_levels, signal_mode="lifo")


class TestRuns:
    """Tests d'exécutions complètes sur le corpus."""

    def test_producer_consumer_round_robin(self, corpus):
        """Le consommateur lit la valeur produite."""
        result = run(corpus("pc_fixed"), RoundRobinPolicy())
        assert result.completed
        assert result.config.mem["r0"].value == Num(1)
        assert is_well_formed(result.graph) is None

    def test_ceiling_promotion(self, corpus):
        """Le détenteur Low est re-logé sur un thread frais au plafond."""
        result = run(corpus("ceiling"), scripted("a0", "a0", "a0", "a1", "a2"))
        assert result.completed
        assert "WithLockS3" in rules(result)
        assert "WithLockE4" in rules(result)
        g = result.graph
        assert g.thread("a3").prio == "High"
        summary = g.summary()
        assert (summary["create"], summary["sync"], summary["weak"]) == (3, 2, 2)
        assert is_well_formed(g) is None

    def test_ceiling_promotion_edges(self, corpus):
        """Arêtes faibles depuis l'acquisition d'origine et depuis le thread promu."""
        g = run(corpus("ceiling"), scripted("a0", "a0", "a0", "a1", "a2")).graph
        lock, locked = g.thread("a1").vertices[:2]
        lift = g.first("a3")
        waiter_locked = g.thread("a2").vertices[1]
        assert g.weak_edges == {(lock, waiter_locked), (lift, waiter_locked)}
        assert (locked, "a3") in g.create_edges
        resume = g.last("a1")
        assert g.labels[resume] == "resume"
        unlock = g.last("a3")
        assert (unlock, resume) in g.sync_edges
        assert (unlock, waiter_locked) in g.sync_edges

    def test_lock_order_deadlock(self, corpus):
        """Inversion d'ordre de verrouillage: cycle a1 ⇄ a2."""
        script = ["a0"] * 5 + ["a1", "a1", "a2", "a2", "a1", "a2"]
        result = run(corpus("deadlock"), scripted(*script))
        assert result.status == "deadlock"
        assert set(result.deadlock.cycle) == {"a1", "a2"}
        assert set(result.deadlock.mutex_waiters) == {"m0", "m1"}

    def test_broadcast_wakes_all(self, corpus):
        result = run(corpus("broadcast"), scripted("a0", "a0", "a0", "a1", "a2", "a0", "a3"))
        assert result.completed
        assert "Broadcast1" in rules(result)
        sources = {a for a, _ in result.graph.sync_edges}
        assert len(result.graph.sync_edges) == 2
        assert len(sources) == 1

    def test_trylock_failure_branch(self, corpus):
        """Mutex tenu: trywith prend la branche else."""
        result = run(corpus("trylock"), scripted("a0", "a0", "a0", "a0", "a1", "a2"))
        assert result.completed
        assert "TryWithF" in rules(result)
        assert result.config.mem["r0"].value == Num(1)

    def test_trylock_success_branch(self, corpus):
        result = run(corpus("trylock"), scripted("a0", "a0", "a0", "a0", "a2"))
        assert result.completed
        assert "TryWithS" in rules(result)

    def test_ill_typed_program_ill_formed_graph(self, corpus):
        """Contrôle négatif: le producteur Low se retrouve sur le chemin critique du consommateur."""
        script = ["a0"] * 4 + ["a1"] * 3
        result = run(corpus("pc_terr"), scripted(*script), check=False)
        assert result.completed
        violation = is_well_formed(result.graph)
        assert violation.kind is WfKind.LOW_PRIORITY_ON_CRITICAL_PATH
        assert violation.thread == "a1"

    def test_checked_run_reports_ill_formed_graph(self, corpus):
        """En mode vérifié, un graphe final mal formé est un échec."""
        script = ["a0"] * 4 + ["a1"] * 3
        result = run(corpus("pc_terr"), scripted(*script))
        assert result.status == "failure"
        assert "invariant 2" in result.failure

    def test_deadlocked_run_checked_for_well_formedness(self, parse):
        """Un deadlock n'exempte pas le graphe final de la bonne formation."""
        result = run(parse(LOW_SIGNAL_THEN_STUCK), scripted("a0", "a0", "a0", "a1", "a0"))
        assert result.status == "failure"
        assert result.failure.startswith("invariant 2: LowPriorityOnCriticalPath in thread a1")
        assert result.deadlock is not None
        assert result.deadlock.cv_waiters == {"cv1": ["a1"]}

    def test_unchecked_deadlock_keeps_status(self, parse):
        result = run(parse(LOW_SIGNAL_THEN_STUCK), scripted("a0", "a0", "a0", "a1", "a0"), check=False)
        assert result.status == "deadlock"

    def test_step_limit(self, parse):
        result = run(parse("priorities P; while 1 { skip }"), RoundRobinPolicy(), step_limit=50)
        assert result.status == "step_limit"
        assert result.turns == 50

    def test_dynamic_type_failure(self, parse):
        """Un programme mal typé peut rester bloqué sans règle applicable."""
        program = parse("priorities P; let r = newref<nat>(0) in let x = !r in let y = !x in skip")
        result = run(program, RoundRobinPolicy(), check=False)
        assert result.status == "failure"
        assert result.failure

    @pytest.mark.parametrize("mode,woken", [("fifo", "a1"), ("highest", "a2")])
    def test_signal_mode(self, parse, mode, woken):
        """FIFO réveille le premier arrivé; highest le plus prioritaire."""
        program = parse(
            "priorities Low < High; let c = newcv<Low> in "
            "spawn<Low>[] { wait(c) }; spawn<High>[] { wait(c) }; signal(c); signal(c)"
        )
        result = run(program, scripted("a0", "a0", "a0", "a1", "a2", "a0"), signal_mode=mode, check=False)
        g = result.graph
        signal_vertex = g.thread("a0").vertices[3]
        (first,) = [b for a, b in g.sync_edges if a == signal_vertex]
        assert g.vertex_thread[first] == woken

    def test_script_rejects_disabled_thread(self, corpus):
        with pytest.raises(MachineError) as exc:
            run(corpus("pc_fixed"), scripted("a3"))
        assert exc.value.code == ErrorCode.THREAD_NOT_ENABLED

    def test_seeded_runs_are_reproducible(self, corpus):
        """Même graine, même trace et même graphe."""
        a = run(corpus("cv_two_waits"), RandomPolicy(3))
        b = run(corpus("cv_two_waits"), RandomPolicy(3))
        assert a.status == b.status
        assert [(e.thread, e.rule) for e in a.trace] == [(e.thread, e.rule) for e in b.trace]
        assert a.graph.canonical_key() == b.graph.canonical_key()

    def test_invariants_hold_during_checked_run(self, corpus):
        result = run(corpus("broadcast"), RandomPolicy(11))
        assert result.status in ("completed", "deadlock")
        assert check_invariants(result.config, result.graph) == []


SPAWNED_HOLDER = """
priorities Low < High;
let m = newmutex<High> in
spawn<Low>[] { with (m) { skip } };
with (m) { skip }
"""

CONTENDED_MUTEX = """
priorities Low < Mid < High;
let r = newref<nat>(0) in
let m = newmutex<High> in
spawn<Low>[] { with (m) { r := 1 } };
spawn<Low>[] { with (m) { r := 2 } };
spawn<Mid>[] { with (m) { skip; skip } };
spawn<High>[] { with (m) { skip } };
with (m) { skip }
"""


class TestLockContention:
    """Graphes produits par la contention sur un mutex, sous graines aléatoires."""

    @pytest.mark.parametrize("seed", range(300))
    def test_spawned_holder_then_main(self, parse, seed):
        """main contend le verrou que tient le thread qu'il vient de créer."""
        result = run(parse(SPAWNED_HOLDER), RandomPolicy(seed), check=False)
        assert result.completed
        assert is_well_formed(result.graph) is None

    def test_spawned_holder_bound(self, parse):
        for seed in range(20):
            g = run(parse(SPAWNED_HOLDER), RandomPolicy(seed)).graph
            for name in g.threads:
                for p in (1, 2):
                    assert check_bound(g, name, p, samples=3, seed=seed).satisfied

    def test_random_contention_well_formed(self, parse):
        """Cinq threads sur trois priorités: promotions et passages de main mélangés."""
        program = parse(CONTENDED_MUTEX)
        rules_seen: set[str] = set()
        for seed in range(100):
            result = run(program, RandomPolicy(seed))
            assert result.status == "completed", result.failure
            assert is_well_formed(result.graph) is None
            rules_seen.update(rules(result))
        assert "WithLockS2" in rules_seen
        assert rules_seen & {"WithLockS3", "WithLockS4"}


@pytest.fixture(scope="module")
def two_waits_explored():
    """Fixture: exploration complète de cv_two_waits (coûteuse, partagée)."""
    program = parse_file(Path(__file__).parent.parent / "corpus" / "cv_two_waits.l4s")
    return explore(program, bound=200, max_runs=50_000)


class TestExplore:
    """Tests de l'exploration exhaustive."""

    def test_two_waiters_two_signals(self, two_waits_explored):
        """Des graphes complets et des deadlocks (signal perdu)."""
        assert not two_waits_explored.truncated
        statuses = two_waits_explored.statuses()
        assert statuses.get("completed", 0) >= 2
        assert statuses.get("deadlock", 0) >= 1
        assert "failure" not in statuses

    def test_completed_and_deadlocked_graphs_well_formed(self, two_waits_explored):
        for item in two_waits_explored.graphs:
            assert is_well_formed(item.graph) is None

    def test_woken_waiter_varies(self, two_waits_explored):
        """Le premier signal réveille a1 dans un graphe, a2 dans un autre."""
        first_woken = set()
        for item in two_waits_explored.graphs:
            if item.status != "completed":
                continue
            g = item.graph
            signals = [u for u in g.thread("a0").vertices if g.labels.get(u) == "signal"]
            targets = [b for a, b in g.sync_edges if a == signals[0]]
            first_woken.add(g.vertex_thread[targets[0]])
        assert first_woken == {"a1", "a2"}

    def test_graphs_deduplicated(self, two_waits_explored):
        keys = [(item.status, item.graph.canonical_key()) for item in two_waits_explored.graphs]
        assert len(keys) == len(set(keys))
        assert two_waits_explored.runs >= len(keys)

    def test_bound_truncates(self, corpus):
        assert explore(corpus("cv_two_waits"), bound=2).truncated

    def test_deadlock_program_never_completes(self, corpus):
        result = explore(corpus("deadlock"), bound=200)
        assert not result.truncated
        assert set(result.statuses()) == {"deadlock"}
