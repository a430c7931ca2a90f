"""Sémantique de coût: évaluateur pas à pas qui construit le graphe d'une exécution.

Chaque application de règle dynamique est un `step`. Les règles de
structure (Let1, Let2, Seq1, Seq2, Finish) n'ajoutent aucun sommet; toute
instruction en ajoute un, Wait et les prises de verrou deux.

TOURS D'ORDONNANCEMENT
======================
Un tour exécute le thread choisi jusqu'à sa prochaine règle qui ajoute un
sommet, le bloque ou le termine. La trace liste chaque règle appliquée.

PROTOCOLE DE PLAFOND
====================
Un thread qui demande un mutex tenu par un thread de priorité strictement
plus basse fait re-loger la section critique du détenteur sur un thread
frais au plafond du mutex (WithLockS3, ou S4 si le détenteur est lui-même
en attente). La libération rend la main au thread d'origine (E3/E4).
"""

from dataclasses import dataclass, field
from typing import Any, Union

import networkx as nx

from core.cost_graph import CostGraph, EdgeKind
from core.dag_analysis import is_well_formed
from core.errors import ErrorCode, MachineError
from core.invariants import check_invariants
from core.lang import NONE, OWNED, PermissionLevel, PermissionMap, PriorityOrder, Signature, derive_kept
from core.logging_config import get_logger
from core.machine import (
    Configuration,
    HoleSeq,
    LetHole,
    LockHolder,
    MemEntry,
    RetStmt,
    RetVal,
    RunInstr,
    RunStmt,
    ThreadState,
    Waiter,
    WithLockAcquired,
    WithLockPromoted,
    priority_ceiling_lift,
)
from core.schemas import DeadlockInfo
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
    Spawn,
    TryWith,
    UnitVal,
    Var,
    Wait,
    While,
    WithLock,
    substitute,
)

logger = get_logger(__name__)

MAIN_THREAD = "a0"
SIGNAL_MODES = ("fifo", "highest")


# ==============================================================================
# RÉSULTATS D'UN PAS
# ==============================================================================

@dataclass(frozen=True)
class Progressed:
    thread: str
    rule: str
    vertices: tuple[int, ...] = ()


@dataclass(frozen=True)
class Blocked:
    thread: str
    rule: str
    on: str
    vertices: tuple[int, ...] = ()


@dataclass(frozen=True)
class Finished:
    thread: str
    rule: str = "Finish"


@dataclass(frozen=True)
class DynamicTypeFailure:
    thread: str
    description: str
    rule: str = "Stuck"


StepOutcome = Union[Progressed, Blocked, Finished, DynamicTypeFailure]


class _Stuck(Exception):
    """Aucune règle ne s'applique à l'état du thread."""


@dataclass(frozen=True)
class TraceEntry:
    step: int
    thread: str
    rule: str


# ==============================================================================
# INTERPRÈTE
# ==============================================================================

class Interpreter:
    """Règles dynamiques pour un ordre de priorités donné.

    Usage:
        interp = Interpreter(program.order)
        config, graph = interp.initial(program)
        outcome = interp.step(config, graph, "a0")
    """

    def __init__(self, order: PriorityOrder, signal_mode: str = "fifo"):
        if signal_mode not in SIGNAL_MODES:
            raise MachineError(f"unknown signal mode '{signal_mode}'", code=ErrorCode.INVALID_POLICY)
        self.order = order
        self.signal_mode = signal_mode

    def initial(self, program: SourceProgram) -> tuple[Configuration, CostGraph]:
        config = Configuration()
        graph = CostGraph(self.order)
        name = config.fresh("a")
        prio = self.order.lowest
        graph.add_thread(name, prio)
        config.pool[name] = ThreadState(name, prio, Signature(), RunStmt((), program.body))
        return config, graph

    # ------------------------------------------------------------------
    # utilitaires
    # ------------------------------------------------------------------

    @staticmethod
    def _emit(g: CostGraph, t: ThreadState, *labels: str) -> tuple[int, ...]:
        return tuple(g.append_vertex(t.name, sig=t.sig, label=label) for label in labels)

    @staticmethod
    def _expect(v: Any, cls: type, what: str) -> Any:
        if not isinstance(v, cls):
            raise _Stuck(f"expected {what}, got {v!r}")
        return v

    @staticmethod
    def _closed(v: Any) -> Any:
        if isinstance(v, Var):
            raise _Stuck(f"free variable '{v.name}' at run time")
        return v

    def _pick_waiter(self, waiters: list[Waiter], mode: str) -> int:
        """Index du waiter réveillé; les égalités se résolvent en FIFO."""
        if mode == "fifo":
            return 0
        best = 0
        for idx, w in enumerate(waiters):
            if self.order.lt(waiters[best].prio, w.prio):
                best = idx
        return best

    # ------------------------------------------------------------------
    # un pas
    # ------------------------------------------------------------------

    def step(self, config: Configuration, g: CostGraph, chosen: str) -> StepOutcome:
        """Applique exactement une règle au thread `chosen` (mutation en place).

        Raises:
            MachineError: thread absent du pool (E503)
        """
        t = config.pool.get(chosen)
        if t is None:
            raise MachineError(f"thread '{chosen}' is not enabled", code=ErrorCode.THREAD_NOT_ENABLED, thread=chosen)
        try:
            state = t.state
            if isinstance(state, RunStmt):
                return self._run_stmt(config, g, t, state.stack, state.stmt)
            if isinstance(state, RetStmt):
                return self._ret_stmt(config, g, t, state.stack)
            if isinstance(state, RetVal):
                return self._ret_val(config, t, state.stack, state.value)
            return self._run_instr(config, g, t, state.stack, state.instr)
        except _Stuck as e:
            return DynamicTypeFailure(chosen, str(e))
        except MachineError as e:
            return DynamicTypeFailure(chosen, e.message)

    def _ret_val(self, config: Configuration, t: ThreadState, k: tuple, v: Any) -> StepOutcome:
        if not k or not isinstance(k[-1], LetHole):
            raise _Stuck("value returned outside of a let")
        frame = k[-1]
        config.pool[t.name] = t.with_state(RunStmt(k[:-1], substitute(frame.body, frame.var, v)))
        return Progressed(t.name, "Let2")

    def _run_stmt(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple, s: Any) -> StepOutcome:
        if isinstance(s, Let):
            config.pool[t.name] = t.with_state(RunInstr(k + (LetHole(s.var, s.body),), s.instr))
            return Progressed(t.name, "Let1")
        if isinstance(s, Seq):
            config.pool[t.name] = t.with_state(RunStmt(k + (HoleSeq(s.second),), s.first))
            return Progressed(t.name, "Seq1")
        if isinstance(s, Skip):
            vs = self._emit(g, t, "skip")
            config.pool[t.name] = t.with_state(RetStmt(k))
            return Progressed(t.name, "Skip", vs)
        if isinstance(s, If):
            cond = self._expect(self._closed(s.cond), Num, "a nat condition")
            vs = self._emit(g, t, "if")
            branch, rule = (s.then, "If1") if cond.n != 0 else (s.orelse, "If2")
            config.pool[t.name] = t.with_state(RunStmt(k, branch))
            return Progressed(t.name, rule, vs)
        if isinstance(s, While):
            self._expect(self._closed(s.cond), Num, "a nat condition")
            vs = self._emit(g, t, "while")
            unrolled = If(s.cond, Seq(s.body, s), Skip())
            config.pool[t.name] = t.with_state(RunStmt(k, unrolled))
            return Progressed(t.name, "While", vs)
        if isinstance(s, WithLock):
            return self._lock(config, g, t, k, s.mutex, s.body)
        if isinstance(s, TryWith):
            return self._try_lock(config, g, t, k, s)
        raise _Stuck(f"not a statement: {s!r}")

    def _ret_stmt(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple) -> StepOutcome:
        if not k:
            del config.pool[t.name]
            return Finished(t.name)
        frame = k[-1]
        if isinstance(frame, HoleSeq):
            config.pool[t.name] = t.with_state(RunStmt(k[:-1], frame.rest))
            return Progressed(t.name, "Seq2")
        if isinstance(frame, (WithLockAcquired, WithLockPromoted)):
            return self._unlock(config, g, t, k[:-1], frame)
        raise _Stuck("statement returned into a let")

    # ------------------------------------------------------------------
    # instructions
    # ------------------------------------------------------------------

    def _passed(self, t: ThreadState, spawn: Spawn) -> PermissionMap:
        entries: dict[tuple[str, str], PermissionLevel] = {}
        for grant in spawn.grants:
            cv = self._expect(self._closed(grant.target), CVHandle, "a cv handle in a spawn grant")
            if grant.is_all:
                entries.update({(cv.name, p): lvl for p, lvl in t.perms.row(cv.name).items()})
            else:
                entries[(cv.name, grant.prio)] = grant.level
        return PermissionMap(entries)

    @staticmethod
    def _force_kept(whole: PermissionMap, passed: PermissionMap) -> PermissionMap:
        """Reste approché quand le découpage est impossible (programmes mal typés)."""
        return whole.update({key: NONE for key, lvl in passed if lvl is OWNED})

    def _run_instr(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple, i: Any) -> StepOutcome:
        name = t.name

        def ret(value: Any, rule: str, vs: tuple[int, ...], **changes: Any) -> Progressed:
            config.pool[name] = t.with_state(RetVal(k, value), **changes)
            return Progressed(name, rule, vs)

        if isinstance(i, Spawn):
            passed = self._passed(t, i)
            kept = self._derive(t.perms, passed)
            vs = self._emit(g, t, "spawn")
            child = config.fresh("a")
            g.add_thread(child, i.prio)
            g.add_edge(EdgeKind.CREATE, vs[0], child)
            result = ret(UnitVal(), "Spawn", vs, perms=kept)
            config.pool[child] = ThreadState(child, i.prio, t.sig, RunStmt((), i.body), passed)
            logger.debug(f"{name} spawned {child} at {i.prio} with {passed}")
            return result

        if isinstance(i, NewRef):
            value = self._closed(i.value)
            vs = self._emit(g, t, "newref")
            cell = config.fresh("r")
            config.mem[cell] = MemEntry(value, vs[0], t.sig, i.type)
            return ret(RefHandle(cell), "NewRef", vs, sig=t.sig.with_ref(cell, i.type))

        if isinstance(i, Deref):
            ref = self._expect(self._closed(i.value), RefHandle, "a reference")
            entry = config.mem.get(ref.name)
            if entry is None:
                raise _Stuck(f"unallocated cell '{ref.name}'")
            vs = self._emit(g, t, "deref")
            return ret(entry.value, "Deref", vs, sig=t.sig.merge(entry.sig))

        if isinstance(i, Assign):
            ref = self._expect(self._closed(i.target), RefHandle, "a reference")
            old = config.mem.get(ref.name)
            if old is None:
                raise _Stuck(f"unallocated cell '{ref.name}'")
            value = self._closed(i.value)
            vs = self._emit(g, t, "assign")
            config.mem[ref.name] = MemEntry(value, vs[0], t.sig, old.type)
            return ret(UnitVal(), "Update", vs)

        if isinstance(i, NewCV):
            vs = self._emit(g, t, "newcv")
            cv = config.fresh("cv")
            config.cv_names.add(cv)
            perms = t.perms.update({(cv, p): OWNED for p in self.order.at_or_above(i.prio)})
            return ret(CVHandle(cv, i.prio), "NewCV", vs, sig=t.sig.with_cv(cv, i.prio), perms=perms)

        if isinstance(i, Wait):
            cv = self._cv(config, i.value)
            vs = self._emit(g, t, "wait", "wake")
            del config.pool[name]
            config.waiting.setdefault(cv.name, []).append(Waiter(t.with_state(RetVal(k, UnitVal())), *vs))
            return Blocked(name, "Wait", cv.name, vs)

        if isinstance(i, (Signal, Broadcast)):
            cv = self._cv(config, i.value)
            is_signal = isinstance(i, Signal)
            vs = self._emit(g, t, "signal" if is_signal else "broadcast")
            waiters = config.waiting.get(cv.name, [])
            if not waiters:
                return ret(UnitVal(), "Signal2" if is_signal else "Broadcast2", vs)
            if is_signal:
                woken = [waiters.pop(self._pick_waiter(waiters, self.signal_mode))]
            else:
                woken, waiters[:] = list(waiters), []
            if not waiters:
                del config.waiting[cv.name]
            result = ret(UnitVal(), "Signal1" if is_signal else "Broadcast1", vs)
            for w in woken:
                g.add_edge(EdgeKind.SYNC, vs[0], w.u2)
                config.pool[w.name] = w.thread
            return result

        if isinstance(i, Promote):
            cv = self._cv(config, i.value)
            vs = self._emit(g, t, "promote")
            below = self.order.names[: self.order.index(i.prio)]
            perms = t.perms.update({(cv.name, p): NONE for p in below})
            return ret(CVHandle(cv.name, i.prio), "Promote", vs, sig=t.sig.with_cv(cv.name, i.prio), perms=perms)

        if isinstance(i, NewMutex):
            vs = self._emit(g, t, "newmutex")
            mutex = config.fresh("m")
            config.mutex_ceilings[mutex] = i.prio
            return ret(MutexHandle(mutex), "NewMutex", vs, sig=t.sig.with_mutex(mutex, i.prio))

        if isinstance(i, ReturnVal):
            value = self._closed(i.value)
            vs = self._emit(g, t, "ret")
            return ret(value, "Return", vs)

        raise _Stuck(f"not an instruction: {i!r}")

    def _derive(self, whole: PermissionMap, passed: PermissionMap) -> PermissionMap:
        kept = derive_kept(whole, passed)
        return kept if kept is not None else self._force_kept(whole, passed)

    def _cv(self, config: Configuration, v: Any) -> CVHandle:
        cv = self._expect(self._closed(v), CVHandle, "a condition variable")
        if cv.name not in config.cv_names:
            raise _Stuck(f"unknown condition variable '{cv.name}'")
        return cv

    def _mutex(self, config: Configuration, v: Any) -> str:
        m = self._expect(self._closed(v), MutexHandle, "a mutex")
        if m.name not in config.mutex_ceilings:
            raise _Stuck(f"unknown mutex '{m.name}'")
        return m.name

    # ------------------------------------------------------------------
    # verrous
    # ------------------------------------------------------------------

    def _try_lock(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple, s: TryWith) -> StepOutcome:
        mutex = self._mutex(config, s.mutex)
        if mutex not in config.locks:
            vs = self._emit(g, t, "trylock", "locked")
            config.locks[mutex] = LockHolder(t.name, *vs)
            config.pool[t.name] = t.with_state(RunStmt(k + (WithLockAcquired(mutex),), s.acquired))
            return Progressed(t.name, "TryWithS", vs)
        vs = self._emit(g, t, "trylock")
        config.pool[t.name] = t.with_state(RunStmt(k, s.failed))
        return Progressed(t.name, "TryWithF", vs)

    def _lock(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple, mv: Any, body: Any) -> StepOutcome:
        mutex = self._mutex(config, mv)
        entered = RunStmt(k + (WithLockAcquired(mutex),), body)
        holder = config.locks.get(mutex)

        if holder is None:
            vs = self._emit(g, t, "lock", "locked")
            config.locks[mutex] = LockHolder(t.name, *vs)
            config.pool[t.name] = t.with_state(entered)
            return Progressed(t.name, "WithLockS1", vs)

        current = config.resolve(holder.thread)
        if self.order.le(t.prio, g.thread(current).prio):
            vs = self._emit(g, t, "lock", "locked")
            g.add_edge(EdgeKind.WEAK, holder.u1, vs[1])
            del config.pool[t.name]
            config.waiting.setdefault(mutex, []).append(Waiter(t.with_state(entered), *vs))
            return Blocked(t.name, "WithLockS2", mutex, vs)

        return self._promote_holder(config, g, t, entered, mutex, holder, current)

    def _promote_holder(
        self,
        config: Configuration,
        g: CostGraph,
        t: ThreadState,
        entered: RunStmt,
        mutex: str,
        holder: LockHolder,
        current: str,
    ) -> StepOutcome:
        """WithLockS3 (détenteur prêt) et WithLockS4 (détenteur en attente)."""
        ceiling = config.mutex_ceilings[mutex]
        located = None
        if current in config.pool:
            held = config.pool[current]
            rule = "WithLockS3"
        else:
            located = config.find_waiter(current)
            if located is None:
                raise _Stuck(f"holder '{current}' of mutex '{mutex}' is neither ready nor waiting")
            key, idx = located
            held = config.waiting[key][idx].thread
            rule = "WithLockS4"
        lifted = priority_ceiling_lift(held.state, mutex, current, held.prio)

        promoted = config.fresh("a")
        origin = g.last(current)
        g.add_thread(promoted, ceiling)
        promoted_state = ThreadState(promoted, ceiling, held.sig, lifted, held.perms)
        new_u1, new_u2 = self._emit(g, promoted_state, "lift", "lifted")
        if origin is not None:
            g.add_edge(EdgeKind.CREATE, origin, promoted)
        vs = self._emit(g, t, "lock", "locked")

        waiters = config.waiting.setdefault(mutex, [])
        for w in waiters:
            g.add_edge(EdgeKind.WEAK, new_u1, w.u2)
        g.add_edge(EdgeKind.WEAK, new_u1, vs[1])
        g.add_edge(EdgeKind.WEAK, holder.u1, vs[1])

        if located is None:
            del config.pool[current]
            config.pool[promoted] = promoted_state
        else:
            key, idx = located
            old = config.waiting[key][idx]
            config.waiting[key][idx] = Waiter(promoted_state, old.u1, old.u2)
        del config.pool[t.name]
        waiters.append(Waiter(t.with_state(entered), *vs))
        config.locks[mutex] = LockHolder(promoted, new_u1, new_u2)
        config.promoted[current] = promoted
        logger.debug(f"{rule}: {current} promoted to {promoted} at {ceiling} for mutex {mutex}")
        return Blocked(t.name, rule, mutex, vs)

    def _unlock(self, config: Configuration, g: CostGraph, t: ThreadState, k: tuple, frame: Any) -> StepOutcome:
        mutex = frame.mutex
        waiters = config.waiting.get(mutex, [])
        vs = self._emit(g, t, "unlock")
        u = vs[0]

        if isinstance(frame, WithLockPromoted):
            back = ThreadState(frame.thread, frame.prio, t.sig, RetStmt(k), t.perms)
            (u_back,) = self._emit(g, back, "resume")
            g.add_edge(EdgeKind.SYNC, u, u_back)
            del config.pool[t.name]
            config.pool[back.name] = back
            config.promoted.pop(frame.thread, None)
            rules = ("WithLockE3", "WithLockE4")
            vs = vs + (u_back,)
        else:
            config.pool[t.name] = t.with_state(RetStmt(k))
            rules = ("WithLockE1", "WithLockE2")

        if not waiters:
            config.locks.pop(mutex, None)
            return Progressed(t.name, rules[0], vs)

        chosen = waiters.pop(self._pick_waiter(waiters, "highest"))
        g.add_edge(EdgeKind.SYNC, u, chosen.u2)
        for w in waiters:
            g.add_edge(EdgeKind.WEAK, chosen.u1, w.u2)
        if not waiters:
            del config.waiting[mutex]
        config.pool[chosen.name] = chosen.thread
        config.locks[mutex] = LockHolder(chosen.name, chosen.u1, chosen.u2)
        return Progressed(t.name, rules[1], vs)

    # ------------------------------------------------------------------
    # tours
    # ------------------------------------------------------------------

    def turn(
        self,
        config: Configuration,
        g: CostGraph,
        chosen: str,
        trace: list[TraceEntry] | None = None,
    ) -> StepOutcome:
        """Pas successifs de `chosen` jusqu'à une règle qui ajoute un sommet,
        bloque ou termine le thread."""
        while True:
            outcome = self.step(config, g, chosen)
            if trace is not None:
                trace.append(TraceEntry(len(trace) + 1, chosen, outcome.rule))
            if not isinstance(outcome, Progressed) or outcome.vertices:
                return outcome
            if chosen not in config.pool:
                return outcome


# ==============================================================================
# EXÉCUTION COMPLÈTE
# ==============================================================================

@dataclass
class RunResult:
    status: str
    config: Configuration
    graph: CostGraph
    trace: list[TraceEntry] = field(default_factory=list)
    turns: int = 0
    failure: str | None = None
    deadlock: DeadlockInfo | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def deadlock_info(config: Configuration) -> DeadlockInfo:
    """Threads bloqués, et cycle du graphe wait-for entre détenteurs de mutex."""
    wait_for = nx.DiGraph()
    mutex_waiters: dict[str, list[str]] = {}
    cv_waiters: dict[str, list[str]] = {}
    for key, ws in sorted(config.waiting.items()):
        names = [w.name for w in ws]
        if key in config.mutex_ceilings:
            mutex_waiters[key] = names
            holder = config.locks.get(key)
            if holder is not None:
                for n in names:
                    wait_for.add_edge(n, config.resolve(holder.thread))
        else:
            cv_waiters[key] = names
    cycle: list[str] = []
    try:
        cycle = [a for a, _ in nx.find_cycle(wait_for)]
    except nx.NetworkXNoCycle:
        pass
    return DeadlockInfo(cycle=cycle, mutex_waiters=mutex_waiters, cv_waiters=cv_waiters)


def run(
    program: SourceProgram,
    policy: Any,
    step_limit: int = 10_000,
    signal_mode: str = "fifo",
    check: bool = True,
    wf_every: int = 0,
) -> RunResult:
    """Exécute une interleaving choisie par `policy` (tours de thread).

    Args:
        policy: objet avec `choose(enabled, turn) -> str` (voir policies/)
        step_limit: nombre maximal de tours
        check: vérifie les invariants après chaque tour (désactivé par --unsafe)
        wf_every: vérifie la bonne formation tous les N tours (0 = en fin de run)

    Raises:
        MachineError: choix de la politique invalide (E503/E504)
    """
    interp = Interpreter(program.order, signal_mode)
    config, g = interp.initial(program)
    trace: list[TraceEntry] = []
    turns = 0

    while config.pool:
        if turns >= step_limit:
            logger.info(f"Step limit {step_limit} reached")
            return RunResult("step_limit", config, g, trace, turns)
        chosen = policy.choose(config.enabled(), turns)
        outcome = interp.turn(config, g, chosen, trace)
        turns += 1
        if isinstance(outcome, DynamicTypeFailure):
            logger.warning(f"Dynamic type failure in {outcome.thread}: {outcome.description}")
            return RunResult("failure", config, g, trace, turns, failure=outcome.description)
        if check:
            violations = check_invariants(config, g, check_wf=bool(wf_every) and turns % wf_every == 0)
            if violations:
                return RunResult("failure", config, g, trace, turns, failure=violations[0])

    deadlocked = config.is_deadlocked()
    info = deadlock_info(config) if deadlocked else None
    if info is not None:
        logger.info(f"Deadlock after {turns} turns (cycle: {info.cycle})")

    # un deadlock peut laisser un cycle d'arêtes faibles: rien à vérifier
    if check and (not deadlocked or g.is_acyclic(strong_only=False)):
        violation = is_well_formed(g)
        if violation is not None:
            return RunResult("failure", config, g, trace, turns, failure=f"invariant 2: {violation}", deadlock=info)
    if deadlocked:
        return RunResult("deadlock", config, g, trace, turns, deadlock=info)
    logger.debug(f"Run completed in {turns} turns, {len(g)} vertices")
    return RunResult("completed", config, g, trace, turns)


# ==============================================================================
# EXPLORATION EXHAUSTIVE
# ==============================================================================

@dataclass
class ExploredGraph:
    status: str
    graph: CostGraph
    failure: str | None = None


@dataclass
class ExploreResult:
    graphs: list[ExploredGraph]
    runs: int
    truncated: bool

    def statuses(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for item in self.graphs:
            counts[item.status] = counts.get(item.status, 0) + 1
        return counts


def explore(
    program: SourceProgram,
    bound: int,
    signal_mode: str = "fifo",
    check: bool = True,
    max_runs: int = 20_000,
) -> ExploreResult:
    """Énumère en profondeur tous les choix de thread, `bound` tours au plus.

    Les graphes sont dédupliqués à renumérotation près des sommets. Une
    branche coupée par `bound` ou `max_runs` positionne `truncated`.
    """
    interp = Interpreter(program.order, signal_mode)
    root = interp.initial(program)
    seen: dict[tuple, ExploredGraph] = {}
    runs = 0
    truncated = False
    stack: list[tuple[Configuration, CostGraph, int]] = [(root[0], root[1], 0)]

    def record(status: str, g: CostGraph, failure: str | None = None) -> None:
        nonlocal runs
        runs += 1
        key = (status, g.canonical_key())
        if key not in seen:
            seen[key] = ExploredGraph(status, g, failure)

    while stack:
        config, g, depth = stack.pop()
        if not config.pool:
            record("deadlock" if config.is_deadlocked() else "completed", g)
            continue
        if depth >= bound or runs >= max_runs:
            truncated = True
            continue
        for name in reversed(config.enabled()):
            c2, g2 = config.clone(), g.copy()
            outcome = interp.turn(c2, g2, name)
            if isinstance(outcome, DynamicTypeFailure):
                record("failure", g2, outcome.description)
                continue
            if check:
                violations = check_invariants(c2, g2)
                if violations:
                    record("failure", g2, violations[0])
                    continue
            stack.append((c2, g2, depth + 1))

    logger.info(f"Explored {runs} run(s), {len(seen)} distinct graph(s), truncated={truncated}")
    return ExploreResult(list(seen.values()), runs, truncated)
