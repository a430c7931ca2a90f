"""Simulation d'ordonnancements prompts sur P processeurs et borne de temps de réponse.

Conventions:
- les étapes sont numérotées à partir de 1
- un sommet est prêt quand tous ses parents (arêtes fortes ET faibles) ont
  été exécutés à une étape antérieure: les schedules construits sont donc
  admissibles par construction
- temps de réponse de a = exec(t) − prêt(s) + 1
- borne = (W + (P − 1)·span) / P, rationnel exact
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction

from core.cost_graph import STRONG_KINDS, CostGraph, EdgeKind
from core.dag_analysis import competitor_work, a_span, is_well_formed
from core.errors import AnalysisError, ErrorCode, GraphError
from core.logging_config import get_logger
from core.schemas import ScheduleReport

logger = get_logger(__name__)

VERTEX_ID = "vertex-id"


@dataclass
class Schedule:
    processors: int
    steps: list[list[int]]
    exec_step: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_steps(cls, processors: int, steps: list[list[int]]) -> "Schedule":
        exec_step: dict[int, int] = {}
        for idx, vs in enumerate(steps, start=1):
            for u in vs:
                if u in exec_step:
                    raise AnalysisError(f"vertex {u} executed twice", code=ErrorCode.INVALID_SCHEDULE)
                exec_step[u] = idx
        return cls(processors, [list(vs) for vs in steps], exec_step)

    def __len__(self) -> int:
        return len(self.steps)


def _parents(g: CostGraph) -> dict[int, list[tuple[EdgeKind, int]]]:
    parents: dict[int, list[tuple[EdgeKind, int]]] = {u: [] for u in g.vertex_thread}
    for kind, a, b in g.edges():
        parents[b].append((kind, a))
    return parents


def ready_step(g: CostGraph, sched: Schedule, u: int, parents: dict | None = None) -> int:
    """Première étape où u peut s'exécuter: 1 + max des étapes de ses parents."""
    parents = parents if parents is not None else _parents(g)
    steps = [sched.exec_step[p] for _, p in parents[u]]
    return 1 + max(steps, default=0)


def prompt_schedule(g: CostGraph, processors: int, tie_break: str | int = VERTEX_ID) -> Schedule:
    """Schedule glouton: à chaque étape, les sommets prêts de plus haute
    priorité d'abord, égalités départagées par `tie_break` (id de sommet, ou
    graine entière pour un ordre aléatoire reproductible).

    Raises:
        AnalysisError: P < 1 (E306)
        GraphError: graphe cyclique (E303)
    """
    if processors < 1:
        raise AnalysisError(f"processor count must be >= 1, got {processors}", code=ErrorCode.INVALID_SCHEDULE)
    if not g.is_acyclic(strong_only=False):
        raise GraphError("cannot schedule a cyclic graph", code=ErrorCode.CYCLIC_GRAPH)

    rng = None if tie_break == VERTEX_ID else random.Random(tie_break)
    parents = _parents(g)
    pending = {u: len(ps) for u, ps in parents.items()}
    children: dict[int, list[int]] = {u: [] for u in parents}
    for u, ps in parents.items():
        for _, p in ps:
            children[p].append(u)

    ready = sorted(u for u, n in pending.items() if n == 0)
    steps: list[list[int]] = []
    while ready:
        if rng is not None:
            rng.shuffle(ready)
        else:
            ready.sort()
        # tri stable: priorité décroissante, départage conservé
        ready.sort(key=lambda u: -g.order.rank(g.prio(u)))
        chosen, ready = ready[:processors], ready[processors:]
        steps.append(chosen)
        for u in chosen:
            for c in children[u]:
                pending[c] -= 1
                if pending[c] == 0:
                    ready.append(c)
    sched = Schedule.from_steps(processors, steps)
    logger.debug(f"Prompt schedule on P={processors}: {len(steps)} step(s)")
    return sched


def _validate(g: CostGraph, sched: Schedule) -> dict[int, list[tuple[EdgeKind, int]]]:
    if set(sched.exec_step) != set(g.vertex_thread):
        raise AnalysisError("schedule does not cover the graph exactly", code=ErrorCode.INVALID_SCHEDULE)
    if any(len(vs) > sched.processors for vs in sched.steps):
        raise AnalysisError(f"a step executes more than {sched.processors} vertices", code=ErrorCode.INVALID_SCHEDULE)
    parents = _parents(g)
    for u, ps in parents.items():
        for kind, p in ps:
            if kind in STRONG_KINDS and sched.exec_step[p] >= sched.exec_step[u]:
                raise AnalysisError(
                    f"vertex {u} runs before its strong parent {p}",
                    code=ErrorCode.INVALID_SCHEDULE,
                )
    return parents


def is_admissible(g: CostGraph, sched: Schedule) -> bool:
    """Vrai si chaque parent faible est exécuté avant son enfant.

    Raises:
        AnalysisError: le schedule n'est pas un schedule valide de g (E306)
    """
    parents = _validate(g, sched)
    return all(
        sched.exec_step[p] < sched.exec_step[u]
        for u, ps in parents.items()
        for kind, p in ps
        if kind is EdgeKind.WEAK
    )


def is_prompt(g: CostGraph, sched: Schedule) -> bool:
    """Aucun processeur inoccupé ni travail moins prioritaire tant qu'un sommet prêt attend."""
    parents = _validate(g, sched)
    for idx, vs in enumerate(sched.steps, start=1):
        waiting = [
            u
            for u, step in sched.exec_step.items()
            if step > idx and ready_step(g, sched, u, parents) <= idx
        ]
        if not waiting:
            continue
        if len(vs) < sched.processors:
            return False
        lowest = min(g.order.rank(g.prio(u)) for u in vs)
        if any(g.order.rank(g.prio(u)) > lowest for u in waiting):
            return False
    return True


def response_time(g: CostGraph, sched: Schedule, thread: str) -> int:
    """Étapes (inclusives) entre la disponibilité de s et l'exécution de t.

    Raises:
        GraphError: thread inconnu (E301)
    """
    info = g.thread(thread)
    if not info.vertices:
        return 0
    s, t = info.vertices[0], info.vertices[-1]
    return sched.exec_step[t] - ready_step(g, sched, s) + 1


def bound(g: CostGraph, thread: str, processors: int) -> Fraction:
    """(W + (P − 1)·span) / P pour un graphe bien formé.

    Raises:
        AnalysisError: graphe mal formé (E305) ou P < 1 (E306)
    """
    if processors < 1:
        raise AnalysisError(f"processor count must be >= 1, got {processors}", code=ErrorCode.INVALID_SCHEDULE)
    violation = is_well_formed(g)
    if violation is not None:
        raise AnalysisError(f"bound undefined: {violation}", violation=violation.to_dict())
    return _bound(competitor_work(g, thread), a_span(g, thread), processors)


def _bound(work: int, span: int, processors: int) -> Fraction:
    return Fraction(work + (processors - 1) * span, processors)


def check_bound(g: CostGraph, thread: str, processors: int, samples: int = 20, seed: int = 0) -> ScheduleReport:
    """Vérifie la borne sur le schedule déterministe et `samples` schedules tirés.

    Retourne le pire cas; en cas de dépassement, le rapport porte
    satisfied=False et le schedule fautif.

    Raises:
        AnalysisError: graphe mal formé (E305)
    """
    if processors < 1:
        raise AnalysisError(f"processor count must be >= 1, got {processors}", code=ErrorCode.INVALID_SCHEDULE)
    violation = is_well_formed(g)
    if violation is not None:
        raise AnalysisError(f"bound undefined: {violation}", violation=violation.to_dict())
    work, span = competitor_work(g, thread), a_span(g, thread)
    limit = _bound(work, span, processors)
    worst: tuple[int, Schedule] | None = None
    for tie_break in [VERTEX_ID, *range(seed, seed + samples)]:
        sched = prompt_schedule(g, processors, tie_break)
        rt = response_time(g, sched, thread)
        if worst is None or rt > worst[0]:
            worst = (rt, sched)
        if rt > limit:
            logger.warning(f"Bound violated for {thread} on P={processors}: {rt} > {limit}")
            break

    rt, sched = worst
    satisfied = rt <= limit
    return ScheduleReport(
        thread=thread,
        processors=processors,
        response_time=rt,
        competitor_work=work,
        a_span=span,
        bound=limit,
        satisfied=satisfied,
        schedule=None if satisfied else sched.steps,
    )
