"""Orchestrator - Pipeline du toolkit l4s.

Ce module enchaîne les étapes pour chaque commande de la CLI:
chargement → typage → exécution / exploration → analyse du graphe.
Les rapports pydantic de core.schemas sont la seule forme de sortie.
"""

import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from core.cost_graph import CostGraph
from core.dag_analysis import is_well_formed, strengthen
from core.errors import ErrorCode, L4sError, LoadError
from core.generator import generate_programs, mutate, shrink
from core.interpreter import ExploreResult, RunResult, explore, run
from core.logging_config import StepTimer, get_logger
from core.parser import parse_program
from core.printer import pretty_print
from core.renderer import get_renderer
from core.scheduler import check_bound
from core.schemas import (
    DEFAULT_PROCS,
    AnalyzeReport,
    CheckReportModel,
    ExploreSummary,
    FuzzFailure,
    FuzzSummary,
    GraphDump,
    RunSummary,
)
from core.syntax import SourceProgram
from core.typechecker import check_program
from policies import RandomPolicy, make_policy

logger = get_logger(__name__)


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise LoadError(f"cannot write {path}: {e}", path=str(path), code=ErrorCode.FILE_WRITE_FAILED) from e
    return path


def _output_dir(output_dir: str | Path) -> Path:
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise LoadError(f"cannot create {output_dir}: {e}", path=str(output_dir), code=ErrorCode.FILE_WRITE_FAILED) from e
    return output_dir


# ==============================================================================
# RÉSULTATS
# ==============================================================================

@dataclass
class RunOutcome:
    """Résultat de `run`: résumé, graphe et trace rendue."""
    summary: RunSummary
    result: RunResult
    trace_text: str

    @property
    def graph(self) -> CostGraph:
        return self.result.graph

    def save(self, output_dir: str | Path) -> dict[str, Path]:
        """
        Sauvegarde trace.txt, graph.dot, graph.json et summary.json.

        Returns:
            Dict avec les chemins des fichiers créés
        """
        output_dir = _output_dir(output_dir)
        paths = {
            "trace": _write(output_dir / "trace.txt", self.trace_text),
            "dot": _write(output_dir / "graph.dot", get_renderer().render_dot(self.graph)),
            "json": _write(output_dir / "graph.json", GraphDump.from_graph(self.graph).to_json()),
            "summary": _write(output_dir / "summary.json", self.summary.to_json()),
        }
        return paths


@dataclass
class ExploreOutcome:
    summary: ExploreSummary
    result: ExploreResult

    def save(self, output_dir: str | Path) -> dict[str, Path]:
        """Un couple graph_NNN.{json,dot} par graphe distinct + summary.json."""
        output_dir = _output_dir(output_dir)
        paths: dict[str, Path] = {}
        renderer = get_renderer()
        for idx, item in enumerate(self.result.graphs):
            stem = f"graph_{idx:03d}_{item.status}"
            paths[f"{stem}.json"] = _write(output_dir / f"{stem}.json", GraphDump.from_graph(item.graph).to_json())
            paths[f"{stem}.dot"] = _write(output_dir / f"{stem}.dot", renderer.render_dot(item.graph))
        paths["summary"] = _write(output_dir / "summary.json", self.summary.to_json())
        return paths


@dataclass
class FuzzOutcome:
    summary: FuzzSummary
    reproducers: list[Path] = field(default_factory=list)

    def save(self, output_dir: str | Path) -> dict[str, Path]:
        output_dir = _output_dir(output_dir)
        return {"summary": _write(output_dir / "fuzz.json", self.summary.to_json())}


# ==============================================================================
# PIPELINE
# ==============================================================================

class L4sPipeline:
    """
    Orchestrateur des commandes.

    Flow:
    fichier .l4s → parse → check_program → run / explore → CostGraph
    graph.json   → GraphDump → is_well_formed → check_bound (par P)

    Args:
        signal_mode: "fifo" ou "highest" (choix du waiter réveillé par signal)
    """

    def __init__(self, signal_mode: str = "fifo"):
        self.signal_mode = signal_mode

    # ------------------------------------------------------------------
    # chargement
    # ------------------------------------------------------------------

    def load(self, path: str | Path) -> SourceProgram:
        """
        Raises:
            LoadError: fichier illisible (E401)
            ParseError: erreur de syntaxe ou de résolution (E1xx)
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (FileNotFoundError, IsADirectoryError):
            raise LoadError(f"File not found: {path}", path=str(path)) from None
        except (OSError, UnicodeDecodeError) as e:
            raise LoadError(f"cannot read {path}: {e}", path=str(path)) from e
        with StepTimer(logger, f"parse {path.name}"):
            return parse_program(text)

    def load_graph(self, path: str | Path) -> CostGraph:
        """
        Raises:
            LoadError: fichier absent (E401) ou dump invalide (E403)
            GraphError: dump incohérent (E302/E307)
        """
        path = Path(path)
        try:
            dump = GraphDump.from_file(path)
        except (FileNotFoundError, IsADirectoryError):
            raise LoadError(f"File not found: {path}", path=str(path)) from None
        except ValueError as e:
            # pydantic.ValidationError est une ValueError
            raise LoadError(f"invalid graph dump {path}: {e}", path=str(path), code=ErrorCode.JSON_PARSE_FAILED) from e
        return dump.to_graph()

    # ------------------------------------------------------------------
    # commandes
    # ------------------------------------------------------------------

    def check(self, program: SourceProgram, name: str = "") -> CheckReportModel:
        with StepTimer(logger, "typecheck"):
            report = check_program(program)
        if not report.ok:
            logger.info(f"{len(report.errors)} type error(s): {', '.join(k.value for k in report.kinds())}")
        return CheckReportModel.from_report(report, program=name)

    def run(
        self,
        program: SourceProgram,
        name: str = "",
        policy: str = "random",
        seed: int = 0,
        script: list[str] | None = None,
        steps: int = 10_000,
        unsafe: bool = False,
    ) -> RunOutcome:
        """
        Exécute une interleaving. En mode `unsafe`, les invariants ne sont
        pas vérifiés et la bonne formation est seulement rapportée.

        Raises:
            MachineError: script invalide (E503/E504)
        """
        scheduler = make_policy(policy, seed, script)
        with StepTimer(logger, f"run ({policy}, seed={seed})"):
            result = run(program, scheduler, step_limit=steps, signal_mode=self.signal_mode, check=not unsafe)

        g = result.graph
        well_formed, violation = None, None
        if result.status != "failure" and g.is_acyclic(strong_only=False):
            found = is_well_formed(g)
            well_formed = found is None
            violation = found.to_dict() if found else None

        summary = RunSummary(
            program=name,
            policy=policy,
            seed=seed,
            status=result.status,
            steps=result.turns,
            graph=g.summary(),
            well_formed=well_formed,
            violation=violation,
            deadlock=result.deadlock,
            failure=result.failure,
        )
        trace_text = get_renderer().render_trace(result.trace, program=name, policy=policy, status=result.status)
        return RunOutcome(summary, result, trace_text)

    def explore(self, program: SourceProgram, name: str = "", bound: int = 200, unsafe: bool = False) -> ExploreOutcome:
        with StepTimer(logger, f"explore (bound={bound})"):
            result = explore(program, bound, signal_mode=self.signal_mode, check=not unsafe)
        ill_formed = sum(
            1
            for item in result.graphs
            if item.status in ("completed", "deadlock")
            and item.graph.is_acyclic(strong_only=False)
            and is_well_formed(item.graph) is not None
        )
        summary = ExploreSummary(
            program=name,
            runs=result.runs,
            distinct_graphs=len(result.graphs),
            statuses=result.statuses(),
            ill_formed=ill_formed,
            truncated=result.truncated,
        )
        return ExploreOutcome(summary, result)

    def graph(self, g: CostGraph, strengthen_for: str | None = None) -> CostGraph:
        """Graphe tel quel, ou son a-renforcement pour `strengthen_for`."""
        if strengthen_for is None:
            return g
        g.thread(strengthen_for)
        with StepTimer(logger, f"strengthen {strengthen_for}"):
            return strengthen(g, strengthen_for)

    def analyze(
        self,
        g: CostGraph,
        thread: str,
        procs: list[int] | tuple[int, ...] = DEFAULT_PROCS,
        samples: int = 20,
        seed: int = 0,
    ) -> AnalyzeReport:
        """
        Un ScheduleReport par P; aucun si le graphe est mal formé.

        Raises:
            GraphError: thread inconnu (E301) ou graphe cyclique (E303)
        """
        g.thread(thread)
        violation = is_well_formed(g)
        if violation is not None:
            logger.warning(f"Graph is not well-formed: {violation}")
            return AnalyzeReport(thread=thread, well_formed=False, violation=violation.to_dict())
        reports = []
        with StepTimer(logger, f"analyze {thread} on P={list(procs)}"):
            for p in procs:
                reports.append(check_bound(g, thread, p, samples=samples, seed=seed))
        return AnalyzeReport(thread=thread, well_formed=True, reports=reports)

    # ------------------------------------------------------------------
    # fuzzing
    # ------------------------------------------------------------------

    def _fuzz_one(
        self,
        program: SourceProgram,
        seed: int,
        runs: int,
        procs: tuple[int, ...],
        samples: int,
        steps: int,
        tally: Counter | None = None,
    ) -> str | None:
        """Raison de l'échec d'un programme généré, ou None.

        Les runs en deadlock passent par la bonne formation (dans `run`) mais
        pas par la borne; `tally` compte les statuts observés.
        """
        report = check_program(program)
        if not report.ok:
            return f"rejected: {', '.join(k.value for k in report.kinds())}"
        for r in range(runs):
            result = run(program, RandomPolicy(seed + r), step_limit=steps, signal_mode=self.signal_mode)
            if tally is not None:
                tally[result.status] += 1
            if result.status == "failure":
                return f"failure: {result.failure}"
            if result.status == "step_limit":
                return f"step_limit: no termination after {steps} turns"
            if result.status == "deadlock":
                continue
            g = result.graph
            for info in g.threads.values():
                if not info.vertices:
                    continue
                for p in procs:
                    try:
                        sched = check_bound(g, info.name, p, samples=samples, seed=seed)
                    except L4sError as e:
                        return f"bound: {info.name} on P={p}: {e.message} (seed {seed + r})"
                    if not sched.satisfied:
                        return (
                            f"bound: {info.name} on P={p} took {sched.response_time} "
                            f"> {sched.bound} (seed {seed + r})"
                        )
        return None

    def fuzz(
        self,
        seed: int = 0,
        count: int = 100,
        size: str = "small",
        runs: int = 3,
        output_dir: str | Path | None = None,
        procs: tuple[int, ...] = DEFAULT_PROCS,
        samples: int = 20,
        steps: int = 10_000,
    ) -> FuzzOutcome:
        """
        Génère `count` programmes, les exécute `runs` fois chacun et vérifie
        invariants, bonne formation et borne. Chaque échec est minimisé et
        écrit dans `output_dir` (défaut: ./fuzz-failures).

        Un mutant par programme mesure le taux de rejet du vérificateur
        (rapporté, pas exigé).
        """
        mutation_rng = random.Random(seed)
        failures: list[FuzzFailure] = []
        reproducers: list[Path] = []
        accepted = mutants = mutants_rejected = 0
        tally: Counter = Counter()

        with StepTimer(logger, f"fuzz (seed={seed}, count={count}, size={size})"):
            for index, (pseed, program) in enumerate(generate_programs(seed, count, size)):
                if check_program(program).ok:
                    accepted += 1
                reason = self._fuzz_one(program, pseed, runs, procs, samples, steps, tally)
                if reason is not None:
                    logger.warning(f"Program #{index} (seed {pseed}) failed: {reason}")
                    category = reason.split(":", 1)[0]

                    def still_fails(candidate: SourceProgram) -> bool:
                        found = self._fuzz_one(candidate, pseed, runs, procs, samples, steps)
                        return found is not None and found.split(":", 1)[0] == category

                    minimized = shrink(program, still_fails)
                    target = _output_dir(output_dir or "fuzz-failures")
                    path = _write(target / f"fuzz_{index:04d}_{pseed}.l4s", pretty_print(minimized))
                    reproducers.append(path)
                    failures.append(FuzzFailure(index=index, seed=pseed, reason=reason, reproducer=str(path)))

                mutant = mutate(program, mutation_rng)
                if mutant is not None:
                    mutants += 1
                    if not check_program(mutant[1]).ok:
                        mutants_rejected += 1

        summary = FuzzSummary(
            seed=seed,
            count=count,
            size=size,
            runs_per_program=runs,
            accepted=accepted,
            failures=failures,
            mutants=mutants,
            mutants_rejected=mutants_rejected,
            deadlocks=tally["deadlock"],
            completed_runs=tally["completed"],
        )
        logger.info(
            f"Fuzz: {accepted}/{count} accepted, {len(failures)} failure(s), "
            f"{summary.deadlocks} deadlocked run(s), "
            f"mutant rejection rate {summary.rejection_rate:.0%}"
        )
        return FuzzOutcome(summary, reproducers)
