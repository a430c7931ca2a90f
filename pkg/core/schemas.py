"""Schémas Pydantic des sorties JSON et de la configuration CLI.

Ce module définit les formats échangés entre les commandes:
- dump de graphe (`graph.json`), relu par `graph` et `analyze`
- rapports de typage, d'exécution, d'analyse et de fuzzing
- configuration validée de la ligne de commande

Règles de validation v1.0.0:
- les valeurs invalides lèvent ValidationError (pas de fallback silencieux)
- schema_version est constant et vérifié au chargement
- les bornes sont des rationnels exacts, sérialisés "num/den"
- un rapport de schedule est cohérent: satisfied ⟺ responseTime ≤ bound
"""

from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from core.cost_graph import CostGraph, EdgeKind
from core.lang import PriorityOrder

# ==============================================================================
# CONSTANTES ET TYPES
# ==============================================================================

# Version des formats JSON - incrémenter lors de breaking changes
SCHEMA_VERSION = "1.0.0"

Subcommand = Literal["check", "run", "explore", "graph", "analyze", "fuzz"]
OutputFormat = Literal["text", "json", "dot"]
PolicyName = Literal["random", "rr", "script"]
SignalMode = Literal["highest", "fifo"]
FuzzSize = Literal["small", "medium"]
RunStatus = Literal["completed", "deadlock", "step_limit", "failure"]

DEFAULT_PROCS: tuple[int, ...] = (1, 2, 3, 4)


class _Versioned(BaseModel):
    """Base: version de schéma vérifiée + helpers JSON."""

    schema_version: str = Field(default=SCHEMA_VERSION, description="Version du format")

    @field_validator("schema_version")
    @classmethod
    def validate_version(cls, v: str) -> str:
        if v != SCHEMA_VERSION:
            raise ValueError(f"Unsupported schema version: {v} (expected {SCHEMA_VERSION})")
        return v

    def to_json(self, indent: int = 2) -> str:
        """Sérialise en JSON formaté (alias compris)."""
        return self.model_dump_json(indent=indent, by_alias=True, exclude_none=True)

    @classmethod
    def from_json(cls, json_str: str):
        """Désérialise depuis JSON avec validation complète.

        Raises:
            pydantic.ValidationError: Si le JSON est invalide
        """
        return cls.model_validate_json(json_str)

    @classmethod
    def from_file(cls, path: str | Path):
        """Charge depuis un fichier JSON.

        Raises:
            FileNotFoundError: Si le fichier n'existe pas
            pydantic.ValidationError: Si le JSON est invalide
        """
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


# ==============================================================================
# TYPAGE
# ==============================================================================

class SpanModel(BaseModel):
    line: int = Field(..., ge=0)
    column: int = Field(..., ge=0)


class DiagnosticModel(BaseModel):
    """Une erreur de typage: genre, position, message."""

    kind: str = Field(..., min_length=1, description="Nom du genre d'erreur (ex: SpawnPermissionLeak)")
    span: SpanModel | None = None
    message: str = ""


class CheckReportModel(_Versioned):
    """Rapport de `check`: {errors: [{kind, span, message}], ok}."""

    model_config = ConfigDict(extra="forbid")

    program: str = ""
    ok: bool
    errors: list[DiagnosticModel] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_ok(self) -> "CheckReportModel":
        if self.ok == bool(self.errors):
            raise ValueError("ok must be true exactly when there are no errors")
        return self

    @classmethod
    def from_report(cls, report: Any, program: str = "") -> "CheckReportModel":
        """Construit depuis un typechecker.CheckReport."""
        return cls(
            program=program,
            ok=report.ok,
            errors=[DiagnosticModel.model_validate(d.to_dict()) for d in report.errors],
        )


# ==============================================================================
# DUMP DE GRAPHE
# ==============================================================================

class ThreadDump(BaseModel):
    name: str = Field(..., min_length=1)
    prio: str = Field(..., min_length=1)
    vertices: list[int] = Field(default_factory=list)
    labels: list[str] = Field(default_factory=list, description="Étiquette par sommet (même ordre)")

    @field_validator("vertices")
    @classmethod
    def validate_vertices(cls, v: list[int]) -> list[int]:
        if any(u < 0 for u in v):
            raise ValueError("vertex ids must be non-negative")
        return v


class EdgeDump(BaseModel):
    """Arête sérialisée; pour `create`, la cible est un nom de thread."""

    model_config = ConfigDict(populate_by_name=True)

    kind: EdgeKind
    source: int = Field(..., alias="from", ge=0)
    target: int | str = Field(..., alias="to")

    @model_validator(mode="after")
    def validate_target(self) -> "EdgeDump":
        if self.kind is EdgeKind.THREAD:
            raise ValueError("thread edges are implied by the thread chains")
        if self.kind is EdgeKind.CREATE and not isinstance(self.target, str):
            raise ValueError("create edges target a thread name")
        if self.kind is not EdgeKind.CREATE and not isinstance(self.target, int):
            raise ValueError(f"{self.kind.value} edges target a vertex id")
        return self


class GraphDump(_Versioned):
    """Format `graph.json`.

    Validation:
    - priorités distinctes, au moins une
    - priorité de chaque thread déclarée
    - identifiants de sommets uniques
    - extrémités des arêtes existantes
    """

    priorities: list[str] = Field(..., min_length=1, description="Du plus bas au plus haut")
    threads: list[ThreadDump] = Field(default_factory=list)
    edges: list[EdgeDump] = Field(default_factory=list)
    cut_thread_edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_endpoints(self) -> "GraphDump":
        if len(set(self.priorities)) != len(self.priorities):
            raise ValueError("duplicate priority names")
        names = set()
        seen: set[int] = set()
        for t in self.threads:
            if t.prio not in self.priorities:
                raise ValueError(f"thread {t.name} has undeclared priority {t.prio}")
            if t.name in names:
                raise ValueError(f"duplicate thread {t.name}")
            names.add(t.name)
            dup = seen.intersection(t.vertices)
            if dup or len(set(t.vertices)) != len(t.vertices):
                raise ValueError(f"duplicate vertex ids in thread {t.name}")
            seen.update(t.vertices)
        for e in self.edges:
            if e.source not in seen:
                raise ValueError(f"edge source {e.source} is not a vertex")
            if isinstance(e.target, str) and e.target not in names:
                raise ValueError(f"create edge to unknown thread {e.target}")
            if isinstance(e.target, int) and e.target not in seen:
                raise ValueError(f"edge target {e.target} is not a vertex")
        return self

    @classmethod
    def from_graph(cls, g: CostGraph) -> "GraphDump":
        threads = [
            ThreadDump(
                name=info.name,
                prio=info.prio,
                vertices=list(info.vertices),
                labels=[g.labels.get(u, "") for u in info.vertices],
            )
            for info in g.threads.values()
        ]
        edges = [EdgeDump(kind=EdgeKind.CREATE, source=u, target=t) for u, t in sorted(g.create_edges)]
        for kind, pool in (
            (EdgeKind.SYNC, g.sync_edges),
            (EdgeKind.WEAK, g.weak_edges),
            (EdgeKind.STRONG, g.strong_edges),
        ):
            edges.extend(EdgeDump(kind=kind, source=a, target=b) for a, b in sorted(pool))
        return cls(
            priorities=list(g.order.names),
            threads=threads,
            edges=edges,
            cut_thread_edges=sorted(g.cut_thread_edges),
        )

    def to_graph(self) -> CostGraph:
        """Reconstruit le CostGraph (identifiants de sommets conservés)."""
        g = CostGraph(PriorityOrder(tuple(self.priorities)))
        for t in self.threads:
            g.add_thread(t.name, t.prio)
            for idx, u in enumerate(t.vertices):
                label = t.labels[idx] if idx < len(t.labels) else ""
                g.append_vertex(t.name, label=label, vertex=u)
        for e in self.edges:
            g.add_edge(e.kind, e.source, e.target)
        for a, b in self.cut_thread_edges:
            g.remove_edge(EdgeKind.THREAD, a, b)
        return g


# ==============================================================================
# ANALYSE D'ORDONNANCEMENT
# ==============================================================================

class ScheduleReport(BaseModel):
    """Rapport `{thread, P, responseTime, competitorWork, aSpan, bound, satisfied}`.

    `schedule` (étapes → sommets) n'est joint que pour un contre-exemple.
    """

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    thread: str = Field(..., min_length=1)
    processors: int = Field(..., alias="P", ge=1)
    response_time: int = Field(..., alias="responseTime", ge=0)
    competitor_work: int = Field(..., alias="competitorWork", ge=0)
    a_span: int = Field(..., alias="aSpan", ge=0)
    bound: Fraction
    satisfied: bool
    schedule: list[list[int]] | None = None

    @field_validator("bound", mode="before")
    @classmethod
    def parse_bound(cls, v: Any) -> Fraction:
        if isinstance(v, Fraction):
            return v
        if isinstance(v, (int, str)):
            try:
                return Fraction(v)
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"invalid rational bound: {v!r}") from e
        raise ValueError(f"bound must be 'num/den', got {type(v).__name__}")

    @field_serializer("bound")
    def serialize_bound(self, v: Fraction) -> str:
        return f"{v.numerator}/{v.denominator}"

    @model_validator(mode="after")
    def validate_satisfied(self) -> "ScheduleReport":
        if self.satisfied != (self.response_time <= self.bound):
            raise ValueError("satisfied must equal responseTime <= bound")
        return self

    def to_json(self, indent: int = 2) -> str:
        return self.model_dump_json(indent=indent, by_alias=True, exclude_none=True)


class AnalyzeReport(_Versioned):
    """Sortie de `analyze`: bonne formation + un rapport par P."""

    thread: str
    well_formed: bool
    violation: dict[str, Any] | None = None
    reports: list[ScheduleReport] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.well_formed and all(r.satisfied for r in self.reports)


# ==============================================================================
# EXÉCUTION ET FUZZING
# ==============================================================================

class DeadlockInfo(BaseModel):
    """Threads bloqués et cycle d'attente entre détenteurs de mutex."""

    cycle: list[str] = Field(default_factory=list, description="Threads du cycle wait-for")
    mutex_waiters: dict[str, list[str]] = Field(default_factory=dict)
    cv_waiters: dict[str, list[str]] = Field(default_factory=dict)


class RunSummary(_Versioned):
    program: str = ""
    policy: PolicyName
    seed: int = 0
    status: RunStatus
    steps: int = Field(..., ge=0)
    graph: dict[str, int] = Field(default_factory=dict, description="Comptes: sommets, threads, arêtes par genre")
    well_formed: bool | None = None
    violation: dict[str, Any] | None = None
    deadlock: DeadlockInfo | None = None
    failure: str | None = None

    @model_validator(mode="after")
    def validate_status(self) -> "RunSummary":
        if self.status == "deadlock" and self.deadlock is None:
            raise ValueError("deadlock status requires deadlock details")
        if self.status == "failure" and not self.failure:
            raise ValueError("failure status requires a failure message")
        return self


class ExploreSummary(_Versioned):
    program: str = ""
    runs: int = Field(..., ge=0)
    distinct_graphs: int = Field(..., ge=0)
    statuses: dict[str, int] = Field(default_factory=dict)
    ill_formed: int = Field(default=0, ge=0)
    truncated: bool = False


class FuzzFailure(BaseModel):
    index: int = Field(..., ge=0)
    seed: int
    reason: str
    reproducer: str | None = Field(default=None, description="Chemin du reproducteur minimisé")


class FuzzSummary(_Versioned):
    seed: int
    count: int = Field(..., ge=0)
    size: FuzzSize
    runs_per_program: int = Field(..., ge=1)
    accepted: int = Field(..., ge=0, description="Programmes générés acceptés par le typeur")
    failures: list[FuzzFailure] = Field(default_factory=list)
    mutants: int = Field(default=0, ge=0)
    mutants_rejected: int = Field(default=0, ge=0)
    completed_runs: int = Field(default=0, ge=0)
    deadlocks: int = Field(default=0, ge=0, description="Runs bloqués: bonne formation vérifiée, borne non")

    @property
    def ok(self) -> bool:
        return not self.failures and self.accepted == self.count

    @property
    def deadlock_rate(self) -> float:
        total = self.completed_runs + self.deadlocks
        return self.deadlocks / total if total else 0.0

    @property
    def rejection_rate(self) -> float:
        return self.mutants_rejected / self.mutants if self.mutants else 0.0


# ==============================================================================
# CONFIGURATION CLI
# ==============================================================================

class CliConfig(BaseModel):
    """Configuration validée d'une invocation.

    Validation:
    - --unsafe réservé à run/explore
    - nombres de processeurs, samples, steps, bound, runs ≥ 1
    - --script obligatoire avec --policy script
    - --format dot réservé à graph
    """

    model_config = ConfigDict(extra="ignore")

    subcommand: Subcommand
    input: Path | None = None
    seed: int = 0
    policy: PolicyName = "random"
    script: list[str] = Field(default_factory=list)
    steps: int = Field(default=10_000, ge=1)
    procs: list[int] = Field(default_factory=lambda: list(DEFAULT_PROCS))
    samples: int = Field(default=20, ge=1)
    output_format: OutputFormat = "text"
    output_dir: Path | None = None
    unsafe: bool = False
    may_deadlock: bool = False
    signal: SignalMode = "fifo"
    bound: int = Field(default=200, ge=1)
    thread: str | None = None
    strengthen: str | None = None
    count: int = Field(default=100, ge=0)
    size: FuzzSize = "small"
    runs: int = Field(default=3, ge=1)
    color: bool = False

    @field_validator("procs")
    @classmethod
    def validate_procs(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one processor count is required")
        if any(p < 1 for p in v):
            raise ValueError(f"processor counts must be >= 1, got {v}")
        return v

    @model_validator(mode="after")
    def validate_combination(self) -> "CliConfig":
        if self.unsafe and self.subcommand not in ("run", "explore"):
            raise ValueError("--unsafe is only valid with run or explore")
        if self.policy == "script" and not self.script:
            raise ValueError("--policy script requires --script")
        if self.output_format == "dot" and self.subcommand != "graph":
            raise ValueError("--format dot is only valid with graph")
        if self.subcommand != "fuzz" and self.input is None:
            raise ValueError(f"{self.subcommand} requires an input file")
        if self.subcommand == "analyze" and not self.thread:
            raise ValueError("analyze requires --thread")
        return self
