"""Erreurs et exceptions du toolkit l4s.

Ce module centralise les exceptions métier avec des codes stables, pour que
la CLI puisse les traduire en codes de sortie et que les tests puissent les
identifier sans dépendre du texte des messages.

Les erreurs de typage ne sont PAS des exceptions: elles sont collectées comme
données dans un CheckReport (voir core.typechecker).
"""

from enum import Enum
from typing import Any


class ErrorCode(str, Enum):
    """Codes d'erreur standardisés."""

    # Parse / resolve errors (1xx)
    LEXICAL_ERROR = "E101"
    SYNTAX_ERROR = "E102"
    UNKNOWN_PRIORITY = "E103"
    UNBOUND_VARIABLE = "E104"
    INVALID_PRIORITY_ORDER = "E105"

    # Type errors (2xx)
    TYPE_CHECK_FAILED = "E201"

    # Graph errors (3xx)
    UNKNOWN_THREAD = "E301"
    MISSING_ENDPOINT = "E302"
    CYCLIC_GRAPH = "E303"
    MISSING_WITNESS = "E304"
    ILL_FORMED_GRAPH = "E305"
    INVALID_SCHEDULE = "E306"
    UNKNOWN_VERTEX = "E307"

    # IO errors (4xx)
    FILE_NOT_FOUND = "E401"
    FILE_WRITE_FAILED = "E402"
    JSON_PARSE_FAILED = "E403"

    # Runtime errors (5xx)
    LIFTING_FAILED = "E501"
    INVARIANT_VIOLATED = "E502"
    THREAD_NOT_ENABLED = "E503"
    INVALID_POLICY = "E504"
    DYNAMIC_TYPE_FAILURE = "E505"


# Clés de `details` qui situent l'erreur, dans l'ordre d'affichage
LOCATION_KEYS = ("path", "line", "column", "thread", "vertex", "edge", "cycle")


def _render(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return "->".join(str(v) for v in value)
    return str(value)


class L4sError(Exception):
    """Exception de base pour toutes les erreurs du toolkit.

    `details` porte la position du problème (fichier, ligne, thread, sommet,
    arête, cycle: voir LOCATION_KEYS) et des données annexes, par exemple la
    violation de bonne formation qui rend une borne indéfinie.

    Attributes:
        code: Code d'erreur standardisé (ErrorCode enum)
        message: Message d'erreur lisible
        details: Position et données annexes
        step: Étape (parse, graph, machine, ...) où l'erreur s'est produite
    """

    def __init__(
        self,
        code: ErrorCode,
        message: str,
        details: dict[str, Any] | None = None,
        step: str | None = None,
    ):
        self.code = code
        self.message = message
        self.details = details or {}
        self.step = step
        super().__init__(message)

    @property
    def location(self) -> dict[str, Any]:
        return {k: self.details[k] for k in LOCATION_KEYS if k in self.details}

    def where(self) -> str:
        """`thread=a2 edge=3->5`, vide si l'erreur n'est pas située."""
        return " ".join(f"{k}={_render(v)}" for k, v in self.location.items())

    def __str__(self) -> str:
        head = f"{self.code.value} {self.step}: {self.message}" if self.step else f"{self.code.value}: {self.message}"
        where = self.where()
        return f"{head} ({where})" if where else head

    def report(self) -> dict[str, Any]:
        """Objet `error` de la sortie JSON de la CLI."""
        extra = {k: v for k, v in self.details.items() if k not in LOCATION_KEYS}
        out: dict[str, Any] = {"code": self.code.value, "step": self.step, "message": self.message}
        if self.location:
            out["at"] = self.location
        if extra:
            out.update(extra)
        return out


class ParseError(L4sError):
    """Erreur lexicale ou syntaxique, positionnée dans le texte source."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        code: ErrorCode = ErrorCode.SYNTAX_ERROR,
    ):
        self.line = line
        self.column = column
        details: dict[str, Any] = {}
        if line is not None:
            details["line"] = line
        if column is not None:
            details["column"] = column
        super().__init__(code=code, message=message, details=details, step="parse")

    def diagnostic(self, filename: str = "<input>") -> str:
        """Format `file:line:col: message` utilisé par la CLI."""
        return f"{filename}:{self.line or 0}:{self.column or 0}: {self.message}"


class ResolutionError(ParseError):
    """Nom de priorité inconnu ou variable non liée."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        code: ErrorCode = ErrorCode.UNBOUND_VARIABLE,
    ):
        super().__init__(message=message, line=line, column=column, code=code)


class GraphError(L4sError):
    """Erreur de construction ou d'analyse d'un graphe de coût."""

    def __init__(
        self,
        message: str,
        code: ErrorCode = ErrorCode.MISSING_ENDPOINT,
        **details: Any,
    ):
        super().__init__(
            code=code,
            message=message,
            details=details,
            step="graph",
        )


class MachineError(L4sError):
    """Erreur de la machine d'exécution (levée, invariants, politique)."""

    def __init__(
        self,
        message: str,
        code: ErrorCode,
        thread: str | None = None,
        cause: Exception | None = None,
    ):
        details: dict[str, Any] = {}
        if thread:
            details["thread"] = thread
        if cause:
            details["cause"] = str(cause)
        super().__init__(code=code, message=message, details=details, step="machine")


class LoadError(L4sError):
    """Erreur d'entrée/sortie (programme, dump de graphe, répertoire de sortie)."""

    def __init__(
        self,
        message: str,
        path: str | None = None,
        code: ErrorCode = ErrorCode.FILE_NOT_FOUND,
    ):
        details = {}
        if path:
            details["path"] = path
        super().__init__(code=code, message=message, details=details, step="io")


def _violation_details(violation: dict[str, Any] | None) -> dict[str, Any]:
    if not violation:
        return {}
    return {
        "thread": violation.get("thread"),
        "vertex": violation.get("vertex"),
        "violation": violation,
    }


class AnalysisError(L4sError):
    """Analyse impossible: graphe mal formé, schedule invalide."""

    def __init__(
        self,
        message: str,
        code: ErrorCode = ErrorCode.ILL_FORMED_GRAPH,
        violation: dict[str, Any] | None = None,
    ):
        super().__init__(
            code=code,
            message=message,
            details=_violation_details(violation),
            step="analysis",
        )
