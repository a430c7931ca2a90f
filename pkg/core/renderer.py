"""Moteur de rendu Jinja2 pour les sorties texte (graphes DOT, traces).

Les analyses ne produisent jamais de texte formaté: elles rendent des données
qui sont ensuite injectées dans des templates déterministes.

RÈGLES DE RENDU
===============

1. GRAPHE DOT
-------------
    - un cluster par thread non vide, libellé "nom <priorité>"
    - sommets libellés "id:opération" (ou "id" sans étiquette)
    - arêtes fortes en trait plein, colorées par genre:

        thread → noir
        create → bleu
        sync   → vert
        strong → noir gras (ajoutée par renforcement)
        weak   → pointillés gris

2. DÉTERMINISME
---------------
    - threads dans l'ordre de création, sommets dans l'ordre du thread
    - arêtes triées par (source, cible, genre)
    - même graphe → même texte, octet pour octet
"""

from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, TemplateNotFound

from core.cost_graph import CostGraph, EdgeKind
from core.errors import ErrorCode, LoadError
from core.logging_config import get_logger

logger = get_logger(__name__)

# ==============================================================================
# CONSTANTES
# ==============================================================================

TEMPLATES_DIR = Path(__file__).parent.parent / "templates"

GRAPH_TEMPLATE = "graph.dot.j2"
TRACE_TEMPLATE = "trace.txt.j2"

EDGE_STYLES: dict[str, str] = {
    EdgeKind.THREAD.value: "style=solid",
    EdgeKind.CREATE.value: "style=solid, color=blue",
    EdgeKind.SYNC.value: "style=solid, color=darkgreen",
    EdgeKind.STRONG.value: "style=bold",
    EdgeKind.WEAK.value: "style=dashed, color=gray40",
}


def _dot_escape(text: Any) -> str:
    return str(text).replace("\\", "\\\\").replace('"', '\\"')


# ==============================================================================
# RENDERER CLASS
# ==============================================================================

class TemplateRenderer:
    """Rendu des graphes et des traces.

    Usage:
        renderer = TemplateRenderer()
        dot = renderer.render_dot(graph)
    """

    def __init__(self, templates_dir: Path | None = None):
        self.templates_dir = templates_dir or TEMPLATES_DIR
        self.env = Environment(
            loader=FileSystemLoader(self.templates_dir),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.env.filters["dot_escape"] = _dot_escape
        logger.debug(f"TemplateRenderer initialized with templates_dir={self.templates_dir}")

    def _template(self, name: str):
        try:
            return self.env.get_template(name)
        except TemplateNotFound:
            raise LoadError(
                message=f"Template '{name}' not found",
                path=str(self.templates_dir / name),
                code=ErrorCode.FILE_NOT_FOUND,
            )

    def render_dot(self, graph: CostGraph) -> str:
        """Texte DOT du graphe."""
        threads = []
        for info in graph.threads.values():
            if not info.vertices:
                continue
            vertices = []
            for u in info.vertices:
                label = graph.labels.get(u)
                vertices.append({"id": u, "label": f"{u}:{label}" if label else str(u)})
            threads.append({"name": info.name, "prio": info.prio, "vertices": vertices})

        edges = [{"kind": kind.value, "src": a, "dst": b} for kind, a, b in graph.edges()]
        logger.debug(f"Rendering DOT: {len(threads)} clusters, {len(edges)} edges")
        return self._template(GRAPH_TEMPLATE).render(
            threads=threads,
            edges=edges,
            edge_styles=EDGE_STYLES,
        )

    def render_trace(self, trace: list[Any], program: str = "", policy: str = "", status: str = "") -> str:
        """Une ligne `step# thread rule` par application de règle."""
        return self._template(TRACE_TEMPLATE).render(
            trace=trace,
            program=program,
            policy=policy,
            status=status,
        )


# ==============================================================================
# SINGLETON ET FONCTIONS HELPER
# ==============================================================================

_renderer: TemplateRenderer | None = None


def get_renderer() -> TemplateRenderer:
    """Retourne l'instance singleton du renderer."""
    global _renderer
    if _renderer is None:
        _renderer = TemplateRenderer()
    return _renderer


def to_dot(graph: CostGraph) -> str:
    """Raccourci: voir TemplateRenderer.render_dot()."""
    return get_renderer().render_dot(graph)
