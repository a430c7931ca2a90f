from .errors import (
    L4sError, ParseError, ResolutionError, GraphError, MachineError, LoadError, AnalysisError, ErrorCode,
)
from .lang import PriorityOrder, PermissionLevel, PermissionMap, Signature
from .syntax import SourceProgram
from .parser import parse_program, parse_file
from .printer import pretty_print
from .typechecker import TypeErrorKind, TypeDiagnostic, CheckReport, check_program
from .cost_graph import EdgeKind, Ancestry, CostGraph, build_graph
from .dag_analysis import WfKind, WfViolation, is_well_formed, strengthen, competitor_work, a_span
from .interpreter import Interpreter, RunResult, ExploreResult, run, explore
from .scheduler import Schedule, prompt_schedule, response_time, bound, check_bound
from .schemas import SCHEMA_VERSION, GraphDump, ScheduleReport, CheckReportModel, RunSummary, CliConfig
from .renderer import TemplateRenderer, get_renderer, to_dot

__all__ = [
    # Errors
    "L4sError", "ParseError", "ResolutionError", "GraphError", "MachineError", "LoadError",
    "AnalysisError", "ErrorCode",
    # Language
    "PriorityOrder", "PermissionLevel", "PermissionMap", "Signature", "SourceProgram",
    "parse_program", "parse_file", "pretty_print",
    # Typing
    "TypeErrorKind", "TypeDiagnostic", "CheckReport", "check_program",
    # Graphs
    "EdgeKind", "Ancestry", "CostGraph", "build_graph",
    "WfKind", "WfViolation", "is_well_formed", "strengthen", "competitor_work", "a_span",
    # Execution
    "Interpreter", "RunResult", "ExploreResult", "run", "explore",
    "Schedule", "prompt_schedule", "response_time", "bound", "check_bound",
    # Schemas
    "SCHEMA_VERSION", "GraphDump", "ScheduleReport", "CheckReportModel", "RunSummary", "CliConfig",
    # Renderer
    "TemplateRenderer", "get_renderer", "to_dot",
]
