"""Pytest fixtures for l4s toolkit tests."""

from pathlib import Path

import pytest

from core.cost_graph import CostGraph, build_graph
from core.lang import PriorityOrder
from core.parser import parse_file, parse_program
from core.syntax import SourceProgram
from orchestrator import L4sPipeline

CORPUS_DIR = Path(__file__).parent.parent / "corpus"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: campagnes longues (deselect with -m \"not slow\")")


@pytest.fixture
def two_levels() -> PriorityOrder:
    """Fixture: ordre Low < High."""
    return PriorityOrder(("Low", "High"))


@pytest.fixture
def corpus_dir() -> Path:
    """Fixture: Chemin vers corpus/."""
    return CORPUS_DIR


@pytest.fixture
def corpus():
    """Fixture: charge un programme du corpus par son nom (sans extension)."""

    def load(name: str) -> SourceProgram:
        return parse_file(CORPUS_DIR / f"{name}.l4s")

    return load


@pytest.fixture
def parse():
    """Fixture: parse un texte source."""
    return parse_program


@pytest.fixture
def pipeline() -> L4sPipeline:
    """Fixture: pipeline avec signal FIFO."""
    return L4sPipeline()


@pytest.fixture
def contention_graph() -> CostGraph:
    """Fixture: deux threads en compétition sur un verrou.

    root: 0
    t1:   1 lock1 → 2 s → 3 unlock1
    t2:   4 lock2 → 5 s → 6 unlock2
    create 0→t1, 0→t2; sync 3→5; weak 1→5
    """
    return build_graph(
        PriorityOrder(("P",)),
        [("root", "P", 1), ("t1", "P", 3), ("t2", "P", 3)],
        [("create", 0, "t1"), ("create", 0, "t2"), ("sync", 3, 5), ("weak", 1, 5)],
        labels={"t1": ["lock1", "s", "unlock1"], "t2": ["lock2", "s", "unlock2"]},
    )
