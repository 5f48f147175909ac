"""Fixtures compartidos por las pruebas del kit OLR."""
from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from graph_core import Graph, random_connected_graph, random_tree

HERE = Path(__file__).parent

# Perfil común de hypothesis: sin plazo por ejemplo.
settings.register_profile("olr", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("olr")

# A=0, B=1, C=2, D=3, E=4, F=5
BRANCHY_EDGES = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (4, 5)]
BRANCHY_SYMBOLS = ["A", "B", "C", "D", "E", "F"]


@pytest.fixture
def branchy() -> Graph:
    return Graph.from_edges(6, BRANCHY_EDGES)


@pytest.fixture
def path3() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def square() -> Graph:
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


@pytest.fixture
def star3() -> Graph:
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def two_triangles() -> Graph:
    # Triángulo S = {0,1,2} unido al triángulo T = {3,4,5} por (0,3) y (1,4).
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4)])


@pytest.fixture
def dfs_witness() -> tuple[Graph, frozenset[int]]:
    data = json.loads((HERE / "dfs_witness.json").read_text(encoding="utf-8"))
    return Graph.from_edges(data["node_count"], data["edges"]), frozenset(data["nodes"])


@st.composite
def connected_graphs(draw, min_nodes: int = 1, max_nodes: int = 12) -> Graph:
    n = draw(st.integers(min_nodes, max_nodes))
    max_extra = n * (n - 1) // 2 - (n - 1)
    extra = draw(st.integers(0, min(max_extra, 2 * n)))
    seed = draw(st.integers(0, 2**31))
    return random_connected_graph(n, extra, seed)


@st.composite
def trees(draw, min_nodes: int = 1, max_nodes: int = 15) -> Graph:
    n = draw(st.integers(min_nodes, max_nodes))
    return random_tree(n, draw(st.integers(0, 2**31)))
