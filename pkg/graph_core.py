"""
Grafos no dirigidos simples: estructura, puentes, cortes mínimos y Wiener
=========================================================================
Todo lo que el resto del kit necesita saber de un grafo vive aquí:

  - `Graph` inmutable con listas de adyacencia ordenadas y etiquetas opcionales.
  - Puentes (Tarjan iterativo, sin recursión: un camino de 10⁴ nodos no
    revienta la pila) y su versión de fuerza bruta para las pruebas.
  - Clasificación por conectividad de aristas y enumeración de cortes
    mínimos de tamaño 1 o 2.
  - Índice de Wiener (BFS desde cada nodo).
  - Generadores aleatorios: árboles por secuencia de Prüfer y grafos
    conexos con aristas extra.
  - Archivo de grafos, una línea por grafo:

        g <id> <n> <i-j>,<i-j>,...  [L <etiqueta>,<etiqueta>,...]

    con aristas canónicas (i < j). Un grafo sin aristas lleva `-`.
"""
from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx
import numpy as np

logger = logging.getLogger("graph_core")

Edge = tuple[int, int]


class GraphError(ValueError):
    """Grafo mal formado o petición imposible sobre él."""


class DisconnectedGraph(GraphError):
    pass


class GraphFormatError(GraphError):
    """Línea o archivo de grafos que no respeta el formato."""


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def make_rng(seed) -> np.random.Generator:
    """Acepta semilla entera o un `Generator` ya creado (se reutiliza tal cual)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


# ═══════════════════════════════════════════════════════════════════════════
# GRAFO
# ═══════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Graph:
    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    node_labels: Optional[tuple[str, ...]] = None
    edge_labels: Optional[Mapping[Edge, str]] = None
    _neighbor_sets: tuple[frozenset, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 0:
            raise GraphError("node_count must be >= 0")
        if len(self.adjacency) != self.node_count:
            raise GraphError("adjacency length does not match node_count")
        sets = []
        for u, nbrs in enumerate(self.adjacency):
            s = frozenset(nbrs)
            if len(s) != len(nbrs):
                raise GraphError(f"parallel edge at node {u}")
            if u in s:
                raise GraphError(f"self-loop at node {u}")
            if any(not (0 <= w < self.node_count) for w in nbrs):
                raise GraphError(f"neighbor index out of range at node {u}")
            if list(nbrs) != sorted(nbrs):
                raise GraphError(f"adjacency of node {u} is not sorted")
            sets.append(s)
        for u, s in enumerate(sets):
            for w in s:
                if u not in sets[w]:
                    raise GraphError(f"asymmetric adjacency between {u} and {w}")
        if self.node_labels is not None and len(self.node_labels) != self.node_count:
            raise GraphError("node_labels length does not match node_count")
        if self.edge_labels is not None:
            for e in self.edge_labels:
                if e != canonical_edge(*e) or e[1] not in sets[e[0]]:
                    raise GraphError(f"edge label on unknown edge {e}")
        object.__setattr__(self, "_neighbor_sets", tuple(sets))

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]],
                   node_labels: Optional[Sequence[str]] = None,
                   edge_labels: Optional[Mapping[Edge, str]] = None) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(node_count)]
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if v in adj[u]:
                raise GraphError(f"parallel edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        return cls(
            node_count=node_count,
            adjacency=tuple(tuple(sorted(s)) for s in adj),
            node_labels=tuple(node_labels) if node_labels is not None else None,
            edge_labels=dict(edge_labels) if edge_labels else None,
        )

    # ── consultas ──

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._neighbor_sets[u]

    def edges(self) -> list[Edge]:
        return [(u, w) for u, nbrs in enumerate(self.adjacency) for w in nbrs if u < w]

    @property
    def edge_count(self) -> int:
        return sum(len(n) for n in self.adjacency) // 2

    def label(self, v: int) -> Optional[str]:
        return self.node_labels[v] if self.node_labels is not None else None

    def is_cycle(self) -> bool:
        return (self.node_count >= 3 and is_connected(self)
                and all(len(n) == 2 for n in self.adjacency))

    def is_tree(self) -> bool:
        return is_connected(self) and self.edge_count == max(self.node_count - 1, 0)

    # ── derivados ──

    def induced_subgraph(self, nodes: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """Subgrafo inducido con índices densos; devuelve también nodo_sub → nodo_original."""
        originals = tuple(sorted(set(nodes)))
        for v in originals:
            if not (0 <= v < self.node_count):
                raise GraphError(f"node {v} out of range")
        index = {v: i for i, v in enumerate(originals)}
        edges = [(index[u], index[w]) for u in originals for w in self.adjacency[u]
                 if w in index and u < w]
        labels = [self.node_labels[v] for v in originals] if self.node_labels is not None else None
        elabels = None
        if self.edge_labels:
            elabels = {canonical_edge(index[u], index[w]): lab for (u, w), lab in self.edge_labels.items()
                       if u in index and w in index}
        return Graph.from_edges(len(originals), edges, labels, elabels), originals

    def without_edges(self, removed: Iterable[Edge]) -> "Graph":
        gone = {canonical_edge(*e) for e in removed}
        return Graph.from_edges(self.node_count, [e for e in self.edges() if e not in gone],
                                self.node_labels)

    def with_labels(self, labels: Optional[Sequence[str]]) -> "Graph":
        return Graph.from_edges(self.node_count, self.edges(), labels, self.edge_labels)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges())
        if self.node_labels is not None:
            nx.set_node_attributes(g, dict(enumerate(self.node_labels)), "label")
        return g

    def key(self) -> tuple:
        """Identidad etiquetada (n, aristas, etiquetas) para detectar duplicados."""
        return (self.node_count, tuple(self.edges()), self.node_labels)


def components(g: Graph) -> list[list[int]]:
    seen = [False] * g.node_count
    out = []
    for s in range(g.node_count):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [s], deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        out.append(sorted(comp))
    return out


def is_connected(g: Graph) -> bool:
    return g.node_count <= 1 or len(components(g)) == 1


def require_connected(g: Graph) -> None:
    if not is_connected(g):
        raise DisconnectedGraph(f"graph with {g.node_count} nodes is not connected")


# ═══════════════════════════════════════════════════════════════════════════
# PUENTES Y CORTES
# ═══════════════════════════════════════════════════════════════════════════

def find_bridges(g: Graph) -> list[Edge]:
    """Puentes por low-link de Tarjan, iterativo. Salida canónica y ordenada."""
    require_connected(g)
    n = g.node_count
    disc = [-1] * n
    low = [0] * n
    bridges: list[Edge] = []
    timer = 0
    for start in range(n):
        if disc[start] != -1:
            continue
        disc[start] = low[start] = timer
        timer += 1
        # (nodo, padre, índice del siguiente vecino)
        stack = [(start, -1, 0)]
        while stack:
            u, parent, i = stack[-1]
            nbrs = g.adjacency[u]
            if i < len(nbrs):
                stack[-1] = (u, parent, i + 1)
                w = nbrs[i]
                if w == parent:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, u, 0))
                else:
                    low[u] = min(low[u], disc[w])
            else:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.append(canonical_edge(parent, u))
    return sorted(bridges)


def find_bridges_bruteforce(g: Graph) -> list[Edge]:
    """Oráculo: una arista es puente si quitarla desconecta el grafo."""
    require_connected(g)
    return [e for e in g.edges() if not is_connected(g.without_edges([e]))]


class EdgeConnectivity(str, Enum):
    ONE = "one_edge_connected"
    TWO = "two_edge_connected"
    HIGHER = "higher"


@dataclass(frozen=True)
class CutResult:
    crossing_edges: tuple[Edge, ...]
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    def side_of(self, v: int) -> tuple[int, ...]:
        return self.side_a if v in self.side_a else self.side_b

    def other_side(self, v: int) -> tuple[int, ...]:
        return self.side_b if v in self.side_a else self.side_a


def _sides_after_removal(g: Graph, removed: Sequence[Edge]) -> Optional[tuple[tuple[int, ...], tuple[int, ...]]]:
    comps = components(g.without_edges(removed))
    if len(comps) != 2:
        return None
    a, b = sorted(comps, key=lambda c: c[0])
    return tuple(a), tuple(b)


def _two_edge_cuts(g: Graph) -> list[CutResult]:
    out = []
    for e1, e2 in combinations(g.edges(), 2):
        sides = _sides_after_removal(g, [e1, e2])
        if sides is not None:
            out.append(CutResult((e1, e2), *sides))
    return out


def edge_connectivity_class(g: Graph) -> EdgeConnectivity:
    require_connected(g)
    if g.node_count < 2:
        raise GraphError("edge connectivity needs at least 2 nodes")
    if find_bridges(g):
        return EdgeConnectivity.ONE
    if _two_edge_cuts(g):
        return EdgeConnectivity.TWO
    return EdgeConnectivity.HIGHER


def enumerate_min_cuts(g: Graph, max_size: int) -> list[CutResult]:
    """Cortes de tamaño mínimo (1, o 2 si no hay puentes) hasta `max_size`."""
    if max_size not in (1, 2):
        raise GraphError("max_size must be 1 or 2")
    require_connected(g)
    if g.node_count < 2:
        return []
    bridges = find_bridges(g)
    if bridges:
        return [CutResult((e,), *_sides_after_removal(g, [e])) for e in bridges]
    if max_size == 1:
        return []
    return _two_edge_cuts(g)


# ═══════════════════════════════════════════════════════════════════════════
# WIENER
# ═══════════════════════════════════════════════════════════════════════════

def wiener_index(g: Graph) -> int:
    require_connected(g)
    total = 0
    n = g.node_count
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        total += sum(dist)
    return total // 2


# ═══════════════════════════════════════════════════════════════════════════
# GENERADORES
# ═══════════════════════════════════════════════════════════════════════════

def _random_labels(n: int, rng: np.random.Generator, alphabet: Optional[str]) -> Optional[list[str]]:
    if not alphabet:
        return None
    symbols = list(alphabet)
    return [symbols[i] for i in rng.integers(0, len(symbols), size=n)]


def _prufer_tree_edges(n: int, rng: np.random.Generator) -> list[Edge]:
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    sequence = [int(x) for x in rng.integers(0, n, size=n - 2)]
    tree = nx.from_prufer_sequence(sequence)
    return sorted(canonical_edge(u, v) for u, v in tree.edges())


def random_tree(n: int, rng_seed, label_alphabet: Optional[str] = None) -> Graph:
    """Árbol etiquetado uniforme (Prüfer) sobre `n` nodos."""
    if n < 1:
        raise GraphError("random_tree needs n >= 1")
    rng = make_rng(rng_seed)
    edges = _prufer_tree_edges(n, rng)
    return Graph.from_edges(n, edges, _random_labels(n, rng, label_alphabet))


def random_connected_graph(n: int, extra_edges: int, rng_seed,
                           label_alphabet: Optional[str] = None) -> Graph:
    """Árbol de Prüfer más `extra_edges` aristas distintas elegidas sin reemplazo."""
    if n < 1:
        raise GraphError("random_connected_graph needs n >= 1")
    max_extra = n * (n - 1) // 2 - (n - 1)
    if not (0 <= extra_edges <= max_extra):
        raise GraphError(f"extra_edges={extra_edges} infeasible for n={n} (max {max_extra})")
    rng = make_rng(rng_seed)
    tree = _prufer_tree_edges(n, rng)
    present = set(tree)
    candidates = [e for e in combinations(range(n), 2) if e not in present]
    chosen = rng.choice(len(candidates), size=extra_edges, replace=False) if extra_edges else []
    edges = tree + [candidates[int(i)] for i in chosen]
    return Graph.from_edges(n, edges, _random_labels(n, rng, label_alphabet))


# ═══════════════════════════════════════════════════════════════════════════
# ARCHIVO DE GRAFOS
# ═══════════════════════════════════════════════════════════════════════════

_ID_RE = re.compile(r"^[A-Za-z0-9_.:-]+$")
_EDGE_RE = re.compile(r"^(\d+)-(\d+)$")


def _check_label(label: str) -> None:
    if not label or any(ch in "(),|" or ch.isspace() for ch in label):
        raise GraphFormatError(f"invalid node label {label!r}")


def parse_graph_line(line: str, line_no: int = 0) -> tuple[str, Graph]:
    where = f"line {line_no}: " if line_no else ""
    parts = line.split()
    if len(parts) < 3 or parts[0] != "g":
        raise GraphFormatError(f"{where}expected 'g <id> <n> <edges>'")
    graph_id = parts[1]
    if not _ID_RE.match(graph_id):
        raise GraphFormatError(f"{where}invalid graph id {graph_id!r}")
    try:
        n = int(parts[2])
    except ValueError:
        raise GraphFormatError(f"{where}node count {parts[2]!r} is not an integer") from None
    if n < 1:
        raise GraphFormatError(f"{where}node count must be >= 1")
    rest = parts[3:]
    edges: list[Edge] = []
    if rest and rest[0] != "L":
        token = rest.pop(0)
        if token != "-":
            for chunk in token.split(","):
                m = _EDGE_RE.match(chunk)
                if not m:
                    raise GraphFormatError(f"{where}malformed edge {chunk!r}")
                u, v = int(m.group(1)), int(m.group(2))
                if u >= v:
                    raise GraphFormatError(f"{where}edge {chunk!r} is not canonical (need i < j)")
                edges.append((u, v))
    labels = None
    if rest:
        if rest[0] != "L" or len(rest) != 2:
            raise GraphFormatError(f"{where}trailing tokens {' '.join(rest)!r}")
        labels = rest[1].split(",")
        for lab in labels:
            _check_label(lab)
    try:
        g = Graph.from_edges(n, edges, labels)
    except GraphFormatError:
        raise
    except GraphError as e:
        raise GraphFormatError(f"{where}{e}") from None
    return graph_id, g


def format_graph_line(graph_id: str, g: Graph) -> str:
    edges = ",".join(f"{u}-{v}" for u, v in g.edges()) or "-"
    line = f"g {graph_id} {g.node_count} {edges}"
    if g.node_labels is not None:
        for lab in g.node_labels:
            _check_label(lab)
        line += " L " + ",".join(g.node_labels)
    return line


def read_graph_file(path: str | Path) -> list[tuple[str, Graph]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise GraphFormatError(f"cannot read graph file {path}: {e}") from e
    out: list[tuple[str, Graph]] = []
    seen: set[str] = set()
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        graph_id, g = parse_graph_line(line, num)
        if graph_id in seen:
            raise GraphFormatError(f"line {num}: duplicate graph id {graph_id!r}")
        seen.add(graph_id)
        out.append((graph_id, g))
    logger.info(f"{len(out)} grafos leídos de {path}")
    return out


def write_graph_file(path: str | Path, items: Iterable[tuple[str, Graph]]) -> int:
    lines = [format_graph_line(gid, g) for gid, g in items]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def connectivity_stats(graphs: Iterable[Graph]) -> dict[str, float]:
    """Fracción de grafos por clase de conectividad de aristas (ignora n < 2)."""
    counts = {c.value: 0 for c in EdgeConnectivity}
    total = 0
    for g in graphs:
        if g.node_count < 2:
            continue
        counts[edge_connectivity_class(g).value] += 1
        total += 1
    return {k: (v / total if total else 0.0) for k, v in counts.items()}
