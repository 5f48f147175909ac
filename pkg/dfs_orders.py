"""
Recorridos DFS: validez, muestreo, pares con el mismo nodo final y oráculos
===========================================================================
Una ordenación DFS de un grafo conexo es una permutación de sus nodos que
se puede obtener como pre-orden de alguna búsqueda en profundidad. Este
módulo decide esa propiedad en tiempo lineal, muestrea ordenaciones y,
sobre todo, construye CONJUNTOS DE TRAYECTORIAS: varias ordenaciones
distintas del mismo grafo que terminan en el mismo nodo. Son la materia
prima de la regularización por orden (OLR).

CÓMO SE CONSTRUYEN LOS PARES
----------------------------
  - Puente (u, v) con lado G1 ∋ u y G2 ∋ v. Dos pegados:
      * `suffix_root`:  v, <ordenación de G1 desde u>, <resto de una ordenación de G2 desde v>
      * `prefix_root`:  <ordenación de G1 desde u>, <ordenación de G2 desde v>
    Lo que varía es G1; el sufijo se fija, así que el final es común.
    G1 tiene que ramificar desde u ("no branching on cut side"); con
    `suffix_root`, G2 necesita al menos 2 nodos ("degenerate suffix side").
  - 2-corte {(u, v), (w, z)} con u, w en S: ordenaciones de S desde u en las
    que w queda abierto hasta agotar S (todo lo que se visita después de w
    cuelga de w). Así la DFS salta w → z y sigue con una ordenación fija de T.
  - Ciclo simple: las dos ordenaciones que arrancan en los vecinos de v y
    se alejan de él; las dos terminan en v.

ORÁCULOS
--------
Enumeración exhaustiva acotada por ORACLE_MAX_NODES. Sirven para probar lo
anterior y para medir la invariancia estructural de un modelo, nunca para
generar datos de entrenamiento.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from config import END_CONSTRAINED_ATTEMPTS, ORACLE_MAX_NODES
from graph_core import (
    CutResult,
    Edge,
    Graph,
    canonical_edge,
    enumerate_min_cuts,
    is_connected,
    make_rng,
    require_connected,
)

logger = logging.getLogger("dfs_orders")


class OrderingError(ValueError):
    pass


class OracleBoundExceeded(OrderingError):
    pass


class NoHeuristicPair(OrderingError):
    """La construcción de pares con final común no aplica a este grafo o corte."""

    def __init__(self, message: str, cut: Optional[CutResult] = None):
        super().__init__(message)
        self.cut = cut


# ═══════════════════════════════════════════════════════════════════════════
# TIPOS
# ═══════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Ordering:
    visit_sequence: tuple[int, ...]
    parent_of: Mapping[int, int] = field(compare=False)

    @property
    def root(self) -> int:
        return self.visit_sequence[0]

    @property
    def last(self) -> int:
        return self.visit_sequence[-1]

    def __len__(self) -> int:
        return len(self.visit_sequence)

    def children(self) -> dict[int, list[int]]:
        """Hijos de cada nodo en orden de visita."""
        out: dict[int, list[int]] = {v: [] for v in self.visit_sequence}
        for v in self.visit_sequence[1:]:
            out[self.parent_of[v]].append(v)
        return out

    def tree_edges(self) -> list[Edge]:
        return sorted(canonical_edge(v, p) for v, p in self.parent_of.items())


@dataclass(frozen=True)
class TrajectoryPair:
    first: Ordering
    second: Ordering

    def __post_init__(self):
        if self.first.visit_sequence == self.second.visit_sequence:
            raise OrderingError("trajectory pair needs two distinct orderings")
        if self.first.last != self.second.last:
            raise OrderingError("trajectory pair orderings end at different vertices")

    @property
    def common_end(self) -> int:
        return self.first.last


@dataclass(frozen=True)
class InducedSample:
    """Subgrafo inducido por el prefijo de una DFS, con su ordenación y el mapa a nodos originales."""
    subgraph: Graph
    ordering: Ordering
    original_nodes: tuple[int, ...]


# ═══════════════════════════════════════════════════════════════════════════
# VALIDEZ
# ═══════════════════════════════════════════════════════════════════════════

def _replay(g: Graph, seq: Sequence[int]) -> Optional[dict[int, int]]:
    """Simula la DFS con pila explícita; devuelve padres o None si la secuencia no es DFS.

    Cada nodo guarda un puntero a su primer vecino no visitado; el puntero
    solo avanza, así que el costo total es O(n + m).
    """
    n = g.node_count
    if len(seq) != n:
        return None
    if n == 0:
        return {}
    visited = [False] * n
    for x in seq:
        if not isinstance(x, (int, np.integer)) or not (0 <= x < n) or visited[x]:
            return None
        visited[x] = True
    visited = [False] * n
    ptr = [0] * n
    parent: dict[int, int] = {}
    first = int(seq[0])
    visited[first] = True
    stack = [first]
    for x in seq[1:]:
        x = int(x)
        while stack:
            top = stack[-1]
            nbrs = g.adjacency[top]
            i = ptr[top]
            while i < len(nbrs) and visited[nbrs[i]]:
                i += 1
            ptr[top] = i
            if i < len(nbrs):
                break
            stack.pop()
        if not stack:
            return None
        top = stack[-1]
        if not g.has_edge(top, x):
            return None
        visited[x] = True
        parent[x] = top
        stack.append(x)
    return parent


def is_valid_ordering(g: Graph, seq: Sequence[int]) -> bool:
    return _replay(g, seq) is not None


def ordering_from_sequence(g: Graph, seq: Sequence[int]) -> Ordering:
    parent = _replay(g, seq)
    if parent is None:
        raise OrderingError(f"not a valid DFS ordering: {tuple(seq)}")
    return Ordering(tuple(int(x) for x in seq), parent)


# ═══════════════════════════════════════════════════════════════════════════
# MUESTREO
# ═══════════════════════════════════════════════════════════════════════════

def _run(g: Graph, root: int, rng: Optional[np.random.Generator],
         prefix: Sequence[int] = ()) -> tuple[list[int], list[tuple[int, ...]]]:
    """Una DFS desde `root`. Sin rng toma siempre el vecino menor.

    `prefix` fuerza las primeras elecciones. Devuelve la secuencia y los
    candidatos que hubo en cada paso (el paso 0 es la raíz).
    """
    n = g.node_count
    visited = [False] * n
    visited[root] = True
    seq = [root]
    choices: list[tuple[int, ...]] = [(root,)]
    stack = [root]
    while len(seq) < n:
        cands: tuple[int, ...] = ()
        while stack:
            cands = tuple(w for w in g.adjacency[stack[-1]] if not visited[w])
            if cands:
                break
            stack.pop()
        if not stack:
            raise OrderingError("DFS ran out of reachable nodes; graph is disconnected")
        k = len(seq)
        if k < len(prefix):
            nxt = prefix[k]
            if nxt not in cands:
                raise OrderingError(f"forced step {k} to {nxt} is not a DFS move")
        elif rng is None or len(cands) == 1:
            nxt = cands[0]
        else:
            nxt = cands[int(rng.integers(len(cands)))]
        visited[nxt] = True
        seq.append(nxt)
        choices.append(cands)
        stack.append(nxt)
    return seq, choices


def _check_root(g: Graph, root: int) -> None:
    if not (0 <= root < g.node_count):
        raise OrderingError(f"root {root} out of range for {g.node_count} nodes")


def sample_ordering(g: Graph, root: Optional[int] = None, rng_seed=0) -> Ordering:
    """DFS estocástica: en cada paso elige uniformemente entre los vecinos no visitados."""
    require_connected(g)
    if g.node_count == 0:
        raise OrderingError("cannot order an empty graph")
    rng = make_rng(rng_seed)
    if root is None:
        root = int(rng.integers(g.node_count))
    _check_root(g, root)
    seq, _ = _run(g, root, rng)
    return ordering_from_sequence(g, seq)


def canonical_ordering(g: Graph, root: int = 0) -> Ordering:
    """DFS determinista: siempre el vecino no visitado de menor índice."""
    require_connected(g)
    _check_root(g, root)
    seq, _ = _run(g, root, None)
    return ordering_from_sequence(g, seq)


def has_branching(g: Graph, root: int) -> bool:
    """True si hay al menos dos ordenaciones distintas desde `root`."""
    _, choices = _run(g, root, None)
    return any(len(c) > 1 for c in choices)


def _distinct_from_root(g: Graph, root: int, rng: np.random.Generator,
                        count: int, attempts: int) -> list[tuple[int, ...]]:
    """Hasta `count` ordenaciones distintas desde `root`; [] si no hay ramificación.

    Las dos primeras salen garantizadas: se fuerza una alternativa en un
    paso con varios candidatos y el resto se completa al azar.
    """
    seq, choices = _run(g, root, rng)
    steps = [i for i, c in enumerate(choices) if len(c) > 1]
    if not steps:
        return []
    i = steps[int(rng.integers(len(steps)))]
    alternatives = [c for c in choices[i] if c != seq[i]]
    alt = alternatives[int(rng.integers(len(alternatives)))]
    second, _ = _run(g, root, rng, prefix=seq[:i] + [alt])
    found = [tuple(seq), tuple(second)]
    seen = set(found)
    for _ in range(attempts):
        if len(found) >= count:
            break
        extra, _ = _run(g, root, rng)
        if tuple(extra) not in seen:
            seen.add(tuple(extra))
            found.append(tuple(extra))
    return found[:max(count, 2)]


def _rooted_ending(g: Graph, root: int, rng: np.random.Generator,
                   end: Optional[int], attempts: int) -> Optional[list[int]]:
    """Una ordenación desde `root`; si `end` se da, que termine ahí (rechazo)."""
    if end is None:
        return _run(g, root, rng)[0]
    for _ in range(max(attempts, 1)):
        seq, choices = _run(g, root, rng)
        if seq[-1] == end:
            return seq
        if all(len(c) == 1 for c in choices):
            return None
    return None


def _keeps_open(g: Graph, seq: Sequence[int], w: int) -> bool:
    """True si todo lo visitado después de `w` es descendiente de `w` en el árbol DFS."""
    parent = _replay(g, seq)
    pos = list(seq).index(w)
    below = {w}
    for x in seq[pos + 1:]:
        if parent[x] not in below:
            return False
        below.add(x)
    return True


# ═══════════════════════════════════════════════════════════════════════════
# CONSTRUCCIONES CON FINAL COMÚN
# ═══════════════════════════════════════════════════════════════════════════

_GLUES = ("suffix_root", "prefix_root")


def _bridge_orderings(g: Graph, cut: CutResult, u: int, glue: str, rng: np.random.Generator,
                      count: int, end_vertex: Optional[int], attempts: int) -> list[tuple[int, ...]]:
    if glue not in _GLUES:
        raise OrderingError(f"unknown glue {glue!r}")
    a, b = cut.crossing_edges[0]
    v = b if u == a else a
    g2 = cut.side_of(v)
    if glue == "suffix_root" and len(g2) == 1:
        raise NoHeuristicPair("degenerate suffix side", cut)
    if end_vertex is not None and end_vertex not in g2:
        raise NoHeuristicPair("end vertex is not on the suffix side", cut)

    sub1, orig1 = g.induced_subgraph(cut.side_of(u))
    prefixes = _distinct_from_root(sub1, orig1.index(u), rng, count, attempts)
    if len(prefixes) < 2:
        raise NoHeuristicPair("no branching on cut side", cut)

    sub2, orig2 = g.induced_subgraph(g2)
    local_end = orig2.index(end_vertex) if end_vertex is not None else None
    tail = _rooted_ending(sub2, orig2.index(v), rng, local_end, attempts)
    if tail is None:
        raise NoHeuristicPair("no end-constrained traversal found", cut)
    suffix = [orig2[i] for i in tail]

    out = []
    for p in prefixes:
        head = [orig1[i] for i in p]
        seq = [v] + head + suffix[1:] if glue == "suffix_root" else head + suffix
        out.append(ordering_from_sequence(g, seq).visit_sequence)
    return out


def common_end_pair_bridge(g: Graph, cut: CutResult, rng_seed=0, *,
                           varying_endpoint: Optional[int] = None,
                           glue: str = "suffix_root",
                           end_vertex: Optional[int] = None,
                           attempts: Optional[int] = None) -> TrajectoryPair:
    """Par con final común a partir de un puente.

    Por omisión varía el lado `side_a` del corte (el del nodo de menor índice).
    """
    if len(cut.crossing_edges) != 1:
        raise OrderingError("bridge construction needs a single-edge cut")
    a, b = cut.crossing_edges[0]
    u = varying_endpoint if varying_endpoint is not None else (a if a in cut.side_a else b)
    if u not in (a, b):
        raise OrderingError(f"node {u} is not an endpoint of bridge {(a, b)}")
    seqs = _bridge_orderings(g, cut, u, glue, make_rng(rng_seed), 2, end_vertex,
                             attempts or END_CONSTRAINED_ATTEMPTS)
    return TrajectoryPair(ordering_from_sequence(g, seqs[0]), ordering_from_sequence(g, seqs[1]))


@dataclass(frozen=True)
class _TwoCutPlan:
    cut: CutResult
    s_side: tuple[int, ...]
    t_side: tuple[int, ...]
    u: int
    w: int
    z: int


def _two_cut_plans(g: Graph, cuts: list[CutResult], rng: np.random.Generator,
                   end_vertex: Optional[int]) -> list[_TwoCutPlan]:
    plans = []
    for cut in cuts:
        e1, e2 = cut.crossing_edges
        for s_side, t_side in ((cut.side_a, cut.side_b), (cut.side_b, cut.side_a)):
            if len(s_side) < 2 or (end_vertex is not None and end_vertex not in t_side):
                continue
            for enter, leave in ((e1, e2), (e2, e1)):
                u = enter[0] if enter[0] in s_side else enter[1]
                w = leave[0] if leave[0] in s_side else leave[1]
                z = leave[1] if w == leave[0] else leave[0]
                plans.append(_TwoCutPlan(cut, s_side, t_side, u, w, z))
    order = [plans[int(i)] for i in rng.permutation(len(plans))]

    def has_cycle(side: tuple[int, ...]) -> bool:
        sub, _ = g.induced_subgraph(side)
        return sub.edge_count >= sub.node_count

    # Primero los lados con ciclo: ahí hay al menos dos recorridos válidos.
    return sorted(order, key=lambda p: not has_cycle(p.s_side))


def _two_cut_orderings(g: Graph, rng: np.random.Generator, count: int,
                       end_vertex: Optional[int], attempts: int) -> list[tuple[int, ...]]:
    cuts = [c for c in enumerate_min_cuts(g, 2) if len(c.crossing_edges) == 2]
    last_cut = None
    for plan in _two_cut_plans(g, cuts, rng, end_vertex):
        last_cut = plan.cut
        sub_s, orig_s = g.induced_subgraph(plan.s_side)
        lu, lw = orig_s.index(plan.u), orig_s.index(plan.w)
        found: list[tuple[int, ...]] = []
        for _ in range(attempts):
            seq, _ = _run(sub_s, lu, rng)
            if tuple(seq) not in found and _keeps_open(sub_s, seq, lw):
                found.append(tuple(seq))
                if len(found) >= max(count, 2):
                    break
        if len(found) < 2:
            logger.debug(f"2-corte {plan.cut.crossing_edges}: {len(found)} recorridos de S útiles")
            continue
        sub_t, orig_t = g.induced_subgraph(plan.t_side)
        local_end = orig_t.index(end_vertex) if end_vertex is not None else None
        tail = _rooted_ending(sub_t, orig_t.index(plan.z), rng, local_end, attempts)
        if tail is None:
            continue
        suffix = [orig_t[i] for i in tail]
        return [ordering_from_sequence(g, [orig_s[i] for i in s] + suffix).visit_sequence
                for s in found]
    raise NoHeuristicPair("no end-constrained traversal found", last_cut)


def common_end_pair_two_connected(g: Graph, rng_seed=0, *,
                                  end_vertex: Optional[int] = None,
                                  attempts: Optional[int] = None) -> TrajectoryPair:
    require_connected(g)
    if g.is_cycle():
        raise NoHeuristicPair("cycle special case")
    cuts = enumerate_min_cuts(g, 2) if g.node_count >= 2 else []
    if not cuts or any(len(c.crossing_edges) == 1 for c in cuts):
        raise NoHeuristicPair("graph is not 2-edge-connected with a 2-edge cut")
    seqs = _two_cut_orderings(g, make_rng(rng_seed), 2, end_vertex,
                              attempts or END_CONSTRAINED_ATTEMPTS)
    return TrajectoryPair(ordering_from_sequence(g, seqs[0]), ordering_from_sequence(g, seqs[1]))


def _walk_away(g: Graph, start: int, avoid: int) -> list[int]:
    seq = [start]
    prev, cur = avoid, start
    while True:
        nxt = next(w for w in g.adjacency[cur] if w != prev)
        seq.append(nxt)
        if nxt == avoid:
            return seq
        prev, cur = cur, nxt


def cycle_pair(g: Graph, v: int) -> TrajectoryPair:
    """Las dos vueltas de un ciclo simple que terminan en `v` (raíces distintas)."""
    if not g.is_cycle():
        raise OrderingError("cycle_pair needs a simple cycle")
    _check_root(g, v)
    a, b = g.adjacency[v]
    return TrajectoryPair(ordering_from_sequence(g, _walk_away(g, a, v)),
                          ordering_from_sequence(g, _walk_away(g, b, v)))


def _common_end_orderings(g: Graph, rng: np.random.Generator, count: int,
                          end_vertex: Optional[int], attempts: int) -> list[tuple[int, ...]]:
    require_connected(g)
    if end_vertex is not None:
        _check_root(g, end_vertex)
    if g.node_count < 3:
        raise NoHeuristicPair("graph admits no heuristic pair: fewer than 3 nodes")
    if g.is_cycle():
        v = end_vertex if end_vertex is not None else int(rng.integers(g.node_count))
        pair = cycle_pair(g, v)
        return [pair.first.visit_sequence, pair.second.visit_sequence]

    cuts = enumerate_min_cuts(g, 2)
    bridges = [c for c in cuts if len(c.crossing_edges) == 1]
    if bridges:
        options = [(cut, u, glue) for cut in bridges for u in cut.crossing_edges[0] for glue in _GLUES]
        for i in rng.permutation(len(options)):
            cut, u, glue = options[int(i)]
            try:
                return _bridge_orderings(g, cut, u, glue, rng, count, end_vertex, attempts)
            except NoHeuristicPair as e:
                logger.debug(f"puente {cut.crossing_edges[0]} desde {u} ({glue}): {e}")
        raise NoHeuristicPair("graph admits no heuristic pair: no eligible cut")
    if cuts:
        return _two_cut_orderings(g, rng, count, end_vertex, attempts)
    raise NoHeuristicPair("graph admits no heuristic pair: no eligible cut")


def common_end_pair_any(g: Graph, rng_seed=0, *, end_vertex: Optional[int] = None,
                        attempts: Optional[int] = None) -> TrajectoryPair:
    """Despachador: puentes, luego 2-cortes, luego el caso del ciclo."""
    seqs = _common_end_orderings(g, make_rng(rng_seed), 2, end_vertex,
                                 attempts or END_CONSTRAINED_ATTEMPTS)
    return TrajectoryPair(ordering_from_sequence(g, seqs[0]), ordering_from_sequence(g, seqs[1]))


def trajectory_set(g: Graph, count: int, rng_seed=0, *, end_vertex: Optional[int] = None,
                   attempts: Optional[int] = None) -> list[Ordering]:
    """Hasta `count` ordenaciones distintas con el mismo nodo final."""
    if count < 1:
        raise OrderingError("count must be >= 1")
    rng = make_rng(rng_seed)
    if count == 1 and end_vertex is None:
        return [sample_ordering(g, rng_seed=rng)]
    seqs = _common_end_orderings(g, rng, count, end_vertex, attempts or END_CONSTRAINED_ATTEMPTS)
    return [ordering_from_sequence(g, s) for s in seqs[:count]]


# ═══════════════════════════════════════════════════════════════════════════
# SUBGRAFOS INDUCIDOS POR DFS
# ═══════════════════════════════════════════════════════════════════════════

def sample_dfs_induced_subgraph(g: Graph, rng_seed=0) -> InducedSample:
    rng = make_rng(rng_seed)
    full = sample_ordering(g, rng_seed=rng)
    k = int(rng.integers(1, g.node_count + 1))
    prefix = full.visit_sequence[:k]
    sub, originals = g.induced_subgraph(prefix)
    index = {v: i for i, v in enumerate(originals)}
    return InducedSample(sub, ordering_from_sequence(sub, [index[v] for v in prefix]), originals)


# ═══════════════════════════════════════════════════════════════════════════
# ORÁCULOS (acotados)
# ═══════════════════════════════════════════════════════════════════════════

def _check_bound(g: Graph, max_nodes: Optional[int]) -> None:
    bound = ORACLE_MAX_NODES if max_nodes is None else max_nodes
    if g.node_count > bound:
        raise OracleBoundExceeded(f"graph has {g.node_count} nodes; oracle bound is {bound}")


def enumerate_orderings(g: Graph, max_nodes: Optional[int] = None) -> set[tuple[int, ...]]:
    _check_bound(g, max_nodes)
    require_connected(g)
    n = g.node_count
    if n == 0:
        return {()}
    out: set[tuple[int, ...]] = set()
    visited = [False] * n
    seq: list[int] = []

    def extend(stack: list[int]) -> None:
        if len(seq) == n:
            out.add(tuple(seq))
            return
        st = list(stack)
        while st and all(visited[w] for w in g.adjacency[st[-1]]):
            st.pop()
        if not st:
            return
        for w in g.adjacency[st[-1]]:
            if not visited[w]:
                visited[w] = True
                seq.append(w)
                extend(st + [w])
                seq.pop()
                visited[w] = False

    for root in range(n):
        visited[root] = True
        seq.append(root)
        extend([root])
        seq.pop()
        visited[root] = False
    return out


def enumerate_orderings_ending_at(g: Graph, v: int, max_nodes: Optional[int] = None) -> set[tuple[int, ...]]:
    _check_root(g, v)
    return {s for s in enumerate_orderings(g, max_nodes) if s[-1] == v}


def enumerate_dfs_induced_subsets(g: Graph, max_nodes: Optional[int] = None) -> set[frozenset[int]]:
    """Conjuntos de nodos que son prefijo de alguna ordenación completa."""
    out: set[frozenset[int]] = set()
    for seq in enumerate_orderings(g, max_nodes):
        for k in range(1, len(seq) + 1):
            out.add(frozenset(seq[:k]))
    return out


def is_dfs_induced(g: Graph, nodes: Iterable[int], max_nodes: Optional[int] = None) -> bool:
    target = frozenset(nodes)
    if not target:
        raise OrderingError("node set is empty")
    for v in target:
        _check_root(g, v)
    k = len(target)
    sub, originals = g.induced_subgraph(target)
    index = {v: i for i, v in enumerate(originals)}
    for seq in enumerate_orderings(g, max_nodes):
        prefix = seq[:k]
        if frozenset(prefix) == target and is_valid_ordering(sub, [index[v] for v in prefix]):
            return True
    return False


def find_non_dfs_induced_witness(max_nodes: int = 6) -> Optional[tuple[Graph, frozenset[int]]]:
    """Busca el primer (grafo, nodos) conexo que NO es prefijo de ninguna DFS.

    Recorre todos los grafos conexos con ≤ max_nodes nodos (por máscara de
    aristas) y todos sus subconjuntos de nodos conexos.
    """
    for n in range(2, max_nodes + 1):
        pairs = list(combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if (mask >> i) & 1]
            if len(edges) < n - 1:
                continue
            g = Graph.from_edges(n, edges)
            if not is_connected(g):
                continue
            prefixes = enumerate_dfs_induced_subsets(g, max_nodes=max_nodes)
            for size in range(2, n):
                for nodes in combinations(range(n), size):
                    candidate = frozenset(nodes)
                    if candidate in prefixes:
                        continue
                    sub, _ = g.induced_subgraph(candidate)
                    if is_connected(sub):
                        logger.info(f"testigo: n={n} aristas={edges} nodos={sorted(candidate)}")
                        return g, candidate
    return None


def head_for_model(model) -> str:
    """Cabeza que el modelo entrenó: "lm" para tree_lm, "regression" en otro caso."""
    return "lm" if model.metadata.get("task") == "tree_lm" else "regression"


def structure_invariance_gap(model, g: Graph, vocab, *, mode: str = "output", head: Optional[str] = None,
                             max_nodes: Optional[int] = None) -> float:
    """Máxima diferencia cuadrática de salida entre recorridos con el mismo final.

    Recorre cada subgrafo inducido por DFS de `g` y, por cada nodo final,
    todas las parejas de ordenaciones que terminan ahí. 0.0 para un modelo
    totalmente invariante.
    `head` por defecto sale de la tarea guardada en `model.metadata`.
    """
    from recurrent import final_representation, forward
    from seq_codec import encode, node_symbols, tokenize

    _check_bound(g, max_nodes)
    head = head or head_for_model(model)
    symbols = node_symbols(g, vocab)
    cache: dict[tuple[int, ...], np.ndarray] = {}
    gap = 0.0
    for nodes in sorted(enumerate_dfs_induced_subsets(g, max_nodes), key=lambda s: sorted(s)):
        sub, originals = g.induced_subgraph(nodes)
        sub_symbols = [symbols[v] for v in originals]
        by_end: dict[int, list[tuple[int, ...]]] = defaultdict(list)
        for seq in enumerate_orderings(sub, max_nodes):
            by_end[seq[-1]].append(seq)
        for seqs in by_end.values():
            if len(seqs) < 2:
                continue
            reps = []
            for seq in seqs:
                ids = tuple(tokenize(encode(ordering_from_sequence(sub, seq), sub_symbols), vocab))
                if ids not in cache:
                    cache[ids] = final_representation(model, forward(model, ids), mode, head)
                reps.append(cache[ids])
            stacked = np.stack(reps)
            diffs = ((stacked[:, None, :] - stacked[None, :, :]) ** 2).sum(axis=-1)
            gap = max(gap, float(diffs.max()))
    return gap
