"""
Pipeline de datos: conjuntos de Wiener y de árboles, trayectorias y métricas
============================================================================
Todo lo que va del grafo al ejemplo de entrenamiento, y del modelo a la
métrica, menos el ciclo de entrenamiento (ver training.py).

ARCHIVO DE TRAYECTORIAS
-----------------------
Una línea por grafo, con el grafo compañero en su propio archivo:

    <graph_id>\t<secuencia canónica>\t<tray_1>|<tray_2>|...

Las cadenas usan símbolos de identidad (nodo 0 → 'A'), así que el mapa de
vuelta a nodos es exacto. Al escribir y al leer se re-valida cada
trayectoria contra el grafo: un archivo corrupto falla al cargar, no a
media corrida de entrenamiento.

SEMILLAS
--------
Cada grafo, cada orden y cada conjunto de trayectorias usa su propia
semilla derivada de (semilla maestra, etiqueta, id). El resultado no
depende del número de procesos ni del orden en que terminan.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from config import PAIR_RESAMPLE_ATTEMPTS, ExperimentConfig, derive_seed
from dfs_orders import (
    Ordering,
    OrderingError,
    canonical_ordering,
    common_end_pair_any,
    ordering_from_sequence,
    sample_dfs_induced_subgraph,
    sample_ordering,
    trajectory_set,
)
from graph_core import Graph, GraphError, make_rng, random_connected_graph, random_tree, wiener_index
from recurrent import RecurrentModel, forward, sample_sequence
from seq_codec import (
    CodecError,
    TokenSequence,
    Vocabulary,
    decode,
    decode_ids,
    encode,
    identity_index,
    identity_symbol,
    node_symbols,
    tokenize,
)

logger = logging.getLogger("pipeline")

# Re-sorteos de un grafo de prueba que coincide con uno de entrenamiento.
DISJOINT_ATTEMPTS = 50


class PipelineError(ValueError):
    pass


class TrajectoryFileError(PipelineError):
    pass


class PairSamplingError(RuntimeError):
    """Se agotaron los re-sorteos de un par OLR."""


class SinkError(RuntimeError):
    """No se pudo escribir la salida."""


# ═══════════════════════════════════════════════════════════════════════════
# CONJUNTOS DE DATOS
# ═══════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class DatasetItem:
    graph_id: str
    graph: Graph
    tokens: TokenSequence
    target: Optional[int] = None


def vocabulary_for(cfg: ExperimentConfig) -> Vocabulary:
    if cfg.vocab_mode == "anonymized":
        return Vocabulary.anonymized_vocab()
    return Vocabulary.labeled(cfg.label_alphabet)


def _draw_graph(cfg: ExperimentConfig, seed: int) -> Graph:
    labels = cfg.label_alphabet if cfg.vocab_mode == "labeled" else None
    if cfg.graph_mode == "tree":
        return random_tree(cfg.n, seed, labels)
    return random_connected_graph(cfg.n, cfg.extra_edges, seed, labels)


def generate_graphs(cfg: ExperimentConfig, split: str, count: int,
                    exclude: Iterable[tuple] = ()) -> list[tuple[str, Graph]]:
    """`count` grafos con ids `<split>-<i>`, evitando los de `exclude` mientras se pueda."""
    if count < 1:
        raise PipelineError("graph count must be >= 1")
    banned = set(exclude)
    out = []
    collisions = 0
    for i in range(count):
        for attempt in range(DISJOINT_ATTEMPTS):
            g = _draw_graph(cfg, derive_seed(cfg.seed, "graph", split, i, attempt))
            if g.key() not in banned:
                break
        else:
            collisions += 1
        out.append((f"{split}-{i}", g))
    if collisions:
        logger.warning(f"🚨 {collisions} grafos de '{split}' repiten uno excluido: "
                       f"el espacio de grafos con n={cfg.n} es demasiado chico")
    return out


def serialize_graph(graph_id: str, g: Graph, cfg: ExperimentConfig, vocab: Vocabulary,
                    salt: object = "order") -> TokenSequence:
    if cfg.sequence_mode == "canonical":
        ordering = canonical_ordering(g)
    else:
        ordering = sample_ordering(g, rng_seed=derive_seed(cfg.seed, salt, graph_id))
    return encode(ordering, node_symbols(g, vocab))


def dataset_from_graphs(graphs: Sequence[tuple[str, Graph]], cfg: ExperimentConfig) -> list[DatasetItem]:
    vocab = vocabulary_for(cfg)
    items = []
    for gid, g in graphs:
        target = wiener_index(g) if cfg.task == "wiener_regression" else None
        items.append(DatasetItem(gid, g, serialize_graph(gid, g, cfg, vocab), target))
    return items


def build_wiener_dataset(cfg: ExperimentConfig) -> tuple[list[DatasetItem], list[DatasetItem]]:
    """Árboles (o grafos) al azar, serializados con un DFS sembrado; objetivo = índice de Wiener."""
    if cfg.task != "wiener_regression":
        raise PipelineError("build_wiener_dataset needs task=wiener_regression")
    train_graphs = generate_graphs(cfg, "train", cfg.train_size)
    test_graphs = generate_graphs(cfg, "test", cfg.test_size, exclude=[g.key() for _, g in train_graphs])
    return dataset_from_graphs(train_graphs, cfg), dataset_from_graphs(test_graphs, cfg)


def build_tree_lm_dataset(cfg: ExperimentConfig) -> tuple[list[DatasetItem], list[DatasetItem]]:
    """Árboles etiquetados (o anónimos) para el modelo de lenguaje; sin objetivo numérico."""
    if cfg.task != "tree_lm":
        raise PipelineError("build_tree_lm_dataset needs task=tree_lm")
    train_graphs = generate_graphs(cfg, "train", cfg.train_size)
    test_graphs = generate_graphs(cfg, "test", cfg.test_size, exclude=[g.key() for _, g in train_graphs])
    return dataset_from_graphs(train_graphs, cfg), dataset_from_graphs(test_graphs, cfg)


def build_datasets(cfg: ExperimentConfig) -> tuple[list[DatasetItem], list[DatasetItem]]:
    if cfg.task == "wiener_regression":
        return build_wiener_dataset(cfg)
    return build_tree_lm_dataset(cfg)


# ═══════════════════════════════════════════════════════════════════════════
# TRAYECTORIAS
# ═══════════════════════════════════════════════════════════════════════════

def ordering_from_string(g: Graph, text: str) -> Ordering:
    """Cadena con símbolos de identidad → ordenación de `g`, verificando árbol y orden."""
    try:
        decoded = decode(TokenSequence.from_string(text))
        seq = [identity_index(s) for s in decoded.symbols]
    except CodecError as e:
        raise TrajectoryFileError(f"cannot decode {text!r}: {e}") from None
    try:
        ordering = ordering_from_sequence(g, seq)
    except OrderingError:
        raise TrajectoryFileError(f"{text!r} is not a DFS ordering of its graph") from None
    tree = {seq[c]: seq[p] for c, p in decoded.ordering.parent_of.items()}
    if tree != dict(ordering.parent_of):
        raise TrajectoryFileError(f"{text!r} does not match the DFS tree of its ordering")
    return ordering


def ordering_to_string(ordering: Ordering) -> str:
    symbols = [identity_symbol(v) for v in range(max(ordering.visit_sequence) + 1)]
    return encode(ordering, symbols).to_string()


@dataclass(frozen=True)
class TrajectoryRecord:
    graph_id: str
    graph: Graph
    canonical_sequence: str
    trajectories: tuple[str, ...]

    def orderings(self) -> list[Ordering]:
        return [ordering_from_string(self.graph, t) for t in self.trajectories]

    def to_line(self) -> str:
        return f"{self.graph_id}\t{self.canonical_sequence}\t{'|'.join(self.trajectories)}"


def validate_record(record: TrajectoryRecord) -> None:
    where = f"graph {record.graph_id}"
    if not record.trajectories:
        raise TrajectoryFileError(f"{where}: no trajectories")
    if len(set(record.trajectories)) != len(record.trajectories):
        raise TrajectoryFileError(f"{where}: repeated trajectory")
    ordering_from_string(record.graph, record.canonical_sequence)
    ends = {o.last for o in record.orderings()}
    if len(ends) != 1:
        raise TrajectoryFileError(f"{where}: trajectories end at different nodes {sorted(ends)}")


def record_from_orderings(graph_id: str, g: Graph, orderings: Sequence[Ordering]) -> TrajectoryRecord:
    record = TrajectoryRecord(
        graph_id=graph_id,
        graph=g,
        canonical_sequence=ordering_to_string(canonical_ordering(g)),
        trajectories=tuple(ordering_to_string(o) for o in orderings),
    )
    validate_record(record)
    return record


@dataclass
class PrecomputeSummary:
    records: list[TrajectoryRecord] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def written(self) -> int:
        return len(self.records)


def _trajectory_task(args: tuple) -> tuple[str, Optional[TrajectoryRecord], str]:
    graph_id, g, count, seed, end_vertex = args
    try:
        orderings = trajectory_set(g, count, seed, end_vertex=end_vertex)
        return graph_id, record_from_orderings(graph_id, g, orderings), ""
    except (OrderingError, CodecError, GraphError, TrajectoryFileError) as e:
        return graph_id, None, str(e)


def build_trajectory_records(graphs: Sequence[tuple[str, Graph]], count: int, rng_seed: int, *,
                             end_vertex: Optional[int] = None, workers: int = 1) -> PrecomputeSummary:
    tasks = [(gid, g, count, derive_seed(rng_seed, "trajectories", gid), end_vertex) for gid, g in graphs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trajectory_task, tasks, chunksize=16))
    else:
        results = [_trajectory_task(t) for t in tasks]
    summary = PrecomputeSummary()
    for gid, record, reason in results:
        if record is None:
            summary.skipped.append((gid, reason))
        else:
            summary.records.append(record)
    logger.info(f"trayectorias: {summary.written} grafos escritos, {len(summary.skipped)} omitidos")
    return summary


def write_trajectory_file(path: Union[str, Path], records: Iterable[TrajectoryRecord]) -> int:
    lines = [r.to_line() + "\n" for r in records]
    try:
        Path(path).write_text("".join(lines), encoding="utf-8")
    except OSError as e:
        raise SinkError(f"cannot write {path}: {e}") from e
    return len(lines)


def precompute_trajectories(graphs: Sequence[tuple[str, Graph]], count: int, rng_seed: int,
                            sink: Union[str, Path], *, end_vertex: Optional[int] = None,
                            workers: int = 1) -> PrecomputeSummary:
    """Conjunto de trayectorias por grafo, escrito a `sink`. Los grafos sin par quedan en `skipped`."""
    summary = build_trajectory_records(graphs, count, rng_seed, end_vertex=end_vertex, workers=workers)
    write_trajectory_file(sink, summary.records)
    return summary


def read_trajectory_file(path: Union[str, Path], graphs: Mapping[str, Graph]) -> list[TrajectoryRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise TrajectoryFileError(f"cannot read trajectory file {path}: {e}") from e
    records = []
    for num, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise TrajectoryFileError(f"line {num}: expected 3 tab-separated fields")
        gid, canonical, trajs = parts
        if gid not in graphs:
            raise TrajectoryFileError(f"line {num}: unknown graph id {gid!r}")
        record = TrajectoryRecord(gid, graphs[gid], canonical, tuple(trajs.split("|")))
        try:
            validate_record(record)
        except TrajectoryFileError as e:
            raise TrajectoryFileError(f"line {num}: {e}") from None
        records.append(record)
    return records


@dataclass(frozen=True)
class FilterResult:
    kept: list[TrajectoryRecord]
    dropped: int

    @property
    def retention(self) -> float:
        total = len(self.kept) + self.dropped
        return len(self.kept) / total if total else 0.0


def filter_records(records: Sequence[TrajectoryRecord], min_trajectories: int) -> FilterResult:
    if min_trajectories < 1:
        raise PipelineError("min_trajectories must be >= 1")
    kept = [r for r in records if len(set(r.trajectories)) >= min_trajectories]
    return FilterResult(kept, len(records) - len(kept))


def retention_report(records: Sequence[TrajectoryRecord], total_graphs: int,
                     thresholds: Sequence[int] = (2, 10)) -> dict[int, float]:
    """Fracción de TODOS los grafos (incluidos los omitidos) con ≥ t trayectorias."""
    if total_graphs < 1:
        return {t: 0.0 for t in thresholds}
    return {t: sum(len(set(r.trajectories)) >= t for r in records) / total_graphs for t in thresholds}


# ═══════════════════════════════════════════════════════════════════════════
# PARES OLR
# ═══════════════════════════════════════════════════════════════════════════

def _ids(ordering: Ordering, symbols: Sequence[str], vocab: Vocabulary) -> tuple[int, ...]:
    return tuple(tokenize(encode(ordering, symbols), vocab))


def sample_olr_pair(source: Union[TrajectoryRecord, Graph], cfg: ExperimentConfig, rng_seed,
                    vocab: Optional[Vocabulary] = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Dos recorridos tokenizados con el mismo nodo final, en orden aleatorio."""
    rng = make_rng(rng_seed)
    vocab = vocab or vocabulary_for(cfg)
    if isinstance(source, TrajectoryRecord):
        orderings = source.orderings()
        if len(orderings) < 2:
            raise PairSamplingError(f"graph {source.graph_id} has fewer than 2 trajectories")
        i, j = (int(x) for x in rng.choice(len(orderings), size=2, replace=False))
        symbols = node_symbols(source.graph, vocab)
        return _ids(orderings[i], symbols, vocab), _ids(orderings[j], symbols, vocab)

    g = source
    symbols = node_symbols(g, vocab)

    def draw() -> tuple[tuple[int, ...], tuple[int, ...]]:
        if cfg.pair_source == "full_graph":
            pair = common_end_pair_any(g, rng)
            sub_symbols = symbols
        else:
            sample = sample_dfs_induced_subgraph(g, rng)
            pair = common_end_pair_any(sample.subgraph, rng)
            sub_symbols = [symbols[v] for v in sample.original_nodes]
        return _ids(pair.first, sub_symbols, vocab), _ids(pair.second, sub_symbols, vocab)

    retrying = Retrying(stop=stop_after_attempt(PAIR_RESAMPLE_ATTEMPTS),
                        retry=retry_if_exception_type(OrderingError), reraise=True)
    try:
        a, b = retrying(draw)
    except OrderingError as e:
        raise PairSamplingError(f"no OLR pair after {PAIR_RESAMPLE_ATTEMPTS} draws: {e}") from e
    return (a, b) if rng.random() < 0.5 else (b, a)


# ═══════════════════════════════════════════════════════════════════════════
# MÉTRICAS
# ═══════════════════════════════════════════════════════════════════════════

def rounded(x: float) -> int:
    """Redondeo al entero más cercano, mitades hacia arriba."""
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class RegressionMetrics:
    mae: float
    rounded_accuracy: float
    outputs: tuple[float, ...]
    targets: tuple[int, ...]

    def as_dict(self) -> dict[str, float]:
        return {"mae": self.mae, "rounded_accuracy": self.rounded_accuracy}


def regression_metrics(outputs: Sequence[float], targets: Sequence[int]) -> RegressionMetrics:
    if not outputs:
        raise PipelineError("empty test set")
    if len(outputs) != len(targets):
        raise PipelineError("outputs and targets differ in length")
    out = np.asarray(outputs, dtype=np.float64)
    tgt = np.asarray(targets, dtype=np.float64)
    mae = float(np.abs(out - tgt).mean())
    acc = float(np.mean([rounded(o) == int(t) for o, t in zip(outputs, targets)]))
    return RegressionMetrics(mae, acc, tuple(float(o) for o in outputs), tuple(int(t) for t in targets))


def evaluate_regression(model: RecurrentModel, items: Sequence[DatasetItem]) -> RegressionMetrics:
    if not items:
        raise PipelineError("empty test set")
    outputs = [forward(model, tokenize(it.tokens, model.vocab)).final_output for it in items]
    return regression_metrics(outputs, [it.target for it in items])


def write_predictions(path: Union[str, Path], metrics: RegressionMetrics) -> None:
    lines = ["# target\toutput\n"] + [f"{t}\t{o!r}\n" for t, o in zip(metrics.targets, metrics.outputs)]
    try:
        Path(path).write_text("".join(lines), encoding="utf-8")
    except OSError as e:
        raise SinkError(f"cannot write {path}: {e}") from e


def read_predictions(path: Union[str, Path]) -> tuple[list[float], list[int]]:
    outputs, targets = [], []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw or raw.startswith("#"):
            continue
        t, o = raw.split("\t")
        targets.append(int(t))
        outputs.append(float(o))
    return outputs, targets


@dataclass(frozen=True)
class GenerationMetrics:
    validity: float
    unique_at_k: dict[int, float]
    novelty: float
    sample_count: int

    def as_dict(self) -> dict[str, float]:
        out = {"validity": self.validity, "novelty": self.novelty}
        out.update({f"unique_at_{k}": v for k, v in sorted(self.unique_at_k.items())})
        return out


def generation_metrics(samples: Sequence[Optional[str]], reference: Iterable[str],
                       k_values: Sequence[int]) -> GenerationMetrics:
    """`samples` trae la cadena canónica de cada muestra, o None si no decodifica.

    Con cero muestras válidas unique@K y novelty valen 0.
    """
    n = len(samples)
    if n == 0:
        raise PipelineError("no samples")
    for k in k_values:
        if k < 1 or k > n:
            raise PipelineError(f"K={k} must be between 1 and sample_count={n}")
    valid = [s for s in samples if s is not None]
    unique = {k: len({s for s in samples[:k] if s is not None}) / k for k in k_values}
    distinct = set(valid)
    ref = set(reference)
    novelty = len(distinct - ref) / len(distinct) if distinct else 0.0
    return GenerationMetrics(len(valid) / n, unique, novelty, n)


def canonical_sample(ids: Sequence[int], vocab: Vocabulary) -> Optional[str]:
    """Cadena canónica de una muestra, o None si no es un árbol bien formado.

    Una muestra cortada por `max_len` antes de EOS no cuenta como válida.
    """
    if vocab.eos not in ids:
        return None
    try:
        ts = decode_ids(ids, vocab)
        decode(ts)
    except CodecError:
        return None
    return vocab.normalize(ts).to_string()


def reference_strings(items: Iterable[DatasetItem], vocab: Vocabulary) -> set[str]:
    return {vocab.normalize(it.tokens).to_string() for it in items}


def evaluate_generation(model: RecurrentModel, vocab: Vocabulary, reference: Iterable[str],
                        k_values: Sequence[int], sample_count: int, rng_seed: int, *,
                        max_len: int = 200, temperature: float = 1.0) -> tuple[GenerationMetrics, list[Optional[str]]]:
    if sample_count < 1:
        raise PipelineError("sample_count must be >= 1")
    for k in k_values:
        if k > sample_count:
            raise PipelineError(f"K={k} exceeds sample_count={sample_count}")
    samples = [canonical_sample(sample_sequence(model, vocab, max_len, temperature,
                                                derive_seed(rng_seed, "sample", i)), vocab)
               for i in range(sample_count)]
    return generation_metrics(samples, reference, k_values), samples


def metrics_lines(metrics: Mapping[str, float]) -> list[str]:
    return [f"{k}={v!r}" for k, v in metrics.items()]
