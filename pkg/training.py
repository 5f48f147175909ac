"""
Ciclo de entrenamiento con regularización por orden (OLR)
=========================================================
Minimiza  pérdida de tarea + λ · OLR  por mini-lotes. Cada época:

  1. baraja el conjunto de entrenamiento (semilla derivada de `seed`);
  2. por lote, arma el objetivo: regresión de Wiener o siguiente token, y un
     par OLR por ejemplo (re-sorteado en cada época) si λ > 0;
  3. BPTT exacto + paso de Adam o SGD con recorte de norma global;
  4. evalúa el conjunto completo y escribe una línea de bitácora:

        epoch=<e> task_loss=<f> olr_loss=<f> train_acc=<f>

`epoch=0` es la evaluación antes de la primera actualización. Con la
misma semilla, λ = 0 y λ > 0 parten del mismo modelo y barajan igual: los
pares OLR salen de su propio generador.

PARADA
------
Regresión: exactitud redondeada de entrenamiento = 1.0 Y pérdida plana en
una ventana de `plateau_window` épocas. Modelo de lenguaje: solo la meseta.
Siempre con el tope `epochs`. Una pérdida no finita detiene todo con
`TrainingDiverged`.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, TextIO

import numpy as np

from config import ExperimentConfig, build_config, derive_seed
from dfs_orders import OrderingError, trajectory_set
from graph_core import make_rng
from pipeline import (
    DatasetItem,
    PairSamplingError,
    PipelineError,
    TrajectoryRecord,
    record_from_orderings,
    rounded,
    sample_olr_pair,
    serialize_graph,
    vocabulary_for,
)
from recurrent import (
    AdamState,
    Objective,
    RecurrentModel,
    TrainingDiverged,
    adam_step,
    backward,
    forward,
    init_model,
    sgd_step,
)
from seq_codec import CodecError, Vocabulary, tokenize

logger = logging.getLogger("training")


# ═══════════════════════════════════════════════════════════════════════════
# BITÁCORA Y PARADA
# ═══════════════════════════════════════════════════════════════════════════

class PlateauWindow:
    """Ventana deslizante de pérdidas por época.

    Plana cuando está llena y  max − min ≤ tolerancia · max(1, |última|).
    """

    def __init__(self, window: int, tolerance: float):
        self._values: deque[float] = deque(maxlen=window)
        self.tolerance = tolerance

    def push(self, loss: float) -> None:
        self._values.append(float(loss))

    def is_flat(self) -> bool:
        if len(self._values) < (self._values.maxlen or 0):
            return False
        spread = max(self._values) - min(self._values)
        return spread <= self.tolerance * max(1.0, abs(self._values[-1]))


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    task_loss: float
    olr_loss: float
    train_acc: float

    def line(self) -> str:
        return (f"epoch={self.epoch} task_loss={self.task_loss:.6f} "
                f"olr_loss={self.olr_loss:.6f} train_acc={self.train_acc:.6f}")


@dataclass
class TrainingResult:
    model: RecurrentModel
    log: list[EpochLog] = field(default_factory=list)
    stop_reason: str = "epoch_limit"

    @property
    def initial_task_loss(self) -> float:
        return self.log[0].task_loss


# ═══════════════════════════════════════════════════════════════════════════
# MODELO ↔ CONFIGURACIÓN
# ═══════════════════════════════════════════════════════════════════════════

def model_for_config(cfg: ExperimentConfig, vocab: Optional[Vocabulary] = None) -> RecurrentModel:
    model = init_model(vocab or vocabulary_for(cfg), cell=cfg.cell, hidden_width=cfg.hidden_width,
                       embedding_width=cfg.embedding_width, num_layers=cfg.num_layers,
                       nonlinearity=cfg.nonlinearity, seed=derive_seed(cfg.seed, "init"))
    model.metadata.update(config_metadata(cfg))
    return model


def config_metadata(cfg: ExperimentConfig) -> dict[str, str]:
    out = {"task": cfg.task}
    out.update({f"cfg.{k}": str(v) for k, v in cfg.model_dump().items()})
    return out


def config_from_metadata(metadata: Mapping[str, str]) -> ExperimentConfig:
    values = {k[4:]: v for k, v in metadata.items() if k.startswith("cfg.")}
    if not values:
        raise PipelineError("checkpoint carries no experiment configuration")
    return build_config(values)


# ═══════════════════════════════════════════════════════════════════════════
# PARES
# ═══════════════════════════════════════════════════════════════════════════

def build_pair_records(items: Sequence[DatasetItem], cfg: ExperimentConfig) -> dict[str, TrajectoryRecord]:
    """Conjuntos de trayectorias en memoria para los grafos de entrenamiento."""
    records: dict[str, TrajectoryRecord] = {}
    for it in items:
        try:
            orderings = trajectory_set(it.graph, cfg.trajectory_count,
                                       derive_seed(cfg.seed, "trajectories", it.graph_id))
        except OrderingError as e:
            logger.debug(f"{it.graph_id}: sin trayectorias ({e})")
            continue
        if len(orderings) >= 2:
            records[it.graph_id] = record_from_orderings(it.graph_id, it.graph, orderings)
    logger.info(f"pares OLR: {len(records)}/{len(items)} grafos con trayectorias")
    return records


def _draw_pair(item: DatasetItem, cfg: ExperimentConfig, records: Mapping[str, TrajectoryRecord],
               rng: np.random.Generator, vocab: Vocabulary):
    if cfg.pair_source == "dfs_subgraph":
        source = item.graph
    else:
        source = records.get(item.graph_id)
        if source is None:
            return None
    try:
        return sample_olr_pair(source, cfg, rng, vocab)
    except PairSamplingError as e:
        logger.debug(f"{item.graph_id}: {e}")
        return None


# ═══════════════════════════════════════════════════════════════════════════
# EVALUACIÓN SOBRE ENTRENAMIENTO
# ═══════════════════════════════════════════════════════════════════════════

def _train_metrics(model: RecurrentModel, cfg: ExperimentConfig,
                   items: Sequence[DatasetItem], ids: Sequence[tuple[int, ...]]) -> tuple[float, float]:
    if cfg.task == "wiener_regression":
        outs = [forward(model, x).final_output for x in ids]
        errors = [(o - it.target) ** 2 for o, it in zip(outs, items)]
        acc = float(np.mean([rounded(o) == it.target for o, it in zip(outs, items)]))
        return float(np.mean(errors)), acc
    losses, hits, steps = [], 0, 0
    for x in ids:
        trace = forward(model, x)
        logits = trace.logits[:-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        targets = np.asarray(x[1:])
        losses.append(float(-logp[np.arange(len(targets)), targets].mean()))
        hits += int((logits.argmax(axis=1) == targets).sum())
        steps += len(targets)
    return float(np.mean(losses)), hits / steps


# ═══════════════════════════════════════════════════════════════════════════
# ENTRENAMIENTO
# ═══════════════════════════════════════════════════════════════════════════

def train(cfg: ExperimentConfig, train_set: Sequence[DatasetItem], *,
          records: Optional[Mapping[str, TrajectoryRecord]] = None,
          log_sink: Optional[TextIO] = None,
          model: Optional[RecurrentModel] = None) -> TrainingResult:
    """Entrena desde cero (o desde `model`) y devuelve el modelo con su bitácora.

    `records` sustituye a las trayectorias calculadas en memoria (por
    ejemplo, las leídas de un archivo de trayectorias).
    """
    if not train_set:
        raise PipelineError("empty training set")
    regression = cfg.task == "wiener_regression"
    if regression and any(it.target is None for it in train_set):
        raise PipelineError("regression training needs a target on every item")
    vocab = vocabulary_for(cfg)
    if model is None:
        model = model_for_config(cfg, vocab)
        if regression:
            # Arranca la salida en la media del objetivo; los índices de Wiener rondan las centenas.
            model.params["reg_c"][:] = float(np.mean([it.target for it in train_set]))
    if model.vocab.tokens != vocab.tokens:
        raise CodecError("model vocabulary does not match the configuration")

    use_olr = cfg.olr_weight > 0.0
    if use_olr and cfg.pair_source == "full_graph" and records is None:
        records = build_pair_records(train_set, cfg)
    records = records or {}

    order_rng = make_rng(derive_seed(cfg.seed, "shuffle"))
    pair_rng = make_rng(derive_seed(cfg.seed, "pairs"))
    adam = AdamState.for_model(model) if cfg.optimizer == "adam" else None
    plateau = PlateauWindow(cfg.plateau_window, cfg.plateau_tolerance)

    def ids_for(epoch: int) -> list[tuple[int, ...]]:
        if cfg.sequence_mode == "randomized" and epoch > 0:
            return [tuple(tokenize(serialize_graph(it.graph_id, it.graph, cfg, vocab, ("epoch", epoch)), vocab))
                    for it in train_set]
        return [tuple(tokenize(it.tokens, vocab)) for it in train_set]

    fixed_ids = ids_for(0)
    result = TrainingResult(model)
    if log_sink is not None:
        log_sink.write("".join(f"# {line}\n" for line in cfg.to_lines()))

    def record(entry: EpochLog) -> None:
        result.log.append(entry)
        if log_sink is not None:
            log_sink.write(entry.line() + "\n")
            log_sink.flush()

    task0, acc0 = _train_metrics(model, cfg, train_set, fixed_ids)
    record(EpochLog(0, task0, 0.0, acc0))

    for epoch in range(1, cfg.epochs + 1):
        ids = ids_for(epoch) if cfg.sequence_mode == "randomized" else fixed_ids
        order = order_rng.permutation(len(train_set))
        olr_sum, olr_pairs = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [int(i) for i in order[start:start + cfg.batch_size]]
            pairs = []
            if use_olr:
                for i in batch:
                    pair = _draw_pair(train_set[i], cfg, records, pair_rng, vocab)
                    if pair is not None:
                        pairs.append(pair)
            objective = Objective(
                regression=[(ids[i], float(train_set[i].target)) for i in batch] if regression else [],
                language=[] if regression else [ids[i] for i in batch],
                olr_pairs=pairs,
                olr_weight=cfg.olr_weight,
                olr_mode=cfg.olr_mode,
                olr_head="regression" if regression else "lm",
            )
            parts, grads = backward(model, objective)
            if not np.isfinite(parts.total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}: "
                    f"task={parts.task} olr={parts.olr}")
            if adam is not None:
                model, adam = adam_step(model, grads, adam, cfg.learning_rate, cfg.clip_norm)
            else:
                model = sgd_step(model, grads, cfg.learning_rate, cfg.clip_norm)
            olr_sum += parts.olr * len(pairs)
            olr_pairs += len(pairs)

        task_loss, acc = _train_metrics(model, cfg, train_set, ids)
        if not np.isfinite(task_loss):
            raise TrainingDiverged(f"non-finite training loss after epoch {epoch}")
        record(EpochLog(epoch, task_loss, olr_sum / olr_pairs if olr_pairs else 0.0, acc))
        if epoch % 25 == 0:
            logger.info(f"época {epoch}: pérdida={task_loss:.4f} exactitud={acc:.3f}")
        plateau.push(task_loss)
        if plateau.is_flat() and (acc >= 1.0 or not regression):
            result.stop_reason = "converged" if regression else "plateau"
            break
    result.model = model
    logger.info(f"✅ entrenamiento terminado en la época {result.log[-1].epoch} ({result.stop_reason})")
    return result
