"""
Redes recurrentes escritas a mano: RNN simple y LSTM con BPTT exacto
====================================================================
Sin framework de autodiferenciación. Todo es numpy en doble precisión para
que la verificación por diferencias finitas sea fiable.

  RNN simple    h_t = σ_h(A h_{t-1} + B x_t + b)
  LSTM          z = Wh h_{t-1} + Wx x_t + b  → compuertas i, f, o (sigmoide) y g (tanh)
                c_t = f ⊙ c_{t-1} + i ⊙ g ;  h_t = o ⊙ tanh(c_t)
  Cabezas       regresión      y_t = C h_t + D x_t + c        (escalar)
                siguiente token  ℓ_t = C' h_t + D' x_t + c'   (logits sobre el vocabulario)

La pérdida total es  media(tarea) + λ · media(OLR), donde OLR es la
distancia cuadrática entre las representaciones finales de dos recorridos
del mismo grafo que terminan en el mismo nodo.

PARÁMETROS Y ORDEN FIJO
-----------------------
    E
    por capa l:  A{l}, B{l}, b{l}        (vanilla)
                 Wh{l}, Wx{l}, b{l}      (lstm, compuertas apiladas i|f|o|g)
    reg_C, reg_D, reg_c, lm_C, lm_D, lm_c

Ese mismo orden es el del archivo de punto de control, seguido de h0.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from graph_core import make_rng
from seq_codec import Vocabulary

logger = logging.getLogger("recurrent")

Params = dict[str, np.ndarray]

CHECKPOINT_MAGIC = b"OLRCKPT\n"
CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    pass


class CheckpointError(ModelError):
    pass


class TrainingDiverged(RuntimeError):
    pass


# ═══════════════════════════════════════════════════════════════════════════
# MODELO
# ═══════════════════════════════════════════════════════════════════════════

def parameter_names(cell: str, num_layers: int) -> list[str]:
    per_layer = ("A", "B", "b") if cell == "vanilla" else ("Wh", "Wx", "b")
    names = ["E"]
    for l in range(num_layers):
        names += [f"{p}{l}" for p in per_layer]
    return names + ["reg_C", "reg_D", "reg_c", "lm_C", "lm_D", "lm_c"]


def parameter_shapes(cell: str, hidden_width: int, embedding_width: int,
                     num_layers: int, vocab_size: int) -> dict[str, tuple[int, ...]]:
    H, d, V = hidden_width, embedding_width, vocab_size
    gates = H if cell == "vanilla" else 4 * H
    shapes: dict[str, tuple[int, ...]] = {"E": (V, d)}
    for l in range(num_layers):
        width_in = d if l == 0 else H
        if cell == "vanilla":
            shapes.update({f"A{l}": (H, H), f"B{l}": (H, width_in), f"b{l}": (H,)})
        else:
            shapes.update({f"Wh{l}": (gates, H), f"Wx{l}": (gates, width_in), f"b{l}": (gates,)})
    shapes.update({"reg_C": (H,), "reg_D": (d,), "reg_c": (1,),
                   "lm_C": (V, H), "lm_D": (V, d), "lm_c": (V,)})
    return shapes


@dataclass
class RecurrentModel:
    cell: Literal["vanilla", "lstm"]
    nonlinearity: Literal["tanh", "sigmoid", "identity"]
    hidden_width: int
    embedding_width: int
    num_layers: int
    vocab: Vocabulary
    params: Params
    h0: np.ndarray
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.cell not in ("vanilla", "lstm"):
            raise ModelError(f"unknown cell {self.cell!r}")
        if self.nonlinearity not in _ACTIVATIONS:
            raise ModelError(f"unknown nonlinearity {self.nonlinearity!r}")
        expected = parameter_shapes(self.cell, self.hidden_width, self.embedding_width,
                                    self.num_layers, len(self.vocab))
        if set(expected) != set(self.params):
            raise ModelError(f"parameter names {sorted(self.params)} do not match {sorted(expected)}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ModelError(f"{name} has shape {self.params[name].shape}, expected {shape}")
        if self.h0.shape != (self.num_layers, self.hidden_width):
            raise ModelError("h0 must have shape (num_layers, hidden_width)")

    @property
    def dtype(self) -> np.dtype:
        return self.params["E"].dtype

    def with_params(self, params: Params) -> "RecurrentModel":
        return RecurrentModel(self.cell, self.nonlinearity, self.hidden_width, self.embedding_width,
                              self.num_layers, self.vocab, params, self.h0.copy(), dict(self.metadata))

    def copy(self) -> "RecurrentModel":
        return self.with_params({k: v.copy() for k, v in self.params.items()})


def init_model(vocab: Vocabulary, *, cell: str = "lstm", hidden_width: int = 100,
               embedding_width: int = 16, num_layers: int = 1, nonlinearity: str = "tanh",
               seed: int = 0, dtype: str = "float64") -> RecurrentModel:
    """Uniforme en [-1/√fan_in, 1/√fan_in]; la tabla de embeddings usa fan_in = 1."""
    rng = make_rng(seed)
    shapes = parameter_shapes(cell, hidden_width, embedding_width, num_layers, len(vocab))
    params: Params = {}
    for name in parameter_names(cell, num_layers):
        shape = shapes[name]
        if name == "E":
            fan_in = 1
        elif name in ("reg_D", "lm_D"):
            fan_in = embedding_width
        elif len(shape) == 2:
            fan_in = shape[1]
        else:
            fan_in = hidden_width
        bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    h0 = np.zeros((num_layers, hidden_width), dtype=dtype)
    return RecurrentModel(cell, nonlinearity, hidden_width, embedding_width, num_layers,
                          vocab, params, h0)


# ── activaciones ──

def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


_ACTIVATIONS = {
    "tanh": (np.tanh, lambda h: 1.0 - h * h),
    "sigmoid": (_sigmoid, lambda h: h * (1.0 - h)),
    "identity": (lambda a: a, lambda h: np.ones_like(h)),
}


# ═══════════════════════════════════════════════════════════════════════════
# FORWARD
# ═══════════════════════════════════════════════════════════════════════════

@dataclass
class ForwardTrace:
    ids: tuple[int, ...]
    embedded: np.ndarray                  # (T, d)
    layer_inputs: list[np.ndarray]        # por capa (T, I_l)
    hidden: list[np.ndarray]              # por capa (T, H)
    cells: list[Optional[np.ndarray]]     # lstm: (T, H)
    gates: list[Optional[np.ndarray]]     # lstm: (T, 4H) activadas i|f|o|g
    outputs: np.ndarray                   # (T,) cabeza de regresión
    logits: np.ndarray                    # (T, V)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def final_output(self) -> float:
        return float(self.outputs[-1])

    @property
    def final_hidden(self) -> np.ndarray:
        return self.hidden[-1][-1]


def _check_ids(model: RecurrentModel, ids: Sequence[int]) -> tuple[int, ...]:
    ids = tuple(int(i) for i in ids)
    if not ids:
        raise ModelError("empty input sequence")
    V = len(model.vocab)
    for i in ids:
        if not (0 <= i < V):
            raise ModelError(f"token id {i} out of range for vocabulary of {V}")
    return ids


def _cell_step(model: RecurrentModel, layer: int, h_prev: np.ndarray, c_prev: Optional[np.ndarray],
               x: np.ndarray) -> tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    p = model.params
    if model.cell == "vanilla":
        act, _ = _ACTIVATIONS[model.nonlinearity]
        a = p[f"A{layer}"] @ h_prev + p[f"B{layer}"] @ x + p[f"b{layer}"]
        return act(a), None, None
    H = model.hidden_width
    z = p[f"Wh{layer}"] @ h_prev + p[f"Wx{layer}"] @ x + p[f"b{layer}"]
    gates = np.empty_like(z)
    gates[:3 * H] = _sigmoid(z[:3 * H])
    gates[3 * H:] = np.tanh(z[3 * H:])
    i, f, o, g = gates[:H], gates[H:2 * H], gates[2 * H:3 * H], gates[3 * H:]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, gates


def forward(model: RecurrentModel, ids: Sequence[int]) -> ForwardTrace:
    ids = _check_ids(model, ids)
    p = model.params
    T, H = len(ids), model.hidden_width
    embedded = p["E"][list(ids)]
    layer_inputs, hidden, cells, gates_all = [], [], [], []
    current = embedded
    for l in range(model.num_layers):
        hs = np.empty((T, H), dtype=model.dtype)
        cs = np.empty((T, H), dtype=model.dtype) if model.cell == "lstm" else None
        gs = np.empty((T, 4 * H), dtype=model.dtype) if model.cell == "lstm" else None
        h = model.h0[l]
        c = np.zeros(H, dtype=model.dtype) if model.cell == "lstm" else None
        for t in range(T):
            h, c, g = _cell_step(model, l, h, c, current[t])
            hs[t] = h
            if cs is not None:
                cs[t] = c
                gs[t] = g
        layer_inputs.append(current)
        hidden.append(hs)
        cells.append(cs)
        gates_all.append(gs)
        current = hs
    top = hidden[-1]
    outputs = top @ p["reg_C"] + embedded @ p["reg_D"] + p["reg_c"][0]
    logits = top @ p["lm_C"].T + embedded @ p["lm_D"].T + p["lm_c"]
    return ForwardTrace(ids, embedded, layer_inputs, hidden, cells, gates_all, outputs, logits)


def final_representation(model: RecurrentModel, trace: ForwardTrace, mode: str = "output",
                         head: str = "regression") -> np.ndarray:
    """Lo que OLR compara: salida final de la cabeza (o logits) o el último estado oculto."""
    if mode == "hidden":
        return trace.final_hidden.copy()
    if mode != "output":
        raise ModelError(f"unknown OLR mode {mode!r}")
    if head == "regression":
        return trace.outputs[-1:].copy()
    if head == "lm":
        return trace.logits[-1].copy()
    raise ModelError(f"unknown head {head!r}")


# ═══════════════════════════════════════════════════════════════════════════
# PÉRDIDAS
# ═══════════════════════════════════════════════════════════════════════════

def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def task_loss_regression(model: RecurrentModel, ids: Sequence[int], target: float) -> float:
    return float((forward(model, ids).final_output - target) ** 2)


def regression_batch_loss(model: RecurrentModel, items: Sequence[tuple[Sequence[int], float]]) -> float:
    if not items:
        raise ModelError("empty batch")
    return float(np.mean([task_loss_regression(model, ids, t) for ids, t in items]))


def _lm_loss_from_trace(trace: ForwardTrace) -> float:
    if len(trace) < 2:
        raise ModelError("language-model loss needs at least 2 tokens")
    logp = _log_softmax(trace.logits[:-1])
    targets = np.asarray(trace.ids[1:])
    return float(-logp[np.arange(len(targets)), targets].mean())


def task_loss_lm(model: RecurrentModel, ids: Sequence[int]) -> float:
    """Entropía cruzada media del siguiente token (teacher forcing)."""
    if len(ids) < 2:
        raise ModelError("language-model loss needs at least 2 tokens")
    return _lm_loss_from_trace(forward(model, ids))


def olr_loss(model: RecurrentModel, ids_a: Sequence[int], ids_b: Sequence[int],
             mode: str = "output", head: str = "regression") -> float:
    ra = final_representation(model, forward(model, ids_a), mode, head)
    rb = final_representation(model, forward(model, ids_b), mode, head)
    return float(((ra - rb) ** 2).sum())


@dataclass
class Objective:
    """Especificación de la pérdida combinada para un paso de entrenamiento."""
    regression: list[tuple[Sequence[int], float]] = field(default_factory=list)
    language: list[Sequence[int]] = field(default_factory=list)
    olr_pairs: list[tuple[Sequence[int], Sequence[int]]] = field(default_factory=list)
    olr_weight: float = 1.0
    olr_mode: str = "output"
    olr_head: str = "regression"


@dataclass(frozen=True)
class LossParts:
    total: float
    task: float
    olr: float


# ═══════════════════════════════════════════════════════════════════════════
# BACKWARD
# ═══════════════════════════════════════════════════════════════════════════

def zero_grads(model: RecurrentModel) -> Params:
    return {k: np.zeros_like(v) for k, v in model.params.items()}


def _backprop(model: RecurrentModel, trace: ForwardTrace, grads: Params, *,
              d_outputs: Optional[np.ndarray] = None, d_logits: Optional[np.ndarray] = None,
              d_final_hidden: Optional[np.ndarray] = None) -> None:
    """Acumula en `grads` el gradiente de una secuencia dados los gradientes de sus salidas."""
    p = model.params
    T, H = len(trace), model.hidden_width
    top, X = trace.hidden[-1], trace.embedded
    dH = np.zeros((T, H), dtype=model.dtype)
    dX = np.zeros_like(X)
    if d_outputs is not None:
        dH += np.outer(d_outputs, p["reg_C"])
        dX += np.outer(d_outputs, p["reg_D"])
        grads["reg_C"] += top.T @ d_outputs
        grads["reg_D"] += X.T @ d_outputs
        grads["reg_c"] += d_outputs.sum()
    if d_logits is not None:
        dH += d_logits @ p["lm_C"]
        dX += d_logits @ p["lm_D"]
        grads["lm_C"] += d_logits.T @ top
        grads["lm_D"] += d_logits.T @ X
        grads["lm_c"] += d_logits.sum(axis=0)
    if d_final_hidden is not None:
        dH[-1] += d_final_hidden

    for l in reversed(range(model.num_layers)):
        inputs, hs = trace.layer_inputs[l], trace.hidden[l]
        d_in = np.zeros_like(inputs)
        dh_next = np.zeros(H, dtype=model.dtype)
        if model.cell == "vanilla":
            A, B = p[f"A{l}"], p[f"B{l}"]
            _, dact = _ACTIVATIONS[model.nonlinearity]
            for t in reversed(range(T)):
                h_prev = hs[t - 1] if t > 0 else model.h0[l]
                da = (dH[t] + dh_next) * dact(hs[t])
                grads[f"A{l}"] += np.outer(da, h_prev)
                grads[f"B{l}"] += np.outer(da, inputs[t])
                grads[f"b{l}"] += da
                dh_next = A.T @ da
                d_in[t] = B.T @ da
        else:
            Wh, Wx = p[f"Wh{l}"], p[f"Wx{l}"]
            cs, gs = trace.cells[l], trace.gates[l]
            dc_next = np.zeros(H, dtype=model.dtype)
            for t in reversed(range(T)):
                h_prev = hs[t - 1] if t > 0 else model.h0[l]
                c_prev = cs[t - 1] if t > 0 else np.zeros(H, dtype=model.dtype)
                i, f, o, g = gs[t, :H], gs[t, H:2 * H], gs[t, 2 * H:3 * H], gs[t, 3 * H:]
                tc = np.tanh(cs[t])
                dh = dH[t] + dh_next
                dc = dh * o * (1.0 - tc * tc) + dc_next
                dz = np.concatenate([
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dh * tc * o * (1.0 - o),
                    dc * i * (1.0 - g * g),
                ])
                grads[f"Wh{l}"] += np.outer(dz, h_prev)
                grads[f"Wx{l}"] += np.outer(dz, inputs[t])
                grads[f"b{l}"] += dz
                dh_next = Wh.T @ dz
                dc_next = dc * f
                d_in[t] = Wx.T @ dz
        if l > 0:
            dH = d_in
        else:
            dX += d_in
    np.add.at(grads["E"], list(trace.ids), dX)


def backward(model: RecurrentModel, objective: Objective) -> tuple[LossParts, Params]:
    """Pérdida combinada y gradiente exacto respecto de todos los parámetros.

    Las secuencias se procesan en el orden en que vienen en `objective`, así
    que la suma es reproducible bit a bit.
    """
    grads = zero_grads(model)
    task = 0.0
    if objective.regression:
        w = 1.0 / len(objective.regression)
        for ids, target in objective.regression:
            trace = forward(model, ids)
            err = trace.final_output - float(target)
            task += w * err * err
            d_out = np.zeros(len(trace), dtype=model.dtype)
            d_out[-1] = w * 2.0 * err
            _backprop(model, trace, grads, d_outputs=d_out)
    if objective.language:
        w = 1.0 / len(objective.language)
        for ids in objective.language:
            trace = forward(model, ids)
            task += w * _lm_loss_from_trace(trace)
            steps = len(trace) - 1
            probs = np.exp(_log_softmax(trace.logits[:-1]))
            probs[np.arange(steps), np.asarray(trace.ids[1:])] -= 1.0
            d_logits = np.zeros_like(trace.logits)
            d_logits[:-1] = probs * (w / steps)
            _backprop(model, trace, grads, d_logits=d_logits)

    olr = 0.0
    if objective.olr_pairs and objective.olr_weight > 0.0:
        w = objective.olr_weight / len(objective.olr_pairs)
        for ids_a, ids_b in objective.olr_pairs:
            ta, tb = forward(model, ids_a), forward(model, ids_b)
            ra = final_representation(model, ta, objective.olr_mode, objective.olr_head)
            rb = final_representation(model, tb, objective.olr_mode, objective.olr_head)
            diff = ra - rb
            olr += float((diff * diff).sum()) / len(objective.olr_pairs)
            d = w * 2.0 * diff
            for trace, dr in ((ta, d), (tb, -d)):
                _backprop(model, trace, grads, **_rep_grad(model, trace, dr, objective))
    total = task + objective.olr_weight * olr
    return LossParts(total=float(total), task=float(task), olr=float(olr)), grads


def _rep_grad(model: RecurrentModel, trace: ForwardTrace, dr: np.ndarray, objective: Objective) -> dict:
    if objective.olr_mode == "hidden":
        return {"d_final_hidden": dr}
    if objective.olr_head == "regression":
        d_out = np.zeros(len(trace), dtype=model.dtype)
        d_out[-1] = dr[0]
        return {"d_outputs": d_out}
    d_logits = np.zeros_like(trace.logits)
    d_logits[-1] = dr
    return {"d_logits": d_logits}


def objective_loss(model: RecurrentModel, objective: Objective) -> float:
    """Solo el valor de la pérdida combinada (para diferencias finitas)."""
    task = 0.0
    if objective.regression:
        task += regression_batch_loss(model, objective.regression)
    if objective.language:
        task += float(np.mean([task_loss_lm(model, ids) for ids in objective.language]))
    olr = 0.0
    if objective.olr_pairs and objective.olr_weight > 0.0:
        olr = float(np.mean([olr_loss(model, a, b, objective.olr_mode, objective.olr_head)
                             for a, b in objective.olr_pairs]))
    return task + objective.olr_weight * olr


def gradient_check(model: RecurrentModel, objective: Objective, eps: float = 1e-5,
                   max_entries: Optional[int] = None, rng_seed: int = 0,
                   floor: float = 1e-6) -> float:
    """Máximo error relativo entre gradiente analítico y diferencias centrales.

    Con `max_entries` revisa solo esa cantidad de entradas al azar por parámetro.
    """
    _, analytic = backward(model, objective)
    rng = make_rng(rng_seed)
    worst = 0.0
    for name, value in model.params.items():
        flat = value.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        for k in idx:
            original = flat[k]
            flat[k] = original + eps
            plus = objective_loss(model, objective)
            flat[k] = original - eps
            minus = objective_loss(model, objective)
            flat[k] = original
            numeric = (plus - minus) / (2.0 * eps)
            exact = analytic[name].reshape(-1)[k]
            rel = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
            worst = max(worst, rel)
    return worst


# ═══════════════════════════════════════════════════════════════════════════
# OPTIMIZACIÓN
# ═══════════════════════════════════════════════════════════════════════════

def global_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


def clip_gradients(grads: Params, clip_norm: Optional[float]) -> tuple[Params, float]:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged(f"non-finite gradient in {name}")
    norm = global_norm(grads)
    if clip_norm is None or norm <= clip_norm or norm == 0.0:
        return grads, norm
    scale = clip_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def sgd_step(model: RecurrentModel, grads: Params, learning_rate: float,
             clip_norm: Optional[float] = None) -> RecurrentModel:
    if set(grads) != set(model.params):
        raise ModelError("gradient names do not match model parameters")
    clipped, _ = clip_gradients(grads, clip_norm)
    return model.with_params({k: v - learning_rate * clipped[k] for k, v in model.params.items()})


@dataclass
class AdamState:
    m: Params
    v: Params
    step: int = 0

    @classmethod
    def for_model(cls, model: RecurrentModel) -> "AdamState":
        return cls(zero_grads(model), zero_grads(model), 0)


def adam_step(model: RecurrentModel, grads: Params, state: AdamState, learning_rate: float,
              clip_norm: Optional[float] = None, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[RecurrentModel, AdamState]:
    clipped, _ = clip_gradients(grads, clip_norm)
    t = state.step + 1
    m = {k: beta1 * state.m[k] + (1 - beta1) * g for k, g in clipped.items()}
    v = {k: beta2 * state.v[k] + (1 - beta2) * g * g for k, g in clipped.items()}
    new = {}
    for k, p in model.params.items():
        m_hat = m[k] / (1 - beta1 ** t)
        v_hat = v[k] / (1 - beta2 ** t)
        new[k] = p - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return model.with_params(new), AdamState(m, v, t)


# ═══════════════════════════════════════════════════════════════════════════
# MUESTREO
# ═══════════════════════════════════════════════════════════════════════════

def sample_sequence(model: RecurrentModel, vocab: Vocabulary, max_len: int,
                    temperature: float = 1.0, rng_seed=0) -> list[int]:
    """Genera desde <bos> hasta <eos> o `max_len` tokens nuevos. temperature=0 → argmax."""
    if max_len < 1:
        raise ModelError("max_len must be >= 1")
    if temperature < 0:
        raise ModelError("temperature must be >= 0")
    if vocab.tokens != model.vocab.tokens:
        raise ModelError("vocabulary does not match the model")
    rng = make_rng(rng_seed)
    p = model.params
    H = model.hidden_width
    hs = [model.h0[l].copy() for l in range(model.num_layers)]
    cs = [np.zeros(H, dtype=model.dtype) for _ in range(model.num_layers)]
    ids = [vocab.bos]
    for _ in range(max_len):
        x = p["E"][ids[-1]]
        current = x
        for l in range(model.num_layers):
            hs[l], c, _ = _cell_step(model, l, hs[l], cs[l], current)
            if c is not None:
                cs[l] = c
            current = hs[l]
        logits = p["lm_C"] @ current + p["lm_D"] @ x + p["lm_c"]
        if temperature == 0:
            nxt = int(np.argmax(logits))
        else:
            probs = np.exp(_log_softmax(logits / temperature))
            nxt = int(rng.choice(len(probs), p=probs / probs.sum()))
        ids.append(nxt)
        if nxt == vocab.eos:
            break
    return ids


# ═══════════════════════════════════════════════════════════════════════════
# PUNTO DE CONTROL
# ═══════════════════════════════════════════════════════════════════════════

class ArraySpec(BaseModel):
    name: str
    shape: list[int]


class CheckpointHeader(BaseModel):
    format_version: int
    cell: Literal["vanilla", "lstm"]
    nonlinearity: Literal["tanh", "sigmoid", "identity"]
    hidden_width: int
    embedding_width: int
    num_layers: int
    dtype: Literal["float64", "float32"]
    vocab_tokens: list[str]
    vocab_anonymized: bool
    arrays: list[ArraySpec]
    metadata: dict[str, str] = {}


def save_checkpoint(model: RecurrentModel, path: str | Path) -> None:
    """Cabecera JSON en una línea y luego los arreglos little-endian en orden fijo."""
    names = parameter_names(model.cell, model.num_layers)
    arrays = [(n, model.params[n]) for n in names] + [("h0", model.h0)]
    dtype = str(model.dtype)
    header = CheckpointHeader(
        format_version=CHECKPOINT_VERSION, cell=model.cell, nonlinearity=model.nonlinearity,
        hidden_width=model.hidden_width, embedding_width=model.embedding_width,
        num_layers=model.num_layers, dtype=dtype, vocab_tokens=list(model.vocab.tokens),
        vocab_anonymized=model.vocab.anonymized,
        arrays=[ArraySpec(name=n, shape=list(a.shape)) for n, a in arrays],
        metadata=dict(sorted(model.metadata.items())),
    )
    le = np.dtype(dtype).newbyteorder("<")
    payload = b"".join(np.ascontiguousarray(a, dtype=le).tobytes() for _, a in arrays)
    Path(path).write_bytes(CHECKPOINT_MAGIC + header.model_dump_json().encode("utf-8") + b"\n" + payload)
    logger.info(f"punto de control guardado en {path} ({len(payload)} bytes de parámetros)")


def load_checkpoint(path: str | Path) -> RecurrentModel:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path} is not a model checkpoint")
    rest = raw[len(CHECKPOINT_MAGIC):]
    cut = rest.find(b"\n")
    if cut < 0:
        raise CheckpointError("checkpoint header is truncated")
    try:
        header = CheckpointHeader(**json.loads(rest[:cut].decode("utf-8")))
    except (ValueError, ValidationError) as e:
        raise CheckpointError(f"bad checkpoint header: {e}") from None
    if header.format_version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.format_version}")
    le = np.dtype(header.dtype).newbyteorder("<")
    payload = rest[cut + 1:]
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for spec in header.arrays:
        count = int(np.prod(spec.shape)) if spec.shape else 1
        size = count * le.itemsize
        if offset + size > len(payload):
            raise CheckpointError(f"checkpoint payload truncated at {spec.name}")
        arrays[spec.name] = (np.frombuffer(payload, dtype=le, count=count, offset=offset)
                             .reshape(spec.shape).astype(header.dtype))
        offset += size
    if offset != len(payload):
        raise CheckpointError("checkpoint has trailing bytes")
    if "h0" not in arrays:
        raise CheckpointError("checkpoint lacks h0")
    h0 = arrays.pop("h0")
    vocab = Vocabulary(tuple(header.vocab_tokens), header.vocab_anonymized)
    try:
        return RecurrentModel(header.cell, header.nonlinearity, header.hidden_width,
                              header.embedding_width, header.num_layers, vocab, arrays, h0,
                              dict(header.metadata))
    except ModelError as e:
        raise CheckpointError(f"inconsistent checkpoint: {e}") from None
