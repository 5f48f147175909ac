"""
Configuración del kit de entrenamiento con regularización por orden (OLR)
=========================================================================
Un solo lugar para tres cosas:

  1. Constantes de entorno (se leen una vez, con `load_dotenv()`), igual que
     los topes de caché y de cuotas del resto del código.
  2. `ExperimentConfig`: el experimento completo en un modelo pydantic
     congelado. Claves desconocidas o valores fuera de rango se rechazan al
     cargar, antes de generar un solo grafo.
  3. `derive_seed`: semillas por elemento derivadas de la semilla maestra,
     para que el resultado no dependa del número de procesos.

FORMATO DEL ARCHIVO
-------------------
Texto plano `clave=valor`, una por línea. `#` abre comentario. Las banderas
de la línea de comandos (`--set clave=valor`) pisan al archivo.

    task=wiener_regression
    n=10
    olr_weight=1.0   # λ
"""
from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path
from typing import Literal, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

load_dotenv()

# ═══════════════════════════════════════════════════════════════════════════
# ENTORNO
# ═══════════════════════════════════════════════════════════════════════════

# Tope del oráculo exhaustivo. Con 8 nodos una estrella ya da 7! = 5040
# recorridos; con 10 se pasa del millón y el oráculo deja de ser oráculo.
ORACLE_MAX_NODES = int(os.getenv("ORACLE_MAX_NODES", "8"))

# Intentos de muestreo por rechazo para recorridos con extremo fijo (2-cortes).
END_CONSTRAINED_ATTEMPTS = int(os.getenv("END_CONSTRAINED_ATTEMPTS", "200"))

# Re-muestreos del subgrafo inducido antes de rendirse en un par OLR.
PAIR_RESAMPLE_ATTEMPTS = int(os.getenv("PAIR_RESAMPLE_ATTEMPTS", "20"))

TRAJECTORY_WORKERS = int(os.getenv("TRAJECTORY_WORKERS", "1"))
LOG_LEVEL = os.getenv("OLR_LOG_LEVEL", "INFO")

logger = logging.getLogger("config")


class ConfigError(ValueError):
    """Archivo o banderas de configuración inválidos."""


def setup_logging(level: Optional[str] = None) -> None:
    """Formato único para todos los loggers del kit (CLI y scripts de _calidad)."""
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )


def derive_seed(master: int, *labels: object) -> int:
    """Semilla estable para (master, etiquetas...). SHA-256, 63 bits."""
    material = "\x1f".join([str(int(master))] + [str(x) for x in labels])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


# ═══════════════════════════════════════════════════════════════════════════
# EXPERIMENTO
# ═══════════════════════════════════════════════════════════════════════════

class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    task: Literal["wiener_regression", "tree_lm"] = "wiener_regression"
    graph_mode: Literal["tree", "general"] = "tree"
    n: int = Field(10, ge=1)
    extra_edges: int = Field(0, ge=0)
    train_size: int = Field(50, ge=1)
    test_size: int = Field(200, ge=1)

    cell: Literal["vanilla", "lstm"] = "lstm"
    nonlinearity: Literal["tanh", "sigmoid", "identity"] = "tanh"
    hidden_width: int = Field(100, ge=1)
    embedding_width: int = Field(16, ge=1)
    num_layers: int = Field(1, ge=1)
    vocab_mode: Literal["anonymized", "labeled"] = "anonymized"
    label_alphabet: str = Field("CNO", min_length=1)

    olr_weight: float = Field(1.0, ge=0.0)
    olr_mode: Literal["output", "hidden"] = "output"
    pair_source: Literal["full_graph", "dfs_subgraph"] = "full_graph"
    trajectory_count: int = Field(10, ge=2)

    optimizer: Literal["adam", "sgd"] = "adam"
    epochs: int = Field(400, ge=1)
    learning_rate: float = Field(0.005, gt=0.0)
    clip_norm: float = Field(5.0, gt=0.0)
    batch_size: int = Field(10, ge=1)
    plateau_window: int = Field(50, ge=1)
    plateau_tolerance: float = Field(1e-4, ge=0.0)
    sequence_mode: Literal["sampled", "canonical", "randomized"] = "sampled"

    seed: int = Field(0, ge=0)
    oracle_max_nodes: int = Field(ORACLE_MAX_NODES, ge=1)

    @model_validator(mode="after")
    def _check_sizes(self) -> "ExperimentConfig":
        if self.graph_mode == "tree" and self.extra_edges:
            raise ValueError("extra_edges requires graph_mode=general")
        max_extra = self.n * (self.n - 1) // 2 - (self.n - 1)
        if self.extra_edges > max_extra:
            raise ValueError(f"extra_edges={self.extra_edges} infeasible for n={self.n} (max {max_extra})")
        if len(set(self.label_alphabet)) != len(self.label_alphabet):
            raise ValueError("label_alphabet has repeated symbols")
        if any(ch in "()|" or ch.isspace() for ch in self.label_alphabet):
            raise ValueError("label_alphabet cannot contain '(', ')', '|' or whitespace")
        return self

    def to_lines(self) -> list[str]:
        """`clave=valor` en el orden de los campos; se usa como eco en bitácoras."""
        return [f"{k}={v}" for k, v in self.model_dump().items()]


# ── Lectura ──

def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {num}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {num}: empty key")
        out[key] = value
    return out


def parse_overrides(pairs: Optional[list[str]]) -> dict[str, str]:
    """Convierte `['n=12', 'seed=3']` (de `--set`) en diccionario."""
    out: dict[str, str] = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_config(values: Mapping[str, object]) -> ExperimentConfig:
    try:
        return ExperimentConfig(**dict(values))
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from None


def load_config(path: Optional[str | Path] = None,
                overrides: Optional[Mapping[str, object]] = None) -> ExperimentConfig:
    values: dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        values.update(parse_config_text(text))
    values.update(overrides or {})
    cfg = build_config(values)
    logger.debug(f"config cargada: {cfg.model_dump()}")
    return cfg
