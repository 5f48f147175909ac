#!/usr/bin/env python3
"""
Línea de comandos del kit OLR
=============================
Cada etapa del experimento es un subcomando; toda la aleatoriedad sale de
`--seed` (o de la semilla de la configuración), nunca del reloj.

USO
---
    python cli.py gen-graphs --n 10 --count 50 --seed 7 --out train.g
    python cli.py trajectories --in train.g --count 10 --seed 7 --out train.traj
    python cli.py filter --in train.traj --graphs train.g --min 10 --out kept.traj
    python cli.py train --config wiener.cfg --data train.g --out-model m.ckpt --log train.log
    python cli.py eval --model m.ckpt --data test.g --metrics-out test.metrics
    python cli.py generate --model lm.ckpt --count 100 --seed 3
    python cli.py oracle --in small.g --mode end-at --vertex 2
    python cli.py wiener --in train.g
    python cli.py stats --in train.g --trajectories train.traj

CÓDIGOS DE SALIDA
-----------------
    0  bien
    1  uso incorrecto (banderas faltantes o inválidas)
    2  datos inválidos (archivo corrupto, configuración, vocabulario, cota del oráculo)
    3  falla en ejecución (entrenamiento divergente, re-sorteos agotados, salida no escribible)
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Optional

from config import TRAJECTORY_WORKERS, derive_seed, load_config, parse_overrides, setup_logging
from dfs_orders import (
    enumerate_orderings,
    enumerate_orderings_ending_at,
    head_for_model,
    structure_invariance_gap,
)
from graph_core import (
    connectivity_stats,
    random_connected_graph,
    random_tree,
    read_graph_file,
    wiener_index,
    write_graph_file,
)
from pipeline import (
    PipelineError,
    SinkError,
    build_datasets,
    canonical_sample,
    dataset_from_graphs,
    evaluate_generation,
    evaluate_regression,
    filter_records,
    metrics_lines,
    precompute_trajectories,
    read_trajectory_file,
    reference_strings,
    retention_report,
    vocabulary_for,
    write_predictions,
    write_trajectory_file,
)
from recurrent import load_checkpoint, sample_sequence, save_checkpoint
from seq_codec import CodecError
from training import config_from_metadata, train

logger = logging.getLogger("cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def _write_lines(path: Optional[str], lines: list[str]) -> None:
    if not path:
        return
    try:
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as e:
        raise SinkError(f"cannot write {path}: {e}") from e


# ═══════════════════════════════════════════════════════════════════════════
# SUBCOMANDOS
# ═══════════════════════════════════════════════════════════════════════════

def cmd_gen_graphs(args) -> int:
    graphs = []
    for i in range(args.count):
        seed = derive_seed(args.seed, "gen-graphs", i)
        if args.extra_edges:
            g = random_connected_graph(args.n, args.extra_edges, seed, args.labels)
        else:
            g = random_tree(args.n, seed, args.labels)
        graphs.append((str(i), g))
    try:
        write_graph_file(args.out, graphs)
    except OSError as e:
        raise SinkError(f"cannot write {args.out}: {e}") from e
    print(f"✅ {len(graphs)} grafos escritos en {args.out}")
    return 0


def cmd_trajectories(args) -> int:
    graphs = read_graph_file(args.input)
    summary = precompute_trajectories(graphs, args.count, args.seed, args.out,
                                      end_vertex=args.end_vertex, workers=args.workers)
    print(f"✅ {summary.written} registros escritos en {args.out}; {len(summary.skipped)} grafos omitidos")
    for reason, n in sorted(Counter(r for _, r in summary.skipped).items()):
        print(f"⚠️ omitidos ({n}): {reason}")
    return 0


def cmd_filter(args) -> int:
    graphs = dict(read_graph_file(args.graphs))
    records = read_trajectory_file(args.input, graphs)
    result = filter_records(records, args.min)
    write_trajectory_file(args.out, result.kept)
    print(f"✅ conservados={len(result.kept)} descartados={result.dropped} retention={result.retention!r}")
    return 0


def _overrides(args) -> dict[str, object]:
    values: dict[str, object] = dict(parse_overrides(args.set))
    for key in ("seed", "olr_weight", "epochs"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    return values


def cmd_train(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    test_set = None
    if args.data:
        graphs = read_graph_file(args.data)
        if not graphs:
            raise PipelineError(f"{args.data} has no graphs")
        train_set = dataset_from_graphs(graphs, cfg)
        if args.test_data:
            test_set = dataset_from_graphs(read_graph_file(args.test_data), cfg)
    else:
        if args.trajectories:
            raise UsageError("--trajectories needs --data (the companion graph file)")
        train_set, test_set = build_datasets(cfg)

    records = None
    if args.trajectories:
        records = {r.graph_id: r for r in read_trajectory_file(args.trajectories, dict(graphs))}

    try:
        sink = open(args.log, "w", encoding="utf-8")
    except OSError as e:
        raise SinkError(f"cannot write {args.log}: {e}") from e
    with sink:
        result = train(cfg, train_set, records=records, log_sink=sink)
    try:
        save_checkpoint(result.model, args.out_model)
    except OSError as e:
        raise SinkError(f"cannot write {args.out_model}: {e}") from e
    last = result.log[-1]
    print(f"✅ {last.line()} stop={result.stop_reason}")

    if test_set and cfg.task == "wiener_regression":
        metrics = evaluate_regression(result.model, test_set)
        lines = metrics_lines(metrics.as_dict())
        print("\n".join(lines))
        _write_lines(args.metrics_out, lines)
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.model)
    cfg = config_from_metadata(model.metadata)
    vocab = vocabulary_for(cfg)
    if vocab.tokens != model.vocab.tokens:
        raise CodecError("checkpoint vocabulary does not match its configuration")
    graphs = read_graph_file(args.data)
    if not graphs:
        raise PipelineError(f"{args.data} has no graphs")
    items = dataset_from_graphs(graphs, cfg)

    if cfg.task == "wiener_regression":
        metrics = evaluate_regression(model, items)
        lines = metrics_lines(metrics.as_dict())
        if args.predictions_out:
            write_predictions(args.predictions_out, metrics)
    else:
        ks = args.k or [min(10, args.samples)]
        metrics, _ = evaluate_generation(model, model.vocab, reference_strings(items, model.vocab), ks,
                                         args.samples, args.seed, max_len=args.max_len)
        lines = metrics_lines(metrics.as_dict())
    print("\n".join(lines))
    _write_lines(args.metrics_out, lines)
    return 0


def cmd_generate(args) -> int:
    model = load_checkpoint(args.model)
    samples = [canonical_sample(sample_sequence(model, model.vocab, args.max_len, args.temperature,
                                                derive_seed(args.seed, "sample", i)), model.vocab)
               for i in range(args.count)]
    valid = [s for s in samples if s is not None]
    if args.out:
        _write_lines(args.out, valid)
    else:
        for s in valid:
            print(s)
    print(f"✅ {len(valid)}/{len(samples)} muestras válidas")
    return 0


def cmd_oracle(args) -> int:
    graphs = read_graph_file(args.input)
    model = load_checkpoint(args.model) if args.model else None
    for gid, g in graphs:
        if args.mode == "enumerate":
            found = sorted(enumerate_orderings(g, args.max_nodes))
        elif args.mode == "end-at":
            if args.vertex is None:
                raise UsageError("--mode end-at needs --vertex")
            found = sorted(enumerate_orderings_ending_at(g, args.vertex, args.max_nodes))
        else:
            if model is None:
                raise UsageError("--mode invariance-gap needs --model")
            gap = structure_invariance_gap(model, g, model.vocab,
                                           mode=model.metadata.get("cfg.olr_mode", "output"),
                                           head=head_for_model(model), max_nodes=args.max_nodes)
            print(f"{gid}\tgap={gap!r}")
            continue
        print(f"{gid}\t{len(found)}")
        for seq in found:
            print("\t" + ",".join(str(v) for v in seq))
    return 0


def cmd_wiener(args) -> int:
    lines = [f"{gid}={wiener_index(g)}" for gid, g in read_graph_file(args.input)]
    if args.out:
        _write_lines(args.out, lines)
    else:
        print("\n".join(lines))
    return 0


def cmd_stats(args) -> int:
    graphs = read_graph_file(args.input)
    stats = connectivity_stats(g for _, g in graphs)
    lines = [f"graphs={len(graphs)}"] + metrics_lines(stats)
    if args.trajectories:
        records = read_trajectory_file(args.trajectories, dict(graphs))
        lines += [f"retention_at_{t}={v!r}" for t, v in retention_report(records, len(graphs)).items()]
    print("\n".join(lines))
    return 0


# ═══════════════════════════════════════════════════════════════════════════
# PARSER
# ═══════════════════════════════════════════════════════════════════════════

def build_parser() -> _Parser:
    parser = _Parser(prog="cli.py", description="Order-invariant recurrent models over DFS traversals")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graphs", help="random trees or connected graphs")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--extra-edges", type=int, default=0)
    p.add_argument("--labels", default=None, help="node label alphabet, e.g. CNO")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gen_graphs)

    p = sub.add_parser("trajectories", help="same-end DFS trajectory sets per graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--count", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--end-vertex", type=int, default=None)
    p.add_argument("--workers", type=_positive_int, default=TRAJECTORY_WORKERS)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_trajectories)

    p = sub.add_parser("filter", help="keep graphs with enough distinct trajectories")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--min", type=_positive_int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_filter)

    p = sub.add_parser("train", help="train a recurrent model with optional OLR")
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--olr-weight", type=float, default=None)
    p.add_argument("--epochs", type=_positive_int, default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--test-data", default=None)
    p.add_argument("--trajectories", default=None)
    p.add_argument("--out-model", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--metrics-out", default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="regression or generation metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metrics-out", default=None)
    p.add_argument("--predictions-out", default=None)
    p.add_argument("--samples", type=_positive_int, default=100)
    p.add_argument("--k", type=_positive_int, action="append", default=None)
    p.add_argument("--max-len", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("generate", help="sample sequences from a language model")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=_positive_int, default=10)
    p.add_argument("--max-len", type=_positive_int, default=200)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("oracle", help="exhaustive DFS orderings (small graphs only)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=["enumerate", "end-at", "invariance-gap"], required=True)
    p.add_argument("--vertex", type=int, default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--max-nodes", type=_positive_int, default=None)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("wiener", help="Wiener index per graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_wiener)

    p = sub.add_parser("stats", help="edge-connectivity classes and trajectory retention")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--trajectories", default=None)
    p.set_defaults(handler=cmd_stats)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    setup_logging()
    try:
        return args.handler(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"🚨 {e}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as e:
        print(f"🚨 {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
