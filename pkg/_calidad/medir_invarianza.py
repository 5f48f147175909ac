#!/usr/bin/env python3
"""
Mide cuánto depende la salida del orden de recorrido, con y sin OLR.

QUÉ MIDE
--------
Se entrenan dos modelos gemelos (misma semilla, mismos datos) sobre árboles
pequeños: uno con λ = 0 y otro con un λ muy alto (1000 por defecto). Para
cada árbol de prueba el oráculo enumera TODOS los subgrafos inducidos por
DFS y todas sus ordenaciones, y toma la mayor diferencia cuadrática de la
salida entre dos ordenaciones con el mismo nodo final.

Con λ alto la brecha debe caer frente a λ = 0. El oráculo es exhaustivo, así
que n queda acotado por `oracle_max_nodes` (8 por defecto).

USO
---
    python _calidad/medir_invarianza.py
    python _calidad/medir_invarianza.py --n 6 --lam 100 --mode hidden --seed 3
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

RAIZ = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(RAIZ))

from config import build_config, parse_overrides, setup_logging  # noqa: E402
from dfs_orders import structure_invariance_gap  # noqa: E402
from pipeline import build_datasets, evaluate_regression  # noqa: E402
from training import train  # noqa: E402


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=7, help="nodos por árbol (≤ oracle_max_nodes)")
    p.add_argument("--lam", type=float, default=1000.0, help="λ del modelo regularizado")
    p.add_argument("--mode", choices=["output", "hidden"], default="output")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--test", type=int, default=20, help="árboles de prueba a recorrer con el oráculo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = p.parse_args()
    setup_logging("WARNING")

    valores = {**parse_overrides(args.set), "task": "wiener_regression", "n": args.n,
               "test_size": args.test, "epochs": args.epochs, "seed": args.seed,
               "olr_mode": args.mode}
    brechas, mae = {}, {}
    for lam in (0.0, args.lam):
        cfg = build_config({**valores, "olr_weight": lam})
        entrenamiento, prueba = build_datasets(cfg)
        modelo = train(cfg, entrenamiento).model
        mae[lam] = evaluate_regression(modelo, prueba).mae
        brechas[lam] = [structure_invariance_gap(modelo, it.graph, modelo.vocab, mode=args.mode,
                                                 max_nodes=cfg.oracle_max_nodes)
                        for it in prueba]

    print(f"\nBrecha de invariancia · n={args.n} · modo={args.mode} · {args.test} árboles de prueba")
    print("─" * 64)
    print(f"{'λ':>8} {'brecha media':>14} {'brecha máx':>12} {'MAE prueba':>12}")
    for lam, valores_brecha in brechas.items():
        print(f"{lam:>8g} {np.mean(valores_brecha):>14.6f} {np.max(valores_brecha):>12.6f} {mae[lam]:>12.4f}")
    print("─" * 64)
    base, regularizada = np.mean(brechas[0.0]), np.mean(brechas[args.lam])
    if regularizada < base:
        print(f"✅ λ={args.lam:g} reduce la brecha media {base / max(regularizada, 1e-12):.1f}×")
    else:
        print(f"⚠️ λ={args.lam:g} no reduce la brecha media ({regularizada:.6f} ≥ {base:.6f})")


if __name__ == "__main__":
    main()
