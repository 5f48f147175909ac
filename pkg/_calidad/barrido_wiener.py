#!/usr/bin/env python3
"""
Barrido pareado Vanilla vs OLR sobre la regresión del índice de Wiener.

QUÉ MIDE
--------
Para cada semilla se construye UN conjunto de datos (árboles de n nodos,
50 de entrenamiento y 200 de prueba por defecto) y se entrena el mismo
modelo con λ = 0 y con cada λ del barrido. Misma semilla ⇒ misma
inicialización, mismo barajado y mismos datos; lo único que cambia es el
término OLR. Por eso la comparación es pareada: se cuenta en cuántas
semillas el modelo regularizado tiene menor MAE que su gemelo sin OLR.

Reporta por λ:  MAE medio, exactitud con redondeo media y victorias pareadas.

USO
---
    python _calidad/barrido_wiener.py                          # 5 semillas, λ ∈ {0.1, 1, 10}
    python _calidad/barrido_wiener.py --seeds 10 --epochs 200 --cell vanilla
    python _calidad/barrido_wiener.py --set hidden_width=50 --lambdas 1 100
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

RAIZ = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(RAIZ))

from config import build_config, parse_overrides, setup_logging  # noqa: E402
from pipeline import build_datasets, evaluate_regression  # noqa: E402
from training import train  # noqa: E402


def correr(valores: dict, semilla: int, lam: float):
    cfg = build_config({**valores, "seed": semilla, "olr_weight": lam})
    entrenamiento, prueba = build_datasets(cfg)
    resultado = train(cfg, entrenamiento)
    return evaluate_regression(resultado.model, prueba), resultado.stop_reason


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=5, help="semillas pareadas")
    p.add_argument("--lambdas", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--cell", choices=["lstm", "vanilla"], default="lstm")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="cualquier otro campo de la configuración")
    args = p.parse_args()
    setup_logging("WARNING")

    valores = {**parse_overrides(args.set), "task": "wiener_regression",
               "epochs": args.epochs, "cell": args.cell}
    lambdas = [0.0] + [lam for lam in args.lambdas if lam != 0.0]
    mae = {lam: [] for lam in lambdas}
    acc = {lam: [] for lam in lambdas}

    print(f"\nBarrido Wiener · {args.cell} · {args.epochs} épocas · {args.seeds} semillas")
    print("─" * 72)
    print(f"{'semilla':>8} {'λ':>8} {'MAE':>10} {'exactitud':>10} {'parada':>14}")
    for semilla in range(args.seeds):
        for lam in lambdas:
            m, parada = correr(valores, semilla, lam)
            mae[lam].append(m.mae)
            acc[lam].append(m.rounded_accuracy)
            print(f"{semilla:>8} {lam:>8g} {m.mae:>10.4f} {m.rounded_accuracy:>10.3f} {parada:>14}")

    print("─" * 72)
    print(f"{'λ':>8} {'MAE medio':>12} {'exactitud':>10} {'victorias vs λ=0':>18}")
    base = np.asarray(mae[0.0])
    for lam in lambdas:
        actual = np.asarray(mae[lam])
        victorias = "—" if lam == 0.0 else f"{int((actual < base).sum())}/{len(base)}"
        print(f"{lam:>8g} {actual.mean():>12.4f} {np.mean(acc[lam]):>10.3f} {victorias:>18}")
    mejor = min(lambdas[1:], key=lambda lam: np.mean(mae[lam]), default=None)
    if mejor is not None and np.mean(mae[mejor]) < base.mean():
        print(f"\n✅ OLR (λ={mejor:g}) baja el MAE medio de {base.mean():.4f} a {np.mean(mae[mejor]):.4f}")
    else:
        print("\n⚠️ ningún λ mejora el MAE medio de la línea base")


if __name__ == "__main__":
    main()
