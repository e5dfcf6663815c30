#!/usr/bin/env python3
"""
Ejemplo de uso de quantclt.
Este script muestra los objetos analíticos, una muestra de trayectorias y un
experimento de covarianza pequeño.
"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

import math

from quantclt import analytic, empirical, harness
from quantclt.errors import QuantCLTError
from quantclt.models import PASS, ExperimentConfig, ExperimentKind, LevelGrid, ProcessSpec, TimeGrid
from quantclt.process_gen import gen_path_batch


def main():
    """Función principal que recorre las piezas del paquete."""
    print("=== TCL de cuantiles - Ejemplo de Uso ===\n")

    # Objetos analíticos
    print("--- ANALÍTICO ---")
    f0 = analytic.stable_density(2.0, 0.5, 1.0, 0.0)
    print(f"✓ Densidad browniana en 0: {f0:.10f} (1/sqrt(2 pi) = {1 / math.sqrt(2 * math.pi):.10f})")
    q = analytic.stable_quantile(1.0, 1.0, 1.0, 0.75)
    print(f"✓ Cuartil superior de Cauchy: {q:.10f}")
    var = analytic.limit_cov_quantile_stable(2.0, 0.5, 1.0, 0.5, 1.0, 0.5)
    print(f"✓ Varianza límite de la mediana browniana: {var:.6f} (pi/2 = {math.pi / 2:.6f})")

    # Trayectorias y cuantiles empíricos
    print("\n--- TRAYECTORIAS ---")
    spec = ProcessSpec.brownian_motion()
    grid = TimeGrid.uniform(1.0, 5)
    levels = LevelGrid.create([0.25, 0.5, 0.75])
    batch = gen_path_batch(spec, grid, 400, seed=1)
    tau = analytic.marginal_law(spec).quantile_matrix(grid.points, levels.levels)
    field = empirical.quantile_field(batch, levels, tau)
    print(f"✓ {batch.n} trayectorias en {grid.size} tiempos")
    print(f"  tau_n(1, 1/2) = {field.tau_n[-1, 1]:+.4f}, tau(1, 1/2) = {tau[-1, 1]:+.4f}")
    print(f"  W_n(1, 3/4) = {field.w_n[-1, 2]:+.4f}")

    # Experimento Monte Carlo
    print("\n--- EXPERIMENTO ---")
    config = ExperimentConfig(
        ExperimentKind.COV_CONVERGENCE, n=200, R=400, seed=2024, spec=spec,
        grid=TimeGrid.create([0.0, 0.5, 1.0]), levels=LevelGrid.create([0.5]),
        pairs=((1.0, 0.5, 1.0, 0.5), (0.5, 0.5, 1.0, 0.5)),
    )
    report = harness.run_cov_convergence(config, threads=2)
    for row in report.rows:
        mark = "✓" if row.verdict == PASS else "✗"
        print(f"{mark} Cov(W({row.pair_s:g},{row.pair_beta:g}), W({row.pair_t:g},{row.pair_alpha:g})) = "
              f"{row.estimate:.4f} ± {row.se:.4f}, límite {row.analytic:.4f}, z = {row.z:+.2f}")

    # Errores
    print("\n--- ERRORES ---")
    try:
        analytic.stable_quantile(3.0, 1.0, 1.0, 0.5)
    except QuantCLTError as e:
        print(f"✓ Error esperado: {e}")

    print("\n=== Ejemplo completado ===")


if __name__ == "__main__":
    main()
