"""Generadores de trayectorias i.i.d. sobre una malla fija.

Todas las funciones son puras dadas (proceso, malla, n, semilla, réplica): el
flujo aleatorio se deriva de la semilla maestra y de la réplica con ``rng.stream``,
de modo que el resultado no depende de qué hilo lo ejecute.
"""
from functools import lru_cache
from typing import Tuple
import logging
import math

import numpy as np
from scipy import linalg

from .errors import FactorizationError, ParameterError
from .models import (
    PathBatch,
    ProcessKind,
    ProcessSpec,
    Sampler,
    SeedInfo,
    TimeGrid,
    TimeGrid2D,
)
from .rng import PATHS, SHIFT, StreamIds, as_stream_ids, stream

LOGGER = logging.getLogger(__name__)

JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

# Trayectorias de Poisson compuesto generadas por bloque
POISSON_BLOCK = 100_000


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise ParameterError(f"n debe ser un entero >= 1, se recibió {n}")
    return int(n)


def _require_grid(grid, expected, what: str):
    if not isinstance(grid, expected):
        raise ParameterError(f"{what} necesita una {expected.__name__}, se recibió {type(grid).__name__}")


# --------------------------------------------------------------------------
# Procesos gaussianos: factorización exacta de la covarianza
# --------------------------------------------------------------------------

def fbm_covariance(times: np.ndarray, gamma: float) -> np.ndarray:
    """Cov(X_s, X_t) = (s^{2γ} + t^{2γ} - |s-t|^{2γ}) / 2."""
    s = np.asarray(times, dtype=float)[:, None]
    t = np.asarray(times, dtype=float)[None, :]
    h = 2.0 * gamma
    return 0.5 * (s ** h + t ** h - np.abs(s - t) ** h)


def cholesky_with_jitter(cov: np.ndarray, context: str) -> np.ndarray:
    """Factor triangular inferior L con L L^T = cov + jitter*I.

    Se prueba primero sin jitter y luego con jitter creciente hasta 1e-8; si
    ninguno basta se lanza FactorizationError con el contexto recibido.
    """
    eye = np.eye(cov.shape[0])
    for jitter in JITTERS:
        try:
            factor = linalg.cholesky(cov + jitter * eye, lower=True)
        except linalg.LinAlgError:
            continue
        if jitter > 0:
            LOGGER.warning("Covarianza regularizada con jitter %.0e (%s)", jitter, context)
        return factor
    raise FactorizationError(
        f"La covarianza no es definida positiva ni con jitter {JITTERS[-1]:.0e} ({context})"
    )


@lru_cache(maxsize=64)
def _fbm_factor(times: Tuple[float, ...], gamma: float) -> np.ndarray:
    factor = cholesky_with_jitter(
        fbm_covariance(np.asarray(times), gamma),
        f"fBm gamma={gamma}, malla={list(times)}",
    )
    factor.flags.writeable = False
    return factor


@lru_cache(maxsize=64)
def _min_factor(points: Tuple[float, ...]) -> np.ndarray:
    p = np.asarray(points)
    factor = cholesky_with_jitter(
        np.minimum(p[:, None], p[None, :]),
        f"sábana browniana, eje={list(points)}",
    )
    factor.flags.writeable = False
    return factor


def gen_fbm(grid: TimeGrid, gamma: float, n: int, seed: int,
            replication: StreamIds = 0) -> PathBatch:
    """n trayectorias de fBm de índice gamma, muestreadas con la covarianza exacta.

    La columna de t=0 es exactamente 0; sólo se factoriza la parte t > 0.
    """
    _require_grid(grid, TimeGrid, "gen_fbm")
    spec = ProcessSpec.fbm(gamma)
    n = _check_n(n)
    ids = as_stream_ids(replication)
    rng = stream(seed, PATHS, *ids)

    times = grid.as_array()
    positive = times > 0
    factor = _fbm_factor(tuple(times[positive]), spec.gamma)
    values = np.zeros((n, grid.size))
    values[:, positive] = rng.standard_normal((n, factor.shape[0])) @ factor.T
    return PathBatch(grid, values, SeedInfo(seed, (PATHS,) + ids), spec)


def gen_brownian_sheet(grid2d: TimeGrid2D, n: int, seed: int,
                       replication: StreamIds = 0) -> PathBatch:
    """Sábana browniana en [0,T]^2 con Cov = (s1∧t1)(s2∧t2).

    La covarianza es separable, así que Y = Lx Z Ly^T con Z matriz de normales
    independientes. El campo se aplana por filas: columna i*my + j = (x_i, y_j).
    """
    _require_grid(grid2d, TimeGrid2D, "gen_brownian_sheet")
    n = _check_n(n)
    ids = as_stream_ids(replication)
    rng = stream(seed, PATHS, *ids)

    mx, my = grid2d.shape
    lx = _min_factor(grid2d.points_x[1:])
    ly = _min_factor(grid2d.points_y[1:])
    z = rng.standard_normal((n, mx - 1, my - 1))
    field = np.zeros((n, mx, my))
    field[:, 1:, 1:] = lx @ z @ ly.T
    return PathBatch(grid2d, field.reshape(n, mx * my), SeedInfo(seed, (PATHS,) + ids),
                     ProcessSpec.brownian_sheet())


def sheet_index(grid2d: TimeGrid2D, i: int, j: int) -> int:
    """Columna del PathBatch que corresponde al punto (x_i, y_j)."""
    mx, my = grid2d.shape
    if not (0 <= i < mx and 0 <= j < my):
        raise ParameterError(f"Índices ({i}, {j}) fuera de la malla {mx}x{my}")
    return grid2d.flat_index(i, j)


# --------------------------------------------------------------------------
# Procesos estables simétricos
# --------------------------------------------------------------------------

def sample_sym_stable(rng: np.random.Generator, r: float, c: float, size) -> np.ndarray:
    """Variables estables simétricas con función característica exp(-c|u|^r).

    Chambers-Mallows-Stuck para r distinto de 1 y 2; Cauchy por inversión
    (c tan V) para r = 1 y normal de varianza 2c para r = 2.
    """
    if r == 2.0:
        return rng.normal(0.0, math.sqrt(2.0 * c), size)
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    if r == 1.0:
        return c * np.tan(v)
    w = np.maximum(rng.standard_exponential(size), np.finfo(float).tiny)
    s = (np.sin(r * v) / np.cos(v) ** (1.0 / r)) \
        * (np.cos((1.0 - r) * v) / w) ** ((1.0 - r) / r)
    return c ** (1.0 / r) * s


def gen_sym_stable(grid: TimeGrid, r: float, c: float, n: int, seed: int,
                   replication: StreamIds = 0) -> PathBatch:
    """Proceso estable simétrico con incrementos estacionarios independientes.

    El incremento sobre [t_j, t_{j+1}] es (t_{j+1}-t_j)^{1/r} S; si la malla no
    empieza en 0 el primer incremento se toma desde 0.
    """
    _require_grid(grid, TimeGrid, "gen_sym_stable")
    spec = ProcessSpec.sym_stable(r, c)
    n = _check_n(n)
    ids = as_stream_ids(replication)
    rng = stream(seed, PATHS, *ids)

    times = grid.as_array()
    dt = np.diff(np.concatenate(([0.0], times)))
    moving = dt > 0
    increments = np.zeros((n, grid.size))
    increments[:, moving] = sample_sym_stable(rng, spec.r, spec.c, (n, int(moving.sum()))) \
        * dt[moving] ** (1.0 / spec.r)
    return PathBatch(grid, np.cumsum(increments, axis=1), SeedInfo(seed, (PATHS,) + ids), spec)


def gen_brownian_motion(grid: TimeGrid, n: int, seed: int,
                        replication: StreamIds = 0) -> PathBatch:
    """Movimiento browniano estándar (estable r=2, c=1/2)."""
    return gen_sym_stable(grid, 2.0, 0.5, n, seed, replication)


# --------------------------------------------------------------------------
# Poisson compuesto
# --------------------------------------------------------------------------

def _poisson_arrivals(rng: np.random.Generator, lam: float, T: float, rows: int) -> np.ndarray:
    """Tiempos de llegada por fila (ordenados); la última columna siempre supera T."""
    width = int(math.ceil(lam * T + 5.0 * math.sqrt(lam * T) + 5.0))
    arrivals = np.cumsum(rng.standard_exponential((rows, width)) / lam, axis=1)
    while np.any(arrivals[:, -1] <= T):
        more = np.cumsum(rng.standard_exponential((rows, width)) / lam, axis=1)
        arrivals = np.concatenate((arrivals, arrivals[:, -1:] + more), axis=1)
    return arrivals


def gen_compound_poisson(grid: TimeGrid, lam: float, jump_dist: Sampler, n: int, seed: int,
                         replication: StreamIds = 0) -> PathBatch:
    """Poisson compuesto: suma de los saltos cuya llegada es <= t.

    Las llegadas salen de espaciamientos exponenciales de tasa lam; el valor en
    cada punto de la malla se obtiene contando llegadas <= t en cada fila.
    """
    _require_grid(grid, TimeGrid, "gen_compound_poisson")
    spec = ProcessSpec.compound_poisson(lam, jump_dist)
    n = _check_n(n)
    ids = as_stream_ids(replication)
    rng = stream(seed, PATHS, *ids)

    times = grid.as_array()
    values = np.empty((n, grid.size))
    for start in range(0, n, POISSON_BLOCK):
        rows = min(POISSON_BLOCK, n - start)
        arrivals = _poisson_arrivals(rng, spec.lam, grid.T, rows)
        jumps = jump_dist.sample(rng, arrivals.shape)
        jumps[arrivals > grid.T] = 0.0
        partial = np.concatenate((np.zeros((rows, 1)), np.cumsum(jumps, axis=1)), axis=1)
        counts = np.empty((rows, grid.size), dtype=np.intp)
        for j, t in enumerate(times):
            counts[:, j] = np.count_nonzero(arrivals <= t, axis=1)
        values[start:start + rows] = np.take_along_axis(partial, counts, axis=1)
        LOGGER.debug("Poisson compuesto: %d/%d trayectorias", start + rows, n)
    return PathBatch(grid, values, SeedInfo(seed, (PATHS,) + ids), spec)


# --------------------------------------------------------------------------
# Desplazamiento X = Y + Z y despachador
# --------------------------------------------------------------------------

def add_shift(batch: PathBatch, z_dist: Sampler, seed: int,
              replication: StreamIds = 0) -> PathBatch:
    """Suma a cada trayectoria una Z_i independiente; el lote base no cambia."""
    ids = as_stream_ids(replication)
    rng = stream(seed, SHIFT, *ids)
    z = z_dist.sample(rng, batch.n)
    spec = ProcessSpec.shifted(batch.spec, z_dist) if batch.spec is not None else None
    return PathBatch(batch.grid, batch.values + z[:, None], SeedInfo(seed, (SHIFT,) + ids), spec)


def gen_path_batch(spec: ProcessSpec, grid, n: int, seed: int,
                   replication: StreamIds = 0) -> PathBatch:
    """Genera un PathBatch para cualquier ProcessSpec."""
    kind = spec.kind
    if kind is ProcessKind.FBM:
        return gen_fbm(grid, spec.gamma, n, seed, replication)
    if kind is ProcessKind.SYM_STABLE:
        return gen_sym_stable(grid, spec.r, spec.c, n, seed, replication)
    if kind is ProcessKind.COMPOUND_POISSON:
        return gen_compound_poisson(grid, spec.lam, spec.jump_dist, n, seed, replication)
    if kind is ProcessKind.BROWNIAN_SHEET_2D:
        return gen_brownian_sheet(grid, n, seed, replication)
    base = gen_path_batch(spec.base, grid, n, seed, replication)
    return add_shift(base, spec.z_dist, seed, replication)
