"""Distribuciones empíricas, estadísticos de orden y cuantiles empíricos.

El cuantil empírico es siempre la inversa generalizada
``inf{x : F_n(t,x) >= alpha}``, que coincide con el estadístico de orden
``j(alpha) = min{k : k/n >= alpha}``. No hay interpolación.

Los supremos se toman sobre mallas finitas; para trayectorias càdlàg el supremo
sobre un conjunto numerable denso coincide con el supremo sobre [0,T], así que
a resolución de malla no hace falta ninguna envolvente medible.
"""
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import optimize

from .errors import ParameterError, ShapeError
from .models import LevelGrid, PathBatch, QuantileField, TimeGrid

LOGGER = logging.getLogger(__name__)

BISECTION_STEPS = 80


class RankedValue(NamedTuple):
    value: float
    index: int


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha debe estar en (0,1), se recibió {alpha}")


def quantile_rank(n: int, alpha: float) -> int:
    """j(alpha) = min{k : k/n >= alpha}, con la comparación hecha en punto flotante.

    Así el rango coincide exactamente con el primer k en que ``empirical_cdf``
    (que devuelve conteo/n) alcanza alpha.
    """
    _check_alpha(alpha)
    k = max(1, math.ceil(n * alpha))
    while k > 1 and (k - 1) / n >= alpha:
        k -= 1
    while k < n and k / n < alpha:
        k += 1
    return min(k, n)


def empirical_cdf(batch: PathBatch, t_index: int, x):
    """F_n(t,x) = #{i : X_i(t) <= x} / n (escalón continuo por la derecha)."""
    column = batch.column(t_index)
    if np.ndim(x) == 0:
        return np.count_nonzero(column <= x) / batch.n
    counts = np.searchsorted(np.sort(column), np.asarray(x, dtype=float), side="right")
    return counts / batch.n


def empirical_process(batch: PathBatch, t_index: int, x, F: Callable) -> np.ndarray:
    """nu_n(t,x) = sqrt(n) (F_n(t,x) - F(t,x))."""
    return math.sqrt(batch.n) * (np.asarray(empirical_cdf(batch, t_index, x)) - np.asarray(F(x)))


def order_statistics(values: Sequence[float]) -> List[RankedValue]:
    """Reordenación no decreciente; los empates conservan el orden del índice original."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError("order_statistics necesita al menos un valor")
    order = np.argsort(arr, kind="stable")
    return [RankedValue(float(arr[i]), int(i)) for i in order]


def sample_quantile(values: np.ndarray, alpha: float) -> float:
    """Cuantil empírico de una muestra 1-D."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError("La muestra está vacía")
    j = quantile_rank(arr.size, alpha)
    return float(np.partition(arr, j - 1)[j - 1])


def empirical_quantile(batch: PathBatch, t_index: int, alpha: float) -> float:
    """tau^n_alpha(t) = X_{(j(alpha))}(t)."""
    return sample_quantile(batch.column(t_index), alpha)


def generalized_inverse(batch: PathBatch, t_index: int, alpha: float) -> float:
    """inf{x : F_n(t,x) >= alpha} recorriendo los escalones de ``empirical_cdf``.

    Implementación independiente de ``empirical_quantile``; se usa para
    contrastar ambas.
    """
    _check_alpha(alpha)
    for x in np.unique(batch.column(t_index)):
        if empirical_cdf(batch, t_index, x) >= alpha:
            return float(x)
    raise ParameterError("F_n nunca alcanza alpha")  # imposible: F_n(max) = 1


def quantile_field(batch: PathBatch, levels: LevelGrid, true_tau) -> QuantileField:
    """Superficie tau_n[t, alpha] y campo centrado w_n = sqrt(n)(tau_n - tau)."""
    true_tau = np.asarray(true_tau, dtype=float)
    shape = (batch.grid.size, levels.size)
    if true_tau.shape != shape:
        raise ShapeError(f"true_tau tiene forma {true_tau.shape}, se esperaba {shape}")
    ranks = np.array([quantile_rank(batch.n, a) for a in levels.levels]) - 1
    ordered = np.sort(batch.values, axis=0)
    tau_n = ordered[ranks, :].T.copy()
    w_n = math.sqrt(batch.n) * (tau_n - true_tau)
    return QuantileField(batch.grid, levels, tau_n, w_n, batch.n)


def sup_statistic(field: QuantileField, t_range: Tuple[float, float],
                  level_range: Tuple[float, float]) -> float:
    """max |w_n| sobre los puntos de malla dentro de t_range x level_range."""
    if not isinstance(field.grid, TimeGrid):
        raise ParameterError("sup_statistic necesita una malla temporal 1-D")
    ti = field.grid.indices_between(*t_range)
    li = field.levels.indices_between(*level_range)
    if ti.size == 0 or li.size == 0:
        raise ParameterError(
            f"La región {t_range} x {level_range} no contiene puntos de la malla"
        )
    return float(np.max(np.abs(field.w_n[np.ix_(ti, li)])))


def continuity_diagnostic(field: QuantileField) -> Dict[str, float]:
    """Mayor salto de w_n entre vecinos de la malla, en tiempo y en nivel."""
    w = field.w_n
    jump_t = float(np.max(np.abs(np.diff(w, axis=0)))) if w.shape[0] > 1 else 0.0
    jump_a = float(np.max(np.abs(np.diff(w, axis=1)))) if w.shape[1] > 1 else 0.0
    return {"time": jump_t, "level": jump_a}


# --------------------------------------------------------------------------
# Identidades exactas de muestra finita
# --------------------------------------------------------------------------

def _numeric_inverse(F: Callable) -> Callable:
    def inverse(beta):
        def one(b):
            if b <= 0.0:
                return -np.inf
            if b >= 1.0:
                return np.inf
            lo, hi = -1.0, 1.0
            while F(lo) > b:
                lo *= 2.0
            while F(hi) < b:
                hi *= 2.0
            return optimize.brentq(lambda x: F(x) - b, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)
        return np.vectorize(one, otypes=[float])(beta)
    return inverse


def vervaat_discrepancies(sorted_rows: np.ndarray, alphas: np.ndarray,
                          F: Callable, F_inv: Callable) -> np.ndarray:
    """|inf{beta : F_n(F^{-1}(beta)) >= alpha} - F(tau^n_alpha)| por fila y nivel.

    ``sorted_rows`` es (B, n), cada fila una muestra ordenada; ``alphas`` es
    (B, K). El ínfimo en beta se localiza por bisección vectorizada.
    """
    rows = np.asarray(sorted_rows, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    B, n = rows.shape
    if alphas.shape[0] != B:
        raise ShapeError("alphas debe tener una fila por muestra")

    lo = np.zeros(alphas.shape)
    hi = np.ones(alphas.shape)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        x = F_inv(mid)
        fn = np.count_nonzero(rows[:, None, :] <= x[:, :, None], axis=2) / n
        ok = fn >= alphas
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    lhs = hi

    ranks = np.vectorize(lambda a: quantile_rank(n, a), otypes=[np.intp])(alphas) - 1
    rhs = F(np.take_along_axis(rows, ranks, axis=1))
    return np.abs(lhs - rhs)


def vervaat_identity_check(batch: PathBatch, t_index: int, F_t: Callable,
                           probe_levels: Sequence[float],
                           F_inv: Optional[Callable] = None) -> float:
    """Máxima discrepancia de (F_n o F^{-1})^{-1} = F o F_n^{-1} en los niveles de prueba.

    F_t debe ser continua y estrictamente creciente. Si no se da su inversa se
    calcula numéricamente con brentq.
    """
    probes = np.asarray(probe_levels, dtype=float)
    for a in probes:
        _check_alpha(a)
    inverse = F_inv if F_inv is not None else _numeric_inverse(F_t)
    ordered = np.sort(batch.column(t_index))[None, :]
    return float(np.max(vervaat_discrepancies(ordered, probes[None, :], F_t, inverse)))


def quantile_reflection_check(values: Sequence[float], alpha: float) -> bool:
    """-(cuantil 1-alpha de -X) cumple P(X <= q) >= alpha y P(X >= q) >= 1-alpha."""
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    q = -sample_quantile(-x, 1.0 - alpha)
    return bool(np.count_nonzero(x <= q) / n >= alpha
                and np.count_nonzero(x >= q) / n >= 1.0 - alpha)


def lipschitz_check(x: Sequence[float], y: Sequence[float]) -> bool:
    """max_j |x_(j) - y_(j)| <= max_j |x_j - y_j|."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size == 0:
        raise ShapeError("lipschitz_check necesita dos vectores no vacíos de igual longitud")
    return bool(np.max(np.abs(np.sort(x) - np.sort(y))) <= np.max(np.abs(x - y)))


def refine_levels_check(batch: PathBatch, levels: LevelGrid, refined: LevelGrid) -> bool:
    """Refinar la malla de niveles no cambia tau_n en los niveles comunes."""
    zeros = np.zeros((batch.grid.size, levels.size))
    coarse = quantile_field(batch, levels, zeros).tau_n
    fine = quantile_field(batch, refined, np.zeros((batch.grid.size, refined.size))).tau_n
    common = [(k, int(np.flatnonzero(refined.as_array() == a)[0]))
              for k, a in enumerate(levels.levels) if a in refined.levels]
    if not common:
        raise ParameterError("Las mallas de niveles no comparten ningún nivel")
    return all(np.array_equal(coarse[:, k], fine[:, kk]) for k, kk in common)
