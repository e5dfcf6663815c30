import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st, assume
from scipy import stats
from quantclt import empirical
from quantclt.errors import ParameterError, ShapeError
from quantclt.models import LevelGrid, PathBatch, TimeGrid

PROBE = TimeGrid.create([0.0, 1.0])

samples = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    min_size=1,
    max_size=60
)
tied_samples = st.lists(st.integers(min_value=-3, max_value=3).map(float), min_size=1, max_size=60)
alphas = st.floats(min_value=1e-6, max_value=1.0 - 1e-6)


def _batch(values):
    column = np.asarray(values, dtype=float)
    return PathBatch.create(PROBE, np.column_stack((np.zeros_like(column), column)))


@given(n=st.integers(min_value=1, max_value=10_000), alpha=alphas)
def test_quantile_rank_is_minimal(n, alpha):
    """
    Prueba basada en propiedades de j(alpha):
    - j/n >= alpha
    - (j-1)/n < alpha, es decir, j es el mínimo
    """
    j = empirical.quantile_rank(n, alpha)

    assert 1 <= j <= n
    assert j / n >= alpha
    assert j == 1 or (j - 1) / n < alpha


@given(values=st.one_of(samples, tied_samples), alpha=alphas)
def test_quantile_is_generalized_inverse(values, alpha):
    """
    Prueba basada en propiedades del cuantil empírico:
    - Coincide con inf{x : F_n(x) >= alpha}
    - F_n(tau_n) >= alpha y F_n(x) < alpha justo por debajo
    """
    batch = _batch(values)
    tau = empirical.empirical_quantile(batch, 1, alpha)

    assert tau == empirical.generalized_inverse(batch, 1, alpha)
    assert empirical.empirical_cdf(batch, 1, tau) >= alpha
    below = [v for v in values if v < tau]
    if below:
        assert empirical.empirical_cdf(batch, 1, max(below)) < alpha


@given(values=samples, shift=st.floats(min_value=-100, max_value=100), alpha=alphas)
def test_quantile_is_translation_equivariant(values, shift, alpha):
    """tau_n(X + a) = tau_n(X) + a (la misma observación se selecciona)."""
    x = np.asarray(values)
    j = empirical.quantile_rank(x.size, alpha)

    assert empirical.sample_quantile(x + shift, alpha) == np.sort(x + shift)[j - 1]
    assert empirical.sample_quantile(x, alpha) == np.sort(x)[j - 1]


@given(values=st.one_of(samples, tied_samples))
def test_order_statistics_are_stable(values):
    """
    Prueba basada en propiedades de order_statistics:
    - Resultado no decreciente
    - Los empates conservan el orden de los índices originales
    - Es una permutación de los índices
    """
    ranked = empirical.order_statistics(values)

    assert [r.value for r in ranked] == sorted(float(v) for v in values)
    assert sorted(r.index for r in ranked) == list(range(len(values)))
    for first, second in zip(ranked, ranked[1:]):
        if first.value == second.value:
            assert first.index < second.index


def test_order_statistics_rejects_empty():
    with pytest.raises(ParameterError, match="al menos un valor"):
        empirical.order_statistics([])


@given(
    x=st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=40),
    noise=st.lists(st.floats(min_value=-10, max_value=10), min_size=40, max_size=40)
)
def test_order_statistics_are_lipschitz(x, noise):
    """max_j |x_(j) - y_(j)| <= max_j |x_j - y_j| para cualquier par de vectores."""
    y = np.asarray(x) + np.asarray(noise[:len(x)])

    assert empirical.lipschitz_check(x, y)


def test_lipschitz_check_rejects_mismatched_shapes():
    with pytest.raises(ShapeError):
        empirical.lipschitz_check([1.0, 2.0], [1.0])


@given(values=st.one_of(samples, tied_samples), alpha=alphas)
def test_quantile_reflection(values, alpha):
    """q = -(cuantil 1-alpha de -X) cumple las dos desigualdades de cuantil."""
    assert empirical.quantile_reflection_check(values, alpha)


@settings(deadline=None, max_examples=40)
@given(
    values=st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=40),
    probes=st.lists(st.floats(min_value=0.001, max_value=0.999), min_size=1, max_size=5)
)
def test_vervaat_identity_for_normal_law(values, probes):
    """
    Prueba basada en propiedades de la identidad de inversión:
    (F_n o F^{-1})^{-1}(alpha) = F(tau_n(alpha)) hasta la precisión de la bisección
    """
    batch = _batch(values)
    law = stats.norm()
    worst = empirical.vervaat_identity_check(batch, 1, law.cdf, probes, law.ppf)

    assert worst <= 1e-9


def test_vervaat_identity_with_numeric_inverse():
    """Sin inversa explícita se usa brentq y la identidad sigue cumpliéndose."""
    batch = _batch([-3.0, -0.2, 0.0, 1.5, 8.0])
    worst = empirical.vervaat_identity_check(batch, 1, stats.cauchy.cdf, [0.1, 0.5, 0.77])

    assert worst <= 1e-9


@given(values=st.one_of(samples, tied_samples))
def test_quantile_field_and_refinement(values):
    """
    Prueba basada en propiedades de quantile_field:
    - tau_n en cada nivel coincide con el cuantil muestral
    - Refinar la malla de niveles no cambia los niveles comunes
    """
    batch = _batch(values)
    levels = LevelGrid.create([0.2, 0.5, 0.8])
    refined = LevelGrid.create([0.2, 0.35, 0.5, 0.65, 0.8])
    field = empirical.quantile_field(batch, levels, np.zeros((2, 3)))

    for k, alpha in enumerate(levels.levels):
        assert field.tau_n[1, k] == empirical.sample_quantile(values, alpha)
    assert np.array_equal(field.w_n, math.sqrt(batch.n) * field.tau_n)
    assert empirical.refine_levels_check(batch, levels, refined)


def test_quantile_field_checks_shape():
    batch = _batch([1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        empirical.quantile_field(batch, LevelGrid.create([0.5]), np.zeros((3, 1)))


def test_refinement_without_common_levels():
    batch = _batch([1.0, 2.0, 3.0])
    with pytest.raises(ParameterError, match="no comparten"):
        empirical.refine_levels_check(batch, LevelGrid.create([0.3]), LevelGrid.create([0.4]))


def test_empirical_cdf_and_process():
    """F_n es continua por la derecha y nu_n = sqrt(n)(F_n - F)."""
    batch = _batch([0.0, 1.0, 1.0, 2.0])

    assert empirical.empirical_cdf(batch, 1, 1.0) == 0.75
    assert empirical.empirical_cdf(batch, 1, 0.999) == 0.25
    assert np.allclose(empirical.empirical_cdf(batch, 1, [-1.0, 1.0, 5.0]), [0.0, 0.75, 1.0])
    nu = empirical.empirical_process(batch, 1, 1.0, lambda x: 0.5)
    assert nu == pytest.approx(2.0 * 0.25)


def test_sup_statistic_and_continuity():
    """El supremo se toma sólo en los puntos de malla dentro de la región."""
    grid = TimeGrid.create([0.0, 0.5, 1.0])
    values = np.array([[0.0, 1.0, 2.0], [0.0, 3.0, -1.0], [0.0, -2.0, 5.0]])
    batch = PathBatch.create(grid, values)
    levels = LevelGrid.create([0.5])
    field = empirical.quantile_field(batch, levels, np.zeros((3, 1)))

    root3 = math.sqrt(3.0)
    assert empirical.sup_statistic(field, (0.0, 0.5), (0.5, 0.5)) == pytest.approx(root3)
    assert empirical.sup_statistic(field, (0.0, 1.0), (0.5, 0.5)) == pytest.approx(2 * root3)
    diag = empirical.continuity_diagnostic(field)
    assert diag["time"] == pytest.approx(root3)
    assert diag["level"] == 0.0
    with pytest.raises(ParameterError, match="no contiene puntos"):
        empirical.sup_statistic(field, (0.2, 0.4), (0.5, 0.5))


@given(alpha=st.one_of(st.floats(max_value=0.0), st.floats(min_value=1.0)))
def test_levels_outside_unit_interval(alpha):
    assume(not math.isnan(alpha))
    with pytest.raises(ParameterError, match=r"\(0,1\)"):
        empirical.quantile_rank(10, alpha)
