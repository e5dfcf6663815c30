import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from quantclt.analytic import stable_cdf
from quantclt.errors import FactorizationError, ParameterError
from quantclt.models import ProcessSpec, Sampler, TimeGrid, TimeGrid2D
from quantclt.process_gen import (
    add_shift,
    cholesky_with_jitter,
    fbm_covariance,
    gen_brownian_motion,
    gen_brownian_sheet,
    gen_compound_poisson,
    gen_fbm,
    gen_path_batch,
    gen_sym_stable,
    sample_sym_stable,
    sheet_index,
)
from quantclt.rng import PATHS, stream

GRID = TimeGrid.create([0.0, 0.25, 0.5, 1.0, 2.0])

SPECS = [
    ProcessSpec.fbm(0.3),
    ProcessSpec.brownian_motion(),
    ProcessSpec.sym_stable(1.5, 1.0),
    ProcessSpec.sym_stable(0.7, 2.0),
    ProcessSpec.compound_poisson(2.0, Sampler.normal()),
    ProcessSpec.shifted(ProcessSpec.fbm(0.7), Sampler.laplace()),
]


@settings(deadline=None, max_examples=30)
@given(
    spec=st.sampled_from(SPECS),
    seed=st.integers(min_value=0, max_value=2**32),
    rep=st.integers(min_value=0, max_value=1000),
    n=st.integers(min_value=1, max_value=50)
)
def test_generation_is_deterministic(spec, seed, rep, n):
    """
    Prueba basada en propiedades del generador:
    - La misma semilla y réplica dan exactamente las mismas trayectorias
    - El lote registra la semilla y tiene forma n x |malla|
    """
    first = gen_path_batch(spec, GRID, n, seed, rep)
    second = gen_path_batch(spec, GRID, n, seed, rep)

    assert np.array_equal(first.values, second.values)
    assert first.values.shape == (n, GRID.size)
    assert first.seed_info.master_seed == seed
    assert first.seed_info.stream_ids[-1] == rep


@settings(deadline=None, max_examples=20)
@given(
    spec=st.sampled_from(SPECS[:5]),
    seed=st.integers(min_value=0, max_value=2**32)
)
def test_unshifted_processes_start_at_zero(spec, seed):
    """Sin desplazamiento, X(0) = 0 exactamente en todas las trayectorias."""
    batch = gen_path_batch(spec, GRID, 40, seed)

    assert np.all(batch.column(0) == 0.0)


def test_replications_are_independent_streams():
    """Réplicas distintas dan trayectorias distintas."""
    a = gen_brownian_motion(GRID, 10, 7, 0)
    b = gen_brownian_motion(GRID, 10, 7, 1)
    c = gen_brownian_motion(GRID, 10, 7, (0, 1))

    assert not np.array_equal(a.values, b.values)
    assert not np.array_equal(b.values, c.values)


def test_brownian_motion_covariance():
    """Cov(B_s, B_t) = min(s, t) con tolerancia Monte Carlo."""
    batch = gen_brownian_motion(GRID, 40_000, 11)
    empirical = np.cov(batch.values[:, 1:], rowvar=False)
    times = GRID.as_array()[1:]

    assert np.allclose(empirical, np.minimum.outer(times, times), atol=0.07)


@pytest.mark.parametrize("gamma", [0.2, 0.5, 0.8])
def test_fbm_covariance(gamma):
    """La covarianza muestral del fBm se acerca a (s^2g + t^2g - |s-t|^2g)/2."""
    batch = gen_fbm(GRID, gamma, 40_000, 5)
    empirical = np.cov(batch.values[:, 1:], rowvar=False)

    assert np.allclose(empirical, fbm_covariance(GRID.as_array()[1:], gamma), atol=0.1)


def test_cholesky_with_jitter_rescues_singular_matrix():
    """Una matriz semidefinida se regulariza y una indefinida se rechaza con contexto."""
    singular = np.ones((3, 3))
    factor = cholesky_with_jitter(singular, "prueba")

    assert np.allclose(factor @ factor.T, singular, atol=1e-6)
    with pytest.raises(FactorizationError, match="indefinida"):
        cholesky_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]), "indefinida")


def test_cauchy_quartiles():
    """Para r = 1 la ley de X(1) es Cauchy de escala c: P(|X| <= c) = 1/2."""
    c = 1.5
    batch = gen_sym_stable(GRID, 1.0, c, 40_000, 3)
    inside = np.mean(np.abs(batch.column(3)) <= c)

    assert inside == pytest.approx(0.5, abs=0.015)


@pytest.mark.parametrize("r,c", [(1.5, 1.0), (0.8, 0.5)])
def test_stable_marginal_matches_analytic_cdf(r, c):
    """La ecdf de X(t) coincide con la cdf analítica en unos pocos puntos."""
    batch = gen_sym_stable(GRID, r, c, 40_000, 13)
    column = batch.column(2)
    for x in (-2.0, -0.5, 0.3, 1.0, 3.0):
        expected = stable_cdf(r, c, 0.5, x)
        assert np.mean(column <= x) == pytest.approx(expected, abs=0.012)


SCALING_GRID = TimeGrid.create([0.0, 0.5, 1.0, 2.0])


@pytest.mark.parametrize("spec,exponent", [
    (ProcessSpec.brownian_motion(), 0.5),
    (ProcessSpec.sym_stable(1.0, 1.0), 1.0),
    (ProcessSpec.fbm(0.75), 0.75),
])
@pytest.mark.parametrize("seed", [0, 1])
def test_self_similarity_in_law(spec, exponent, seed):
    """
    Autosemejanza con c = 2: (X(2t_j))_j tiene la ley de 2^H (X(t_j))_j,
    con H = 1/r para los estables y H = gamma para el fBm.
    Se comparan con KS de dos muestras los marginales y el incremento
    entre los dos tiempos, usando réplicas independientes.
    """
    scaled = 2.0 ** exponent
    a = gen_path_batch(spec, SCALING_GRID, 4000, seed, 0)
    b = gen_path_batch(spec, SCALING_GRID, 4000, seed, 1)
    # columnas: 1 -> t=0.5, 2 -> t=1, 3 -> t=2
    pairs = [
        (a.column(2), scaled * b.column(1)),
        (a.column(3), scaled * b.column(2)),
        (a.column(3) - a.column(2), scaled * (b.column(2) - b.column(1))),
    ]
    for left, right in pairs:
        assert stats.ks_2samp(left, right).pvalue > 1e-4


@given(
    r=st.floats(min_value=0.3, max_value=2.0),
    seed=st.integers(min_value=0, max_value=2**32)
)
@settings(deadline=None, max_examples=25)
def test_stable_samples_are_symmetric_and_not_nan(r, seed):
    """Las variables estables no son NaN y su mediana muestral está cerca de 0."""
    sample = sample_sym_stable(stream(seed, PATHS), r, 1.0, 4000)

    assert not np.isnan(sample).any()
    assert abs(np.mean(sample > 0) - 0.5) < 0.05


def test_compound_poisson_atom_and_variance():
    """P(X(t) = 0) = exp(-lambda t) y Var X(t) = lambda t E[J^2]."""
    lam = 1.5
    batch = gen_compound_poisson(GRID, lam, Sampler.normal(), 40_000, 17)
    column = batch.column(3)

    assert np.mean(column == 0.0) == pytest.approx(math.exp(-lam), abs=0.01)
    assert np.var(column) == pytest.approx(lam, rel=0.05)


def test_compound_poisson_paths_are_piecewise_constant_sums():
    """Con saltos constantes 1 el proceso es un contador de Poisson no decreciente."""
    batch = gen_compound_poisson(GRID, 3.0, Sampler.constant(1.0), 500, 2)

    assert np.all(np.diff(batch.values, axis=1) >= 0)
    assert np.all(batch.values == np.round(batch.values))
    assert np.mean(batch.column(4)) == pytest.approx(6.0, abs=0.5)


def test_shift_adds_one_z_per_path():
    """X = Y + Z: la diferencia con el lote base es constante en el tiempo."""
    base = gen_fbm(GRID, 0.4, 100, 9)
    shifted = add_shift(base, Sampler.cauchy(), 9)
    diff = shifted.values - base.values

    assert np.allclose(diff, diff[:, :1])
    assert shifted.spec.z_dist == Sampler.cauchy()
    assert np.array_equal(gen_path_batch(shifted.spec, GRID, 100, 9).values, shifted.values)


def test_brownian_sheet_variance_and_axes():
    """Var W(x, y) = x y y el campo se anula en los ejes."""
    grid = TimeGrid2D((0.0, 0.5, 1.0), (0.0, 1.0, 2.0))
    batch = gen_brownian_sheet(grid, 40_000, 21)

    assert np.all(batch.column(sheet_index(grid, 0, 2)) == 0.0)
    assert np.all(batch.column(sheet_index(grid, 1, 0)) == 0.0)
    assert np.var(batch.column(sheet_index(grid, 2, 2))) == pytest.approx(2.0, rel=0.05)
    assert np.var(batch.column(sheet_index(grid, 1, 1))) == pytest.approx(0.5, rel=0.05)
    with pytest.raises(ParameterError, match="fuera de la malla"):
        sheet_index(grid, 3, 0)


def test_generators_check_inputs():
    """n no positivo o malla equivocada se rechazan."""
    with pytest.raises(ParameterError, match="n debe ser"):
        gen_brownian_motion(GRID, 0, 1)
    with pytest.raises(ParameterError, match="TimeGrid2D"):
        gen_brownian_sheet(GRID, 5, 1)
    with pytest.raises(ParameterError, match="TimeGrid"):
        gen_fbm(TimeGrid2D((0.0, 1.0), (0.0, 1.0)), 0.5, 5, 1)
