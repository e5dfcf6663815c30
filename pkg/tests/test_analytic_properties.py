import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats
from quantclt import analytic
from quantclt.errors import DomainError, ParameterError, UnsupportedExperimentError
from quantclt.models import ProcessSpec, Sampler

XS = [-10.0, -3.7, -1.0, -0.25, 0.0, 0.4, 1.0, 2.5, 6.0, 10.0]
LEVELS = [0.05, 0.2, 0.5, 0.77, 0.95]


@pytest.mark.parametrize("x", XS)
def test_density_and_cdf_match_gaussian_and_cauchy(x):
    """
    Oráculos de forma cerrada:
    - r=2, c=1/2 es la normal estándar
    - r=1, c=1 es la Cauchy estándar
    """
    assert analytic.stable_density(2.0, 0.5, 1.0, x) == pytest.approx(stats.norm.pdf(x), abs=1e-8)
    assert analytic.stable_cdf(2.0, 0.5, 1.0, x) == pytest.approx(stats.norm.cdf(x), abs=1e-8)
    assert analytic.stable_density(1.0, 1.0, 1.0, x) == pytest.approx(stats.cauchy.pdf(x), abs=1e-8)
    assert analytic.stable_cdf(1.0, 1.0, 1.0, x) == pytest.approx(stats.cauchy.cdf(x), abs=1e-8)


@pytest.mark.parametrize("alpha", LEVELS)
def test_quantiles_match_closed_forms(alpha):
    assert analytic.stable_quantile(2.0, 0.5, 1.0, alpha) == pytest.approx(stats.norm.ppf(alpha), abs=1e-8)
    assert analytic.stable_quantile(1.0, 1.0, 1.0, alpha) == pytest.approx(stats.cauchy.ppf(alpha), abs=1e-8)


@settings(deadline=None, max_examples=25)
@given(
    r=st.floats(min_value=0.5, max_value=2.0),
    c=st.floats(min_value=0.2, max_value=3.0),
    t=st.floats(min_value=0.1, max_value=5.0)
)
def test_density_at_zero_closed_form(r, c, t):
    """f(t,0) = Gamma(1+1/r) / (pi (ct)^{1/r}) coincide con la integral."""
    expected = special.gamma(1.0 + 1.0 / r) / (math.pi * (c * t) ** (1.0 / r))

    assert analytic.stable_density(r, c, t, 0.0) == pytest.approx(expected, rel=1e-8)
    assert analytic.stable_density_at_zero(r, c, t) == pytest.approx(expected, rel=1e-12)


@settings(deadline=None, max_examples=25)
@given(
    r=st.sampled_from([0.7, 1.0, 1.3, 1.5, 1.9, 2.0]),
    alpha=st.floats(min_value=0.02, max_value=0.98),
    t=st.floats(min_value=0.05, max_value=4.0)
)
def test_quantile_properties(r, alpha, t):
    """
    Prueba basada en propiedades de stable_quantile:
    - F(t, tau_alpha(t)) = alpha
    - tau_alpha(t) = t^{1/r} tau_alpha(1)
    - Simetría: tau_{1-alpha} = -tau_alpha
    """
    q = analytic.stable_quantile(r, 1.0, t, alpha)

    assert analytic.stable_cdf(r, 1.0, t, q) == pytest.approx(alpha, abs=1e-9)
    assert q == pytest.approx(t ** (1.0 / r) * analytic.stable_quantile(r, 1.0, 1.0, alpha),
                              rel=1e-10, abs=1e-12)
    assert analytic.stable_quantile(r, 1.0, t, 1.0 - alpha) == pytest.approx(-q, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("r", [0.8, 1.5])
def test_cdf_is_monotone_and_symmetric(r):
    values = [analytic.stable_cdf(r, 1.0, 1.0, x) for x in XS]

    assert all(a <= b for a, b in zip(values, values[1:]))
    for x in XS:
        total = analytic.stable_cdf(r, 1.0, 1.0, x) + analytic.stable_cdf(r, 1.0, 1.0, -x)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_domain_and_parameter_errors():
    with pytest.raises(DomainError, match="t > 0"):
        analytic.stable_density(1.5, 1.0, 0.0, 0.3)
    with pytest.raises(ParameterError, match="r debe estar"):
        analytic.stable_cdf(2.5, 1.0, 1.0, 0.0)
    with pytest.raises(ParameterError, match=r"\(0,1\)"):
        analytic.stable_quantile(1.5, 1.0, 1.0, 1.0)
    assert analytic.stable_quantile(1.5, 1.0, 0.0, 0.9) == 0.0


@settings(deadline=None, max_examples=60)
@given(
    h=st.floats(min_value=-4, max_value=4),
    k=st.floats(min_value=-4, max_value=4),
    rho=st.floats(min_value=-0.95, max_value=0.95)
)
def test_bivariate_normal_cdf_matches_scipy(h, k, rho):
    """El cálculo por la T de Owen coincide con la cdf multivariante de scipy."""
    expected = stats.multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]]).cdf([h, k])

    assert analytic.bivariate_normal_cdf(h, k, rho) == pytest.approx(expected, abs=5e-5)


@given(rho=st.floats(min_value=-1.0, max_value=1.0))
def test_bivariate_orthant_and_limits(rho):
    assert analytic.bivariate_normal_cdf(0.0, 0.0, rho) == pytest.approx(
        0.25 + math.asin(rho) / (2 * math.pi), abs=1e-15)
    assert analytic.bivariate_normal_cdf(np.inf, 0.3, rho) == pytest.approx(stats.norm.cdf(0.3))
    assert analytic.bivariate_normal_cdf(-np.inf, 0.3, rho) == 0.0


@pytest.mark.parametrize("s,t", [(0.5, 1.0), (0.1, 2.0), (1.0, 1.5)])
def test_joint_prob_stable_gaussian_orthant(s, t):
    """Para el browniano P(B_s <= 0, B_t <= 0) = 1/4 + asin(sqrt(s/t)) / (2 pi)."""
    exact = 0.25 + math.asin(math.sqrt(s / t)) / (2.0 * math.pi)

    assert analytic.joint_prob_stable(2.0, 0.5, s, t, 0.0, 0.0) == pytest.approx(exact, abs=1e-7)


@pytest.mark.parametrize("a,b", [(-1.0, 0.5), (0.3, 0.3), (1.2, -0.4)])
def test_joint_prob_stable_gaussian_general(a, b):
    s, t = 0.4, 1.3
    expected = analytic.bivariate_normal_cdf(a / math.sqrt(s), b / math.sqrt(t), math.sqrt(s / t))

    assert analytic.joint_prob_stable(2.0, 0.5, s, t, a, b) == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize("r", [0.9, 1.0, 1.6])
def test_joint_prob_stable_frechet_bounds(r):
    """max(0, F_s(a) + F_t(b) - 1) <= P <= min(F_s(a), F_t(b))."""
    s, t, a, b = 0.5, 2.0, 0.7, -0.3
    fa = analytic.stable_cdf(r, 1.0, s, a)
    fb = analytic.stable_cdf(r, 1.0, t, b)
    joint = analytic.joint_prob_stable(r, 1.0, s, t, a, b)

    assert max(0.0, fa + fb - 1.0) - 1e-9 <= joint <= min(fa, fb) + 1e-9
    assert joint >= fa * fb - 1e-9  # incrementos independientes: asociación positiva


def test_joint_prob_stable_requires_ordered_times():
    with pytest.raises(DomainError, match="0 < s < t"):
        analytic.joint_prob_stable(1.5, 1.0, 1.0, 1.0, 0.0, 0.0)
    assert analytic.stable_joint_prob(1.5, 1.0, 1.0, 0.2, 1.0, 0.5) == pytest.approx(
        analytic.stable_cdf(1.5, 1.0, 1.0, 0.2))
    assert analytic.stable_joint_prob(1.5, 1.0, 2.0, 0.0, 1.0, 0.0) == pytest.approx(
        analytic.joint_prob_stable(1.5, 1.0, 1.0, 2.0, 0.0, 0.0))


def test_brownian_median_covariances():
    """Varianza límite de la mediana del browniano en t=1: pi/2; covarianza (1/2, 1): 0.55536."""
    arcsine_cov = math.sqrt(0.5) * math.asin(math.sqrt(0.5))

    assert analytic.limit_cov_quantile_stable(2.0, 0.5, 1.0, 0.5, 1.0, 0.5) == pytest.approx(math.pi / 2, rel=1e-8)
    assert analytic.limit_cov_quantile_stable(2.0, 0.5, 0.5, 0.5, 1.0, 0.5) == pytest.approx(arcsine_cov, abs=1e-6)
    assert analytic.stable_median_covariance(2.0, 0.5, 0.5, 1.0) == pytest.approx(arcsine_cov, abs=1e-6)
    assert arcsine_cov == pytest.approx(0.55536, abs=1e-5)


@pytest.mark.parametrize("r", [1.0, 1.5])
def test_median_covariance_closed_form_agrees(r):
    """La fórmula de la mediana coincide con la covarianza límite general."""
    general = analytic.limit_cov_quantile_stable(r, 1.0, 0.5, 0.5, 1.5, 0.5)

    assert analytic.stable_median_covariance(r, 1.0, 0.5, 1.5) == pytest.approx(general, rel=1e-6)


@pytest.mark.parametrize("beta,alpha", [(0.5, 0.5), (0.2, 0.9), (0.75, 0.3)])
def test_fbm_half_is_brownian(beta, alpha):
    """El fBm de índice 1/2 es el browniano: ambas covarianzas coinciden."""
    fbm = analytic.limit_cov_quantile_fbm(0.5, 0.5, beta, 1.0, alpha)
    stable = analytic.limit_cov_quantile_stable(2.0, 0.5, 0.5, beta, 1.0, alpha)

    assert fbm == pytest.approx(stable, rel=1e-6, abs=1e-9)


def test_covariance_vanishes_at_time_zero():
    assert analytic.limit_cov_quantile_stable(1.5, 1.0, 0.0, 0.5, 1.0, 0.5) == 0.0
    assert analytic.limit_cov_quantile_fbm(0.3, 0.0, 0.5, 1.0, 0.5) == 0.0


@pytest.mark.parametrize("model", [
    analytic.CovarianceModel.stable(1.5, 1.0),
    analytic.CovarianceModel.fbm(0.3),
])
def test_covariance_matrix_is_psd(model):
    """
    El núcleo límite es semidefinido positivo y la distancia inducida es una pseudo-métrica:
    - d(p, p) = 0 y d(p, q) = d(q, p)
    """
    points = [(0.5, 0.3), (0.5, 0.7), (1.0, 0.5), (2.0, 0.3)]
    matrix = analytic.covariance_matrix(model, points)

    assert analytic.is_psd(matrix)
    assert analytic.quantile_limit_distance(model, points[0], points[0]) == pytest.approx(0.0, abs=1e-6)
    assert analytic.quantile_limit_distance(model, points[0], points[2]) == pytest.approx(
        analytic.quantile_limit_distance(model, points[2], points[0]))


def test_is_psd_rejects_indefinite():
    assert not analytic.is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not analytic.is_psd(np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_empirical_G_covariance():
    """E G(s,x) G(t,y) para el browniano y su pseudo-métrica."""
    model = analytic.CovarianceModel.empirical_G(ProcessSpec.brownian_motion())
    value = model(1.0, 0.0, 1.0, 0.0)

    assert value == pytest.approx(0.25, abs=1e-12)
    law = model.law
    assert analytic.dist_d(law, 1.0, 0.2, 1.0, 0.2, model.joint_prob) == pytest.approx(0.0, abs=1e-7)


def test_shifted_brownian_marginal():
    """B(t) + N(0,1) tiene ley N(0, t + 1)."""
    spec = ProcessSpec.shifted(ProcessSpec.brownian_motion(), Sampler.normal())
    law = analytic.marginal_law(spec)
    scale = math.sqrt(2.0)

    assert isinstance(law, analytic.ConvolvedLaw)
    assert isinstance(law.base, analytic.GaussianLaw)
    for x in (-2.0, 0.0, 0.7):
        assert law.cdf(1.0, x) == pytest.approx(stats.norm.cdf(x, scale=scale), abs=1e-10)
        assert law.pdf(1.0, x) == pytest.approx(stats.norm.pdf(x, scale=scale), abs=1e-10)
    assert law.quantile(1.0, 0.9) == pytest.approx(stats.norm.ppf(0.9, scale=scale), abs=1e-8)
    assert analytic.true_quantile(law, 0.0, 0.9) == pytest.approx(stats.norm.ppf(0.9), abs=1e-8)


def test_shifted_cauchy_marginal():
    """Cauchy(t) + Cauchy(1) es Cauchy de escala t + 1."""
    law = analytic.ConvolvedLaw(analytic.StableLaw(1.0, 1.0), Sampler.cauchy())

    for x in (-1.5, 0.5, 3.0):
        assert law.cdf(1.0, x) == pytest.approx(stats.cauchy.cdf(x, scale=2.0), abs=1e-6)


def test_shifted_gaussian_covariance_reduces_to_variance():
    """En s = t la covarianza límite es (alpha - alpha^2) / f^2 con f la densidad convolucionada."""
    spec = ProcessSpec.shifted(ProcessSpec.fbm(0.3), Sampler.laplace())
    model = analytic.covariance_model(spec)
    law = model.law
    q = law.quantile(1.0, 0.4)

    assert model.kind is analytic.CovarianceKind.QUANTILE_LIMIT_SHIFTED_GAUSSIAN
    assert model(1.0, 0.4, 1.0, 0.4) == pytest.approx(0.24 / law.pdf(1.0, q) ** 2, rel=1e-8)
    assert model(0.5, 0.4, 1.0, 0.6) > 0.0


def test_models_without_analytic_limit():
    cp = ProcessSpec.compound_poisson(1.0, Sampler.normal())
    with pytest.raises(UnsupportedExperimentError, match="MARGINAL_VARIANCE"):
        analytic.marginal_law(cp)
    with pytest.raises(UnsupportedExperimentError):
        analytic.covariance_model(cp)
    with pytest.raises(ParameterError, match="densidad"):
        analytic.ConvolvedLaw(analytic.StableLaw(1.0, 1.0), Sampler.rademacher())


def test_gaussian_law_degenerate_at_zero():
    law = analytic.GaussianLaw.fbm(0.3)

    assert law.zero_at_zero
    assert law.cdf(0.0, -0.1) == 0.0 and law.cdf(0.0, 0.0) == 1.0
    with pytest.raises(DomainError, match="degenerada"):
        law.pdf(0.0, 0.0)


@pytest.mark.parametrize("r,alpha_star", [(2.0, 0.75), (1.0, 0.9), (1.5, 0.6)])
def test_tail_bound_constants(r, alpha_star):
    """
    Propiedades de la cota de cola:
    - lambda_r^r = 2^r e c_r / (1 - alpha*)
    - n0 es el primer n en que la cota cuadrática tiene factor <= 1
    - La cota no crece con u y vale 1 por debajo del umbral
    """
    bound = analytic.tail_bound_constants(r, 1.0, alpha_star, 400)

    assert bound.lambda_r ** r == pytest.approx(2.0 ** r * math.e / (1.0 - alpha_star))
    k = lambda n: r * math.floor(n * (1.0 - alpha_star))  # noqa: E731
    factor = lambda n: 2.0 ** (-(k(n) - 2.0)) * bound.lambda_r ** 2 * n  # noqa: E731
    assert factor(bound.n0) <= 1.0
    assert bound.n0 == 1 or factor(bound.n0 - 1) > 1.0

    start = bound.threshold * math.sqrt(bound.n)
    us = [start * m for m in (1.0, 1.5, 3.0, 10.0)]
    values = [bound.bound(u) for u in us]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert bound.bound(0.5 * start) == 1.0
    assert 0.0 <= values[-1] <= 1.0


def test_inverse_square_bound_needs_large_n():
    bound = analytic.tail_bound_constants(2.0, 0.5, 0.75, 5)
    assert bound.n < bound.n0
    with pytest.raises(DomainError, match="n >= n0"):
        bound.inverse_square_bound(100.0)

    large = analytic.tail_bound_constants(2.0, 0.5, 0.75, bound.n0)
    assert large.inverse_square_bound(10.0) == pytest.approx(0.01)


def test_tail_bound_validation():
    with pytest.raises(ParameterError, match="alpha"):
        analytic.tail_bound_constants(2.0, 0.5, 0.4, 10)
    with pytest.raises(ParameterError, match="c_r"):
        analytic.tail_bound_constants(2.0, 0.5, 0.75, 10, c_r=0.0)


def test_density_far_tail_values():
    """
    Cola lejana (rama con peso coseno):
    - valor de referencia para r=1.5 en x=4.6
    - la densidad es finita, positiva y decreciente en [4.6, 30]
    """
    assert analytic.stable_density(1.5, 1.0, 1.0, 4.6) == pytest.approx(0.009065025394057, abs=1e-11)
    values = [analytic.stable_density(1.5, 1.0, 1.0, x) for x in np.linspace(4.6, 30.0, 27)]
    assert all(math.isfinite(v) and 0.0 < v < 1.0 for v in values)
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("x", [2.5, -3.7, 5.2])
def test_cdf_far_tail_matches_normal(x):
    assert analytic.stable_cdf(2.0, 0.5, 1.0, x) == pytest.approx(stats.norm.cdf(x), abs=1e-10)


@pytest.mark.parametrize("r", [0.8, 1.0, 1.5, 2.0])
def test_density_integrates_to_one(r):
    """2 int_0^L f + 2 (1 - F(L)) = 1: densidad y cdf son coherentes."""
    limit = 50.0
    half, _ = integrate.quad(lambda x: analytic.stable_density(r, 1.0, 1.0, x), 0.0, limit,
                             points=[1.0, 5.0], epsabs=1e-10, limit=200)
    tail = 1.0 - analytic.stable_cdf(r, 1.0, 1.0, limit)

    assert 2.0 * half + 2.0 * tail == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("r", [0.8, 1.0, 1.5, 2.0])
def test_density_is_unimodal(r):
    values = [analytic.stable_density(r, 1.0, 1.0, x) for x in np.linspace(0.0, 10.0, 41)]

    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_bivariate_normal_tiny_opposite_signs():
    assert analytic.bivariate_normal_cdf(5.54e-197, -5.54e-197, 0.0) == pytest.approx(0.25)


@given(h=st.floats(min_value=1e-300, max_value=1e-150),
       ratio=st.floats(min_value=0.1, max_value=10.0),
       rho=st.floats(min_value=-0.9, max_value=0.9))
def test_bivariate_normal_near_origin_is_orthant(h, ratio, rho):
    """Cerca del origen cualquier combinación de signos da la probabilidad del ortante."""
    k = h * ratio
    orthant = 0.25 + math.asin(rho) / (2 * math.pi)
    for a, b in ((h, k), (h, -k), (-h, k), (-h, -k)):
        assert analytic.bivariate_normal_cdf(a, b, rho) == pytest.approx(orthant, abs=1e-12)
