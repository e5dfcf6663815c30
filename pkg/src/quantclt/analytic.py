"""Objetos límite analíticos: densidades, funciones de distribución, cuantiles
verdaderos y covarianzas gaussianas límite de los procesos de cuantiles.

Convención de escala estable: función característica exp(-c t |u|^r). Con r=2 y
c=1/2 se obtiene el movimiento browniano estándar.

Las densidades y cuantiles a t=1 se memorizan con ``lru_cache``; la memoria es
segura para lectores concurrentes y rellenarla dos veces da el mismo valor.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate, linalg, optimize, special, stats

from .errors import ConvergenceError, DomainError, ParameterError, UnsupportedExperimentError
from .models import ProcessKind, ProcessSpec, Sampler

LOGGER = logging.getLogger(__name__)

# exp(-TAIL_LOG) < 1e-16: más allá de u_max el integrando es despreciable
TAIL_LOG = 37.0
# Hasta este número de radianes en [0, u_max] basta la cuadratura ordinaria
PLAIN_OSCILLATION = 50.0
QUAD_EPSABS = 1e-14
QUANTILE_RESIDUAL = 1e-10
HERMITE_NODES, HERMITE_WEIGHTS = hermgauss(80)


def _check_stable(r: float, c: float):
    if not 0.0 < r <= 2.0:
        raise ParameterError(f"r debe estar en (0,2], se recibió {r}")
    if not c > 0.0:
        raise ParameterError(f"c debe ser positiva, se recibió {c}")


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha debe estar en (0,1), se recibió {alpha}")


def _u_max(r: float, c: float) -> float:
    return (TAIL_LOG / c) ** (1.0 / r)


# --------------------------------------------------------------------------
# Ley estable simétrica
# --------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _unit_density(r: float, c: float, x: float) -> float:
    """f(1,x) = (1/pi) int_0^inf exp(-c u^r) cos(xu) du, para x >= 0."""
    u_max = _u_max(r, c)

    def kernel(u):
        return math.exp(-c * u ** r)

    if x * u_max <= PLAIN_OSCILLATION:
        value, error = integrate.quad(lambda u: kernel(u) * math.cos(x * u), 0.0, u_max,
                                      epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    else:
        # peso coseno (QAWO) en el intervalo truncado [0, u_max]
        value, error = integrate.quad(kernel, 0.0, u_max, weight="cos", wvar=x,
                                      epsabs=QUAD_EPSABS, limit=400)
        LOGGER.debug("Densidad estable r=%g x=%g con peso coseno (err %.1e)", r, x, error)
    return value / math.pi


@lru_cache(maxsize=65536)
def _unit_cdf(r: float, c: float, x: float) -> float:
    """F(1,x) = 1/2 + (1/pi) int_0^inf exp(-c u^r) sin(xu)/u du, para x >= 0."""
    if x == 0.0:
        return 0.5
    u_max = _u_max(r, c)
    split = min(u_max, math.pi / x)
    # sin(xu)/u = x sinc(xu/pi) es regular en u = 0
    head, _ = integrate.quad(lambda u: math.exp(-c * u ** r) * x * np.sinc(x * u / math.pi),
                             0.0, split, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    tail = 0.0
    if split < u_max:
        tail, _ = integrate.quad(lambda u: math.exp(-c * u ** r) / u, split, u_max,
                                 weight="sin", wvar=x, epsabs=QUAD_EPSABS, limit=400)
    return min(1.0, 0.5 + (head + tail) / math.pi)


def stable_density(r: float, c: float, t: float, x: float) -> float:
    """f(t,x) = t^{-1/r} f(1, x t^{-1/r})."""
    _check_stable(r, c)
    if not t > 0.0:
        raise DomainError(f"La densidad estable requiere t > 0, se recibió t={t}")
    scale = t ** (1.0 / r)
    return _unit_density(float(r), float(c), abs(float(x)) / scale) / scale


def stable_density_at_zero(r: float, c: float, t: float) -> float:
    """f(t,0) = Gamma(1+1/r) / (pi (ct)^{1/r})."""
    _check_stable(r, c)
    if not t > 0.0:
        raise DomainError(f"La densidad estable requiere t > 0, se recibió t={t}")
    return special.gamma(1.0 + 1.0 / r) / (math.pi * (c * t) ** (1.0 / r))


def stable_cdf(r: float, c: float, t: float, x: float) -> float:
    _check_stable(r, c)
    if not t > 0.0:
        raise DomainError(f"La distribución estable requiere t > 0, se recibió t={t}")
    z = float(x) / t ** (1.0 / r)
    if math.isinf(z):
        return 1.0 if z > 0 else 0.0
    value = _unit_cdf(float(r), float(c), abs(z))
    return value if z >= 0 else 1.0 - value


def _expand_bracket(cdf: Callable[[float], float], alpha: float,
                    lo: float, hi: float) -> Tuple[float, float]:
    for _ in range(2000):
        if cdf(lo) <= alpha:
            break
        lo = 2.0 * lo if lo < 0 else -1.0
    for _ in range(2000):
        if cdf(hi) >= alpha:
            break
        hi = 2.0 * hi if hi > 0 else 1.0
    if not (cdf(lo) <= alpha <= cdf(hi)):
        raise ConvergenceError(f"No se encontró intervalo para alpha={alpha}: [{lo}, {hi}]")
    return lo, hi


def solve_quantile(cdf: Callable[[float], float], alpha: float,
                   lo: float = -1.0, hi: float = 1.0) -> float:
    """Raíz de cdf(x) = alpha por brentq, ampliando el intervalo si hace falta."""
    lo, hi = _expand_bracket(cdf, alpha, lo, hi)
    try:
        root = optimize.brentq(lambda x: cdf(x) - alpha, lo, hi,
                               xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"brentq falló en [{lo}, {hi}] para alpha={alpha}: {exc}") from exc
    residual = abs(cdf(root) - alpha)
    if residual > QUANTILE_RESIDUAL:
        raise ConvergenceError(
            f"Cuantil alpha={alpha}: residuo {residual:.2e} en x={root} (intervalo [{lo}, {hi}])"
        )
    return root


@lru_cache(maxsize=4096)
def _unit_quantile(r: float, c: float, alpha: float) -> float:
    if alpha == 0.5:
        return 0.0
    if alpha < 0.5:
        return -_unit_quantile(r, c, 1.0 - alpha)
    return solve_quantile(lambda x: _unit_cdf(r, c, x) if x >= 0 else 1.0 - _unit_cdf(r, c, -x),
                          alpha, 0.0, 1.0)


def stable_quantile(r: float, c: float, t: float, alpha: float) -> float:
    """tau_alpha(t) = t^{1/r} tau_alpha(1)."""
    _check_stable(r, c)
    _check_alpha(alpha)
    if t < 0:
        raise DomainError(f"t debe ser no negativo, se recibió {t}")
    if t == 0:
        return 0.0
    return t ** (1.0 / r) * _unit_quantile(float(r), float(c), float(alpha))


# --------------------------------------------------------------------------
# Distribuciones base para la convolución X = Y + Z
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PointMass:
    value: float = 0.0


@dataclass(frozen=True)
class GaussianBase:
    variance: float
    mean: float = 0.0


@dataclass(frozen=True)
class StableBase:
    r: float
    c: float
    t: float


@dataclass(frozen=True, eq=False)
class SampleBase:
    """Distribución empírica de una muestra (p. ej. referencia de Poisson compuesto)."""
    values: np.ndarray


def _convolve(base, kernel: Callable, x: float) -> float:
    """int kernel(x - v) dH(v) para una distribución base H."""
    if isinstance(base, PointMass):
        return float(kernel(x - base.value))
    if isinstance(base, GaussianBase):
        if base.variance == 0.0:
            return float(kernel(x - base.mean))
        nodes = base.mean + math.sqrt(2.0 * base.variance) * HERMITE_NODES
        return float(np.dot(HERMITE_WEIGHTS, kernel(x - nodes)) / math.sqrt(math.pi))
    if isinstance(base, SampleBase):
        return float(np.mean(kernel(x - base.values)))
    if isinstance(base, StableBase):
        return _stable_convolution(base, kernel, x)
    raise ParameterError(f"Distribución base no soportada: {type(base).__name__}")


def _stable_convolution(base: StableBase, kernel: Callable, x: float) -> float:
    # el grueso de la masa de la base está en [-50 s, 50 s]; las colas se integran aparte
    edge = 50.0 * base.t ** (1.0 / base.r)

    def integrand(v):
        return float(kernel(x - v)) * stable_density(base.r, base.c, base.t, v)

    breaks = sorted(p for p in {0.0, x} if -edge < p < edge)
    middle = integrate.quad(integrand, -edge, edge, points=breaks, limit=400, epsabs=1e-12)[0]
    left = integrate.quad(integrand, -np.inf, -edge, limit=200, epsabs=1e-12)[0]
    right = integrate.quad(integrand, edge, np.inf, limit=200, epsabs=1e-12)[0]
    return middle + left + right


def convolved_density(base, z_density: Callable, x: float) -> float:
    """f(x) = int g(x - v) dH(v).

    Base gaussiana: Gauss-Hermite; base empírica: media de g(x - v_i); base
    estable: cuadratura sobre la densidad estable; masa puntual: g(x - v0).
    """
    return _convolve(base, z_density, x)


def convolved_cdf(base, z_cdf: Callable, x: float) -> float:
    """F(x) = int G(x - v) dH(v)."""
    return _convolve(base, z_cdf, x)


# --------------------------------------------------------------------------
# Leyes marginales
# --------------------------------------------------------------------------

class MarginalLaw(ABC):
    """Familia de marginales t -> F(t,.) con densidad estrictamente positiva."""

    @property
    def zero_at_zero(self) -> bool:
        return False

    @property
    def scaling_exponent(self) -> Optional[float]:
        return None

    @abstractmethod
    def pdf(self, t: float, x: float) -> float:
        ...

    @abstractmethod
    def cdf(self, t: float, x: float) -> float:
        ...

    def quantile(self, t: float, alpha: float) -> float:
        _check_alpha(alpha)
        return solve_quantile(lambda x: self.cdf(t, x), alpha)

    def distribution_at(self, t: float):
        """Distribución de X(t) como base de una convolución."""
        raise UnsupportedExperimentError(
            f"{type(self).__name__} no puede usarse como base de un desplazamiento"
        )

    def quantile_matrix(self, times: Sequence[float], levels: Sequence[float]) -> np.ndarray:
        """Matriz tau[t, alpha] de cuantiles verdaderos."""
        return np.array([[true_quantile(self, t, a) for a in levels] for t in times], dtype=float)


@dataclass(frozen=True)
class StableLaw(MarginalLaw):
    r: float
    c: float

    def __post_init__(self):
        _check_stable(self.r, self.c)

    @property
    def zero_at_zero(self) -> bool:
        return True

    @property
    def scaling_exponent(self) -> Optional[float]:
        return 1.0 / self.r

    def pdf(self, t, x):
        return stable_density(self.r, self.c, t, x)

    def cdf(self, t, x):
        return stable_cdf(self.r, self.c, t, x)

    def quantile(self, t, alpha):
        return stable_quantile(self.r, self.c, t, alpha)

    def distribution_at(self, t):
        return PointMass(0.0) if t == 0 else StableBase(self.r, self.c, t)


@dataclass(frozen=True)
class GaussianLaw(MarginalLaw):
    """Proceso gaussiano centrado dado por su función de covarianza."""
    covariance_fn: Callable[[float, float], float]
    scaling: Optional[float] = None
    label: str = "gaussian"

    @classmethod
    def fbm(cls, gamma: float) -> "GaussianLaw":
        h = 2.0 * gamma
        return cls(lambda s, t: 0.5 * (s ** h + t ** h - abs(s - t) ** h), gamma,
                   f"fbm(gamma={gamma:g})")

    @classmethod
    def brownian(cls, diffusion: float = 1.0) -> "GaussianLaw":
        """Movimiento browniano con Var(X_t) = diffusion * t."""
        return cls(lambda s, t: diffusion * min(s, t), 0.5, f"brownian({diffusion:g})")

    def variance(self, t: float) -> float:
        return float(self.covariance_fn(t, t))

    def correlation(self, s: float, t: float) -> float:
        """Correlación de (X_s, X_t), recortada a [-1, 1] con aviso."""
        rho = self.covariance_fn(s, t) / math.sqrt(self.variance(s) * self.variance(t))
        if abs(rho) > 1.0:
            LOGGER.warning("Correlación %.17g fuera de [-1,1] en s=%g t=%g; se recorta", rho, s, t)
            rho = math.copysign(1.0, rho)
        return rho

    @property
    def zero_at_zero(self) -> bool:
        return self.variance(0.0) == 0.0

    @property
    def scaling_exponent(self) -> Optional[float]:
        return self.scaling

    def _sigma(self, t: float) -> float:
        if t < 0:
            raise DomainError(f"t debe ser no negativo, se recibió {t}")
        return math.sqrt(self.variance(t))

    def pdf(self, t, x):
        sigma = self._sigma(t)
        if sigma == 0.0:
            raise DomainError(f"La marginal en t={t} es degenerada y no tiene densidad")
        return float(stats.norm.pdf(x, scale=sigma))

    def cdf(self, t, x):
        sigma = self._sigma(t)
        if sigma == 0.0:
            return 1.0 if x >= 0 else 0.0
        return float(stats.norm.cdf(x, scale=sigma))

    def quantile(self, t, alpha):
        _check_alpha(alpha)
        return self._sigma(t) * float(stats.norm.ppf(alpha))

    def distribution_at(self, t):
        return GaussianBase(self.variance(t))


@dataclass(frozen=True)
class ConvolvedLaw(MarginalLaw):
    """Marginal de X(t) = Y(t) + Z, con Z independiente de densidad suave."""
    base: MarginalLaw
    z_dist: Sampler

    def __post_init__(self):
        if not self.z_dist.has_smooth_density:
            raise ParameterError(
                f"Z={self.z_dist.label()} necesita densidad estrictamente positiva, acotada y continua"
            )

    def pdf(self, t, x):
        return convolved_density(self.base.distribution_at(t), self.z_dist.pdf, x)

    def cdf(self, t, x):
        return convolved_cdf(self.base.distribution_at(t), self.z_dist.cdf, x)

    def quantile(self, t, alpha):
        _check_alpha(alpha)
        return _convolved_quantile(self, float(t), float(alpha))


@lru_cache(maxsize=4096)
def _convolved_quantile(law: ConvolvedLaw, t: float, alpha: float) -> float:
    return solve_quantile(lambda x: law.cdf(t, x), alpha)


def true_quantile(law: MarginalLaw, t: float, alpha: float) -> float:
    """tau_alpha(t) = F^{-1}(t, alpha); en t=0 vale 0 para leyes nulas en el origen."""
    _check_alpha(alpha)
    if t < 0:
        raise DomainError(f"t debe ser no negativo, se recibió {t}")
    if t == 0 and law.zero_at_zero:
        return 0.0
    return law.quantile(t, alpha)


def marginal_law(spec: ProcessSpec) -> MarginalLaw:
    """Ley marginal analítica de un ProcessSpec de un parámetro."""
    kind = spec.kind
    if kind is ProcessKind.FBM:
        return GaussianLaw.fbm(spec.gamma)
    if kind is ProcessKind.SYM_STABLE:
        return StableLaw(spec.r, spec.c)
    if kind is ProcessKind.SHIFTED:
        base = spec.base
        if base.kind is ProcessKind.SYM_STABLE and base.r == 2.0:
            # r=2 es gaussiano: así la convolución usa Gauss-Hermite
            return ConvolvedLaw(GaussianLaw.brownian(2.0 * base.c), spec.z_dist)
        return ConvolvedLaw(marginal_law(base), spec.z_dist)
    raise UnsupportedExperimentError(
        f"{spec.label()} no tiene ley marginal analítica; use MARGINAL_VARIANCE "
        "con referencia empírica"
    )


# --------------------------------------------------------------------------
# Probabilidades conjuntas
# --------------------------------------------------------------------------

def bivariate_normal_cdf(h: float, k: float, rho: float) -> float:
    """P(U <= h, V <= k) para normales estándar con correlación rho (T de Owen)."""
    if h == -np.inf or k == -np.inf:
        return 0.0
    if h == np.inf:
        return float(special.ndtr(k))
    if k == np.inf:
        return float(special.ndtr(h))
    if rho >= 1.0:
        return float(special.ndtr(min(h, k)))
    if rho <= -1.0:
        return max(0.0, float(special.ndtr(h) + special.ndtr(k) - 1.0))
    if h == 0.0 and k == 0.0:
        return 0.25 + math.asin(rho) / (2.0 * math.pi)

    den = math.sqrt(1.0 - rho * rho)
    t_h = math.copysign(0.25, k) if h == 0.0 else special.owens_t(h, (k - rho * h) / (h * den))
    t_k = math.copysign(0.25, h) if k == 0.0 else special.owens_t(k, (h - rho * k) / (k * den))
    # signos comparados directamente: h * k se anula por subdesbordamiento
    if h == 0.0 or k == 0.0:
        delta = 0.0 if h + k >= 0 else 0.5
    else:
        delta = 0.0 if (h > 0) == (k > 0) else 0.5
    value = 0.5 * special.ndtr(h) + 0.5 * special.ndtr(k) - t_h - t_k - delta
    return float(min(1.0, max(0.0, value)))


def gaussian_joint_prob(law: GaussianLaw, s: float, x: float, t: float, y: float) -> float:
    """P(X_s <= x, X_t <= y) para un proceso gaussiano centrado."""
    sig_s, sig_t = math.sqrt(law.variance(s)), math.sqrt(law.variance(t))
    if sig_s == 0.0:
        return (1.0 if x >= 0 else 0.0) * law.cdf(t, y)
    if sig_t == 0.0:
        return (1.0 if y >= 0 else 0.0) * law.cdf(s, x)
    if s == t:
        return law.cdf(t, min(x, y))
    return bivariate_normal_cdf(x / sig_s, y / sig_t, law.correlation(s, t))


def joint_prob_stable(r: float, c: float, s: float, t: float, a: float, b: float) -> float:
    """P(X_s <= a, X_t <= b) = int_{-inf}^a f(s,u) F(t-s, b-u) du, con 0 < s < t."""
    _check_stable(r, c)
    if not 0.0 < s < t:
        raise DomainError(
            f"joint_prob_stable necesita 0 < s < t (s={s}, t={t}); con s = t use min(a, b)"
        )
    if a == -np.inf or b == -np.inf:
        return 0.0
    if b == np.inf:
        return stable_cdf(r, c, s, a)
    if a == np.inf:
        return stable_cdf(r, c, t, b)

    def integrand(u):
        return stable_density(r, c, s, u) * stable_cdf(r, c, t - s, b - u)

    width = 50.0 * max(s, t - s) ** (1.0 / r)
    lo = min(a, b, 0.0) - width
    inner = sorted({p for p in (0.0, b) if lo < p < a})
    body, err = integrate.quad(integrand, lo, a, points=inner or None,
                               epsabs=1e-11, epsrel=1e-10, limit=400)
    tail, _ = integrate.quad(integrand, -np.inf, lo, epsabs=1e-12, limit=200)
    LOGGER.debug("joint_prob_stable s=%g t=%g a=%g b=%g err=%.1e", s, t, a, b, err)
    return float(min(1.0, max(0.0, body + tail)))


def stable_joint_prob(r: float, c: float, s: float, x: float, t: float, y: float) -> float:
    """Como ``joint_prob_stable`` pero admite cualquier orden y s = t o s = 0."""
    if s > t:
        s, x, t, y = t, y, s, x
    if s == 0.0:
        return (1.0 if x >= 0 else 0.0) * (stable_cdf(r, c, t, y) if t > 0 else float(y >= 0))
    if s == t:
        return stable_cdf(r, c, t, min(x, y))
    return joint_prob_stable(r, c, s, t, x, y)


def limit_cov_empirical_G(law: MarginalLaw, s: float, x: float, t: float, y: float,
                          joint_prob: Callable[[float, float, float, float], float]) -> float:
    """E(G(s,x) G(t,y)) = P(X_s <= x, X_t <= y) - F(s,x) F(t,y)."""
    return joint_prob(s, x, t, y) - law.cdf(s, x) * law.cdf(t, y)


def dist_d(law: MarginalLaw, s: float, x: float, t: float, y: float,
           joint_prob: Callable[[float, float, float, float], float]) -> float:
    """Pseudo-métrica L2 de los indicadores centrados en (s,x) y (t,y)."""
    f1, f2 = law.cdf(s, x), law.cdf(t, y)
    d2 = f1 + f2 - 2.0 * joint_prob(s, x, t, y) - (f1 - f2) ** 2
    return math.sqrt(max(0.0, d2))


# --------------------------------------------------------------------------
# Covarianzas límite del proceso de cuantiles
# --------------------------------------------------------------------------

def limit_cov_quantile_stable(r: float, c: float, s: float, beta: float,
                              t: float, alpha: float) -> float:
    """[P(X_s <= tau_beta(s), X_t <= tau_alpha(t)) - alpha beta] / [f(s,tau_beta(s)) f(t,tau_alpha(t))]."""
    _check_alpha(alpha)
    _check_alpha(beta)
    if s == 0.0 or t == 0.0:
        return 0.0
    if s > t:
        s, beta, t, alpha = t, alpha, s, beta
    q_s = stable_quantile(r, c, s, beta)
    q_t = stable_quantile(r, c, t, alpha)
    joint = min(alpha, beta) if s == t else joint_prob_stable(r, c, s, t, q_s, q_t)
    return (joint - alpha * beta) / (stable_density(r, c, s, q_s) * stable_density(r, c, t, q_t))


def stable_median_covariance(r: float, c: float, s: float, t: float) -> float:
    """Covarianza límite en la mediana: 4 pi^2 (c^2 s t)^{1/r} / (2 Gamma(1+1/r))^2 [P - 1/4]."""
    _check_stable(r, c)
    if s == 0.0 or t == 0.0:
        return 0.0
    lo, hi = min(s, t), max(s, t)
    joint = 0.5 if lo == hi else joint_prob_stable(r, c, lo, hi, 0.0, 0.0)
    norming = 2.0 * special.gamma(1.0 + 1.0 / r)
    return 4.0 * math.pi ** 2 * (c * c * s * t) ** (1.0 / r) / norming ** 2 * (joint - 0.25)


def fbm_correlation(gamma: float, s: float, t: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma debe estar en (0,1), se recibió {gamma}")
    return GaussianLaw.fbm(gamma).correlation(s, t)


def limit_cov_quantile_fbm(gamma: float, s: float, beta: float, t: float, alpha: float) -> float:
    """Covarianza límite del proceso de cuantiles para fBm de índice gamma."""
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma debe estar en (0,1), se recibió {gamma}")
    _check_alpha(alpha)
    _check_alpha(beta)
    if s == 0.0 or t == 0.0:
        return 0.0
    z_b = float(stats.norm.ppf(beta))
    z_a = float(stats.norm.ppf(alpha))
    if s == t:
        joint = min(alpha, beta)
    else:
        joint = bivariate_normal_cdf(z_b, z_a, fbm_correlation(gamma, s, t))
    dens = (stats.norm.pdf(z_b) / s ** gamma) * (stats.norm.pdf(z_a) / t ** gamma)
    return (joint - alpha * beta) / dens


def limit_cov_quantile_shifted_gaussian(law: ConvolvedLaw, s: float, beta: float,
                                        t: float, alpha: float) -> float:
    """Covarianza límite para X = Y + Z con Y gaussiano centrado.

    P(X_s <= a, X_t <= b) = int P(Y_s <= a - z, Y_t <= b - z) g(z) dz.
    """
    if not isinstance(law.base, GaussianLaw):
        raise UnsupportedExperimentError("Sólo hay covarianza límite para desplazamientos de bases gaussianas")
    _check_alpha(alpha)
    _check_alpha(beta)
    q_s = true_quantile(law, s, beta)
    q_t = true_quantile(law, t, alpha)
    if s == t:
        joint = min(alpha, beta)
    else:
        base = law.base
        joint, _ = integrate.quad(
            lambda z: gaussian_joint_prob(base, s, q_s - z, t, q_t - z) * law.z_dist.pdf(z),
            -np.inf, np.inf, epsabs=1e-11, limit=400,
        )
    return (joint - alpha * beta) / (law.pdf(s, q_s) * law.pdf(t, q_t))


class CovarianceKind(Enum):
    QUANTILE_LIMIT_STABLE = "quantile_limit_stable"
    QUANTILE_LIMIT_FBM = "quantile_limit_fbm"
    QUANTILE_LIMIT_SHIFTED_GAUSSIAN = "quantile_limit_shifted_gaussian"
    EMPIRICAL_LIMIT_G = "empirical_limit_g"


@dataclass(frozen=True)
class CovarianceModel:
    """Núcleo de covarianza K((s,a),(t,b)) de un límite gaussiano.

    Para los tipos QUANTILE_LIMIT_* los argumentos son niveles; para
    EMPIRICAL_LIMIT_G son valores x, y del proceso empírico.
    """
    kind: CovarianceKind
    params: Dict[str, float] = field(default_factory=dict)
    law: Optional[MarginalLaw] = None
    joint_prob: Optional[Callable[[float, float, float, float], float]] = None

    @classmethod
    def stable(cls, r: float, c: float) -> "CovarianceModel":
        _check_stable(r, c)
        return cls(CovarianceKind.QUANTILE_LIMIT_STABLE, {"r": r, "c": c}, StableLaw(r, c))

    @classmethod
    def fbm(cls, gamma: float) -> "CovarianceModel":
        return cls(CovarianceKind.QUANTILE_LIMIT_FBM, {"gamma": gamma}, GaussianLaw.fbm(gamma))

    @classmethod
    def shifted_gaussian(cls, law: ConvolvedLaw) -> "CovarianceModel":
        if not isinstance(law.base, GaussianLaw):
            raise UnsupportedExperimentError("La base del desplazamiento debe ser gaussiana")
        return cls(CovarianceKind.QUANTILE_LIMIT_SHIFTED_GAUSSIAN, {}, law)

    @classmethod
    def empirical_G(cls, spec: ProcessSpec) -> "CovarianceModel":
        law = marginal_law(spec)
        if isinstance(law, StableLaw):
            joint = lambda s, x, t, y: stable_joint_prob(law.r, law.c, s, x, t, y)  # noqa: E731
        elif isinstance(law, GaussianLaw):
            joint = lambda s, x, t, y: gaussian_joint_prob(law, s, x, t, y)  # noqa: E731
        else:
            raise UnsupportedExperimentError(f"Sin probabilidad conjunta analítica para {spec.label()}")
        return cls(CovarianceKind.EMPIRICAL_LIMIT_G, {}, law, joint)

    def __call__(self, s: float, a: float, t: float, b: float) -> float:
        if self.kind is CovarianceKind.QUANTILE_LIMIT_STABLE:
            return limit_cov_quantile_stable(self.params["r"], self.params["c"], s, a, t, b)
        if self.kind is CovarianceKind.QUANTILE_LIMIT_FBM:
            return limit_cov_quantile_fbm(self.params["gamma"], s, a, t, b)
        if self.kind is CovarianceKind.QUANTILE_LIMIT_SHIFTED_GAUSSIAN:
            return limit_cov_quantile_shifted_gaussian(self.law, s, a, t, b)
        return limit_cov_empirical_G(self.law, s, a, t, b, self.joint_prob)


def covariance_model(spec: ProcessSpec) -> CovarianceModel:
    """Modelo de covarianza límite del proceso de cuantiles para un ProcessSpec."""
    if spec.kind is ProcessKind.SYM_STABLE:
        return CovarianceModel.stable(spec.r, spec.c)
    if spec.kind is ProcessKind.FBM:
        return CovarianceModel.fbm(spec.gamma)
    if spec.kind is ProcessKind.SHIFTED:
        law = marginal_law(spec)
        if isinstance(law, ConvolvedLaw) and isinstance(law.base, GaussianLaw):
            return CovarianceModel.shifted_gaussian(law)
    raise UnsupportedExperimentError(
        f"No hay covarianza límite analítica para {spec.label()}; "
        "use MARGINAL_VARIANCE con referencia empírica"
    )


def quantile_limit_distance(model: CovarianceModel, first: Tuple[float, float],
                            second: Tuple[float, float]) -> float:
    """d_W((s,beta),(t,alpha)) = sqrt(K(s,b,s,b) + K(t,a,t,a) - 2 K(s,b,t,a))."""
    (s, beta), (t, alpha) = first, second
    d2 = model(s, beta, s, beta) + model(t, alpha, t, alpha) - 2.0 * model(s, beta, t, alpha)
    return math.sqrt(max(0.0, d2))


def covariance_matrix(model: CovarianceModel, points: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Matriz simétrica K[i,j] = K(points[i], points[j])."""
    size = len(points)
    matrix = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            matrix[i, j] = matrix[j, i] = model(points[i][0], points[i][1],
                                                points[j][0], points[j][1])
    return matrix


def is_psd(matrix: np.ndarray, rel_tol: float = 1e-8) -> bool:
    """Simétrica y con autovalor mínimo >= -rel_tol * traza."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
        return False
    eigenvalues = linalg.eigvalsh(matrix)
    return bool(eigenvalues.min() >= -rel_tol * max(np.trace(matrix), 0.0))


# --------------------------------------------------------------------------
# Cotas uniformes de cola
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TailBound:
    """Constantes de la cota de cola del supremo sqrt(n)|tau_n - tau| sobre A."""
    r: float
    alpha_star: float
    n: int
    c_r: float
    lambda_r: float
    n0: int
    threshold: float

    @property
    def exponent(self) -> float:
        return self.r * math.floor(self.n * (1.0 - self.alpha_star))

    def bound(self, u: float) -> float:
        """[lambda_r sqrt(n) / u]^{r floor(n(1-alpha*))} si u/sqrt(n) >= C; si no, la cota trivial 1."""
        if u / math.sqrt(self.n) < self.threshold:
            return 1.0
        return min(1.0, (self.lambda_r * math.sqrt(self.n) / u) ** self.exponent)

    def quadratic_bound(self, u: float) -> float:
        """2^{-(k-2)} (lambda_r sqrt(n) / u)^2 para u/sqrt(n) >= C."""
        if u / math.sqrt(self.n) < self.threshold:
            return 1.0
        return min(1.0, 2.0 ** (-(self.exponent - 2.0)) * (self.lambda_r * math.sqrt(self.n) / u) ** 2)

    def inverse_square_bound(self, u: float) -> float:
        """u^{-2}, válida para n >= n0 y u/sqrt(n) >= C."""
        if self.n < self.n0:
            raise DomainError(f"La cota u^-2 sólo vale para n >= n0={self.n0} (n={self.n})")
        return 1.0 if u <= 1.0 else u ** -2.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "r": self.r, "alpha_star": self.alpha_star, "n": self.n, "c_r": self.c_r,
            "lambda_r": self.lambda_r, "n0": self.n0, "threshold": self.threshold,
        }


def first_valid_n(r: float, alpha_star: float, lambda_r: float, max_n: int = 10_000_000) -> int:
    """n0 = min{n : 2^{-(r floor(n(1-alpha*)) - 2)} (lambda_r sqrt(n))^2 <= 1}, en escala log."""
    log_lambda = math.log(lambda_r)
    chunk = 100_000
    for start in range(1, max_n + 1, chunk):
        n = np.arange(start, min(start + chunk, max_n + 1), dtype=float)
        k = r * np.floor(n * (1.0 - alpha_star))
        log_value = -(k - 2.0) * math.log(2.0) + 2.0 * log_lambda + np.log(n)
        hits = np.flatnonzero(log_value <= 0.0)
        if hits.size:
            return int(n[hits[0]])
    raise ConvergenceError(f"No hay n0 <= {max_n} para r={r}, alpha*={alpha_star}, lambda_r={lambda_r}")


def tail_bound_constants(r: float, c: float, alpha_star: float, n: int,
                         c_r: float = 1.0) -> TailBound:
    """lambda_r^r = 2^r e c_r / (1 - alpha*), n0 y umbral C = 2 lambda_r v 2 tau_{alpha*}(1)."""
    _check_stable(r, c)
    if not 0.5 < alpha_star < 1.0:
        raise ParameterError(f"alpha* debe estar en (1/2, 1), se recibió {alpha_star}")
    if c_r <= 0:
        raise ParameterError(f"c_r debe ser positiva, se recibió {c_r}")
    if n < 1:
        raise ParameterError(f"n debe ser >= 1, se recibió {n}")
    lambda_r = (2.0 ** r * math.e * c_r / (1.0 - alpha_star)) ** (1.0 / r)
    threshold = max(2.0 * lambda_r, 2.0 * stable_quantile(r, c, 1.0, alpha_star))
    return TailBound(r, alpha_star, int(n), c_r, lambda_r,
                     first_valid_n(r, alpha_star, lambda_r), threshold)
