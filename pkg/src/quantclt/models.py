from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Union
import math

import numpy as np
from dataclasses_json import dataclass_json
from scipy import stats

from .errors import ParameterError, ShapeError


# --------------------------------------------------------------------------
# Muestreadores 1-D con nombre
# --------------------------------------------------------------------------

_SAMPLER_ARITY = {
    "normal": 2,
    "cauchy": 2,
    "laplace": 2,
    "uniform": 2,
    "exponential": 1,
    "constant": 1,
    "rademacher": 0,
}

# Leyes con densidad estrictamente positiva, acotada y continua en toda la recta
_SMOOTH_DENSITY = {"normal", "cauchy", "laplace"}


@dataclass(frozen=True)
class Sampler:
    """Distribución 1-D con nombre y parámetros (saltos, desplazamientos Z)."""
    name: str
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        """Validaciones después de la inicialización."""
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.name not in _SAMPLER_ARITY:
            raise ParameterError(
                f"Muestreador desconocido '{self.name}'; opciones: {sorted(_SAMPLER_ARITY)}"
            )
        if len(self.params) != _SAMPLER_ARITY[self.name]:
            raise ParameterError(
                f"El muestreador '{self.name}' espera {_SAMPLER_ARITY[self.name]} "
                f"parámetros, se recibieron {len(self.params)}"
            )
        if self.name in ("normal", "cauchy", "laplace") and self.params[1] <= 0:
            raise ParameterError(f"La escala de '{self.name}' debe ser positiva")
        if self.name == "uniform" and not self.params[1] > self.params[0]:
            raise ParameterError("La uniforme necesita low < high")
        if self.name == "exponential" and self.params[0] <= 0:
            raise ParameterError("La escala de la exponencial debe ser positiva")

    @classmethod
    def normal(cls, loc: float = 0.0, scale: float = 1.0) -> "Sampler":
        return cls("normal", (loc, scale))

    @classmethod
    def cauchy(cls, loc: float = 0.0, scale: float = 1.0) -> "Sampler":
        return cls("cauchy", (loc, scale))

    @classmethod
    def laplace(cls, loc: float = 0.0, scale: float = 1.0) -> "Sampler":
        return cls("laplace", (loc, scale))

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 1.0) -> "Sampler":
        return cls("uniform", (low, high))

    @classmethod
    def exponential(cls, scale: float = 1.0) -> "Sampler":
        return cls("exponential", (scale,))

    @classmethod
    def constant(cls, value: float) -> "Sampler":
        return cls("constant", (value,))

    @classmethod
    def rademacher(cls) -> "Sampler":
        return cls("rademacher", ())

    @property
    def has_atom_at_zero(self) -> bool:
        return self.name == "constant" and self.params[0] == 0.0

    @property
    def has_smooth_density(self) -> bool:
        """Densidad estrictamente positiva, acotada y continua."""
        return self.name in _SMOOTH_DENSITY

    def distribution(self):
        """Distribución congelada de scipy, o None para leyes discretas."""
        p = self.params
        if self.name == "normal":
            return stats.norm(loc=p[0], scale=p[1])
        if self.name == "cauchy":
            return stats.cauchy(loc=p[0], scale=p[1])
        if self.name == "laplace":
            return stats.laplace(loc=p[0], scale=p[1])
        if self.name == "uniform":
            return stats.uniform(loc=p[0], scale=p[1] - p[0])
        if self.name == "exponential":
            return stats.expon(scale=p[0])
        return None

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == "constant":
            return np.full(size, self.params[0], dtype=float)
        if self.name == "rademacher":
            return rng.choice(np.array([-1.0, 1.0]), size=size)
        return np.asarray(self.distribution().rvs(size=size, random_state=rng), dtype=float)

    def pdf(self, x):
        dist = self.distribution()
        if dist is None:
            raise ParameterError(f"'{self.name}' no tiene densidad")
        return dist.pdf(x)

    def cdf(self, x):
        if self.name == "constant":
            return np.where(np.asarray(x) >= self.params[0], 1.0, 0.0)
        if self.name == "rademacher":
            x = np.asarray(x)
            return np.where(x >= 1.0, 1.0, np.where(x >= -1.0, 0.5, 0.0))
        return self.distribution().cdf(x)

    def label(self) -> str:
        args = ", ".join(f"{p:g}" for p in self.params)
        return f"{self.name}({args})"

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "params": list(self.params)}


# --------------------------------------------------------------------------
# Procesos de entrada
# --------------------------------------------------------------------------

class ProcessKind(Enum):
    FBM = "fbm"
    BROWNIAN_SHEET_2D = "brownian_sheet"
    SYM_STABLE = "sym_stable"
    COMPOUND_POISSON = "compound_poisson"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class ProcessSpec:
    """Descripción declarativa de la ley de un proceso de entrada."""
    kind: ProcessKind
    gamma: Optional[float] = None
    r: Optional[float] = None
    c: Optional[float] = None
    lam: Optional[float] = None
    jump_dist: Optional[Sampler] = None
    base: Optional["ProcessSpec"] = None
    z_dist: Optional[Sampler] = None

    def __post_init__(self):
        """Validaciones después de la inicialización."""
        kind = self.kind
        if kind is ProcessKind.FBM:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ParameterError(f"gamma debe estar en (0,1), se recibió {self.gamma}")
        elif kind is ProcessKind.SYM_STABLE:
            if self.r is None or not 0.0 < self.r <= 2.0:
                raise ParameterError(f"r debe estar en (0,2], se recibió {self.r}")
            if self.c is None or self.c <= 0:
                raise ParameterError(f"c debe ser positiva, se recibió {self.c}")
        elif kind is ProcessKind.COMPOUND_POISSON:
            if self.lam is None or self.lam <= 0:
                raise ParameterError(f"lambda debe ser positiva, se recibió {self.lam}")
            if self.jump_dist is None:
                raise ParameterError("Falta la distribución de saltos")
            if self.jump_dist.has_atom_at_zero:
                raise ParameterError("La distribución de saltos no puede tener masa en cero")
        elif kind is ProcessKind.SHIFTED:
            if self.base is None or self.z_dist is None:
                raise ParameterError("Un proceso desplazado necesita base y z_dist")
            if self.base.kind is ProcessKind.SHIFTED:
                raise ParameterError("No se admiten desplazamientos anidados; sume las Z en una sola")
        elif kind is not ProcessKind.BROWNIAN_SHEET_2D:
            raise ParameterError(f"Tipo de proceso desconocido: {kind}")

    @classmethod
    def fbm(cls, gamma: float) -> "ProcessSpec":
        return cls(ProcessKind.FBM, gamma=float(gamma))

    @classmethod
    def brownian_motion(cls) -> "ProcessSpec":
        """Movimiento browniano estándar como estable simétrico r=2, c=1/2."""
        return cls(ProcessKind.SYM_STABLE, r=2.0, c=0.5)

    @classmethod
    def brownian_sheet(cls) -> "ProcessSpec":
        return cls(ProcessKind.BROWNIAN_SHEET_2D)

    @classmethod
    def sym_stable(cls, r: float, c: float) -> "ProcessSpec":
        return cls(ProcessKind.SYM_STABLE, r=float(r), c=float(c))

    @classmethod
    def compound_poisson(cls, lam: float, jump_dist: Sampler) -> "ProcessSpec":
        return cls(ProcessKind.COMPOUND_POISSON, lam=float(lam), jump_dist=jump_dist)

    @classmethod
    def shifted(cls, base: "ProcessSpec", z_dist: Sampler) -> "ProcessSpec":
        return cls(ProcessKind.SHIFTED, base=base, z_dist=z_dist)

    @property
    def root(self) -> "ProcessSpec":
        """Proceso base sin desplazamientos."""
        return self.base.root if self.kind is ProcessKind.SHIFTED else self

    @property
    def zero_at_zero(self) -> bool:
        if self.kind is ProcessKind.SHIFTED:
            return self.base.zero_at_zero and self.z_dist.name == "constant" \
                and self.z_dist.params[0] == 0.0
        return True

    @property
    def scaling_exponent(self) -> Optional[float]:
        """p tal que X(ct) tiene la ley de c^p X(t), o None si no es escalable."""
        if self.kind is ProcessKind.FBM:
            return self.gamma
        if self.kind is ProcessKind.SYM_STABLE:
            return 1.0 / self.r
        return None

    @property
    def is_two_parameter(self) -> bool:
        return self.root.kind is ProcessKind.BROWNIAN_SHEET_2D

    def label(self) -> str:
        if self.kind is ProcessKind.FBM:
            return f"fbm(gamma={self.gamma:g})"
        if self.kind is ProcessKind.SYM_STABLE:
            return f"sym_stable(r={self.r:g}, c={self.c:g})"
        if self.kind is ProcessKind.COMPOUND_POISSON:
            return f"compound_poisson(lambda={self.lam:g}, jump={self.jump_dist.label()})"
        if self.kind is ProcessKind.SHIFTED:
            return f"{self.base.label()} + {self.z_dist.label()}"
        return "brownian_sheet"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        for name in ("gamma", "r", "c", "lam"):
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        if self.jump_dist is not None:
            data["jump_dist"] = self.jump_dist.to_dict()
        if self.base is not None:
            data["base"] = self.base.to_dict()
        if self.z_dist is not None:
            data["z_dist"] = self.z_dist.to_dict()
        return data


# --------------------------------------------------------------------------
# Mallas
# --------------------------------------------------------------------------

def _validate_axis(points, name: str) -> Tuple[float, ...]:
    points = tuple(float(p) for p in points)
    if len(points) < 2:
        raise ParameterError(f"La malla {name} necesita al menos 2 puntos")
    if points[0] < 0:
        raise ParameterError(f"La malla {name} empieza en {points[0]} < 0")
    if any(not math.isfinite(p) for p in points):
        raise ParameterError(f"La malla {name} contiene valores no finitos")
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ParameterError(f"La malla {name} debe ser estrictamente creciente")
    return points


@dataclass(frozen=True)
class TimeGrid:
    """Discretización de E = [0, T]."""
    points: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", _validate_axis(self.points, "temporal"))

    @classmethod
    def create(cls, points) -> "TimeGrid":
        return cls(tuple(points))

    @classmethod
    def uniform(cls, T: float, m: int) -> "TimeGrid":
        """m puntos equiespaciados en [0, T], incluidos 0 y T."""
        return cls(tuple(np.linspace(0.0, T, m)))

    @property
    def T(self) -> float:
        return self.points[-1]

    @property
    def size(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        """Índice del punto de la malla igual a t (con tolerancia)."""
        arr = self.as_array()
        j = int(np.argmin(np.abs(arr - t)))
        if abs(arr[j] - t) > tol * max(1.0, abs(t)):
            raise ParameterError(f"t={t} no pertenece a la malla temporal")
        return j

    def indices_between(self, lo: float, hi: float, tol: float = 1e-12) -> np.ndarray:
        arr = self.as_array()
        return np.flatnonzero((arr >= lo - tol) & (arr <= hi + tol))

    def to_dict(self) -> Dict[str, Any]:
        return {"points": list(self.points)}


@dataclass(frozen=True)
class TimeGrid2D:
    """Malla producto de [0,T]^2 para la sábana browniana."""
    points_x: Tuple[float, ...]
    points_y: Tuple[float, ...]

    def __post_init__(self):
        px = _validate_axis(self.points_x, "x")
        py = _validate_axis(self.points_y, "y")
        if px[0] != 0.0 or py[0] != 0.0:
            raise ParameterError("Cada eje de la malla 2D debe contener el 0")
        object.__setattr__(self, "points_x", px)
        object.__setattr__(self, "points_y", py)

    @classmethod
    def uniform(cls, T: float, mx: int, my: int) -> "TimeGrid2D":
        return cls(tuple(np.linspace(0.0, T, mx)), tuple(np.linspace(0.0, T, my)))

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.points_x), len(self.points_y)

    @property
    def size(self) -> int:
        return len(self.points_x) * len(self.points_y)

    def flat_index(self, i: int, j: int) -> int:
        """Índice de columna del punto (x_i, y_j) en el orden fila-mayor."""
        return i * len(self.points_y) + j

    def point(self, k: int) -> Tuple[float, float]:
        i, j = divmod(k, len(self.points_y))
        return self.points_x[i], self.points_y[j]

    def to_dict(self) -> Dict[str, Any]:
        return {"points_x": list(self.points_x), "points_y": list(self.points_y)}


@dataclass(frozen=True)
class LevelGrid:
    """Niveles alpha dentro de un intervalo cerrado I = [a, b] de (0,1)."""
    levels: Tuple[float, ...]
    a: float
    b: float

    def __post_init__(self):
        """Validaciones después de la inicialización."""
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ParameterError("La malla de niveles no puede estar vacía")
        if not 0.0 < self.a <= self.b < 1.0:
            raise ParameterError(f"Se requiere 0 < a <= b < 1, se recibió [{self.a}, {self.b}]")
        if any(not self.a <= x <= self.b for x in levels):
            raise ParameterError(f"Todos los niveles deben estar en [{self.a}, {self.b}]")
        if any(y <= x for x, y in zip(levels, levels[1:])):
            raise ParameterError("Los niveles deben ser estrictamente crecientes")

    @classmethod
    def create(cls, levels, a: float = None, b: float = None) -> "LevelGrid":
        levels = tuple(float(x) for x in levels)
        if not levels:
            raise ParameterError("La malla de niveles no puede estar vacía")
        return cls(levels, min(levels) if a is None else a, max(levels) if b is None else b)

    @classmethod
    def uniform(cls, a: float, b: float, k: int) -> "LevelGrid":
        return cls(tuple(np.linspace(a, b, k)), a, b)

    @property
    def size(self) -> int:
        return len(self.levels)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)

    def index_of(self, alpha: float, tol: float = 1e-12) -> int:
        arr = self.as_array()
        k = int(np.argmin(np.abs(arr - alpha)))
        if abs(arr[k] - alpha) > tol:
            raise ParameterError(f"alpha={alpha} no pertenece a la malla de niveles")
        return k

    def indices_between(self, lo: float, hi: float, tol: float = 1e-12) -> np.ndarray:
        arr = self.as_array()
        return np.flatnonzero((arr >= lo - tol) & (arr <= hi + tol))

    def to_dict(self) -> Dict[str, Any]:
        return {"levels": list(self.levels), "a": self.a, "b": self.b}


# --------------------------------------------------------------------------
# Trayectorias y campos de cuantiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedInfo:
    master_seed: int
    stream_ids: Tuple[int, ...] = ()


Grid = Union[TimeGrid, TimeGrid2D]


@dataclass(frozen=True, eq=False)
class PathBatch:
    """n trayectorias i.i.d. evaluadas en una malla: values[i, j] = X_i(t_j)."""
    grid: Grid
    values: np.ndarray
    seed_info: SeedInfo
    spec: Optional[ProcessSpec] = None

    def __post_init__(self):
        """Validaciones después de la inicialización; la matriz queda de sólo lectura."""
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise ParameterError("values debe ser una matriz n x m")
        if values.shape[0] < 1:
            raise ParameterError("Se necesita al menos una trayectoria")
        if values.shape[1] != self.grid.size:
            raise ShapeError(
                f"values tiene {values.shape[1]} columnas y la malla {self.grid.size} puntos"
            )
        if np.isnan(values).any():
            raise ParameterError("values contiene NaN")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def create(cls, grid: Grid, values, seed: int = 0, spec: ProcessSpec = None) -> "PathBatch":
        """Factory method para lotes construidos a mano (pruebas, referencias)."""
        return cls(grid, np.asarray(values, dtype=float), SeedInfo(seed, ()), spec)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def column(self, t_index: int) -> np.ndarray:
        if not 0 <= t_index < self.m:
            raise ParameterError(f"Índice temporal {t_index} fuera de [0, {self.m})")
        return self.values[:, t_index]


@dataclass(frozen=True, eq=False)
class QuantileField:
    """Cuantiles empíricos tau_n y campo centrado w_n = sqrt(n)(tau_n - tau)."""
    grid: Grid
    levels: LevelGrid
    tau_n: np.ndarray
    w_n: np.ndarray
    n: int

    def __post_init__(self):
        shape = (self.grid.size, self.levels.size)
        if self.tau_n.shape != shape or self.w_n.shape != shape:
            raise ShapeError(f"tau_n y w_n deben tener forma {shape}")


# --------------------------------------------------------------------------
# Experimentos e informes
# --------------------------------------------------------------------------

class ExperimentKind(Enum):
    COV_CONVERGENCE = "cov_convergence"
    MARGINAL_VARIANCE = "marginal_variance"
    SUP_NEAR_ZERO = "sup_near_zero"
    SCALING_LAW = "scaling_law"
    BAHADUR_RESIDUAL = "bahadur_residual"
    IDENTITY_SUITE = "identity_suite"


Pair = Tuple[float, float, float, float]
Cell = Tuple[float, float]


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuración completa de un experimento Monte Carlo."""
    experiment: ExperimentKind
    n: int
    R: int
    seed: int
    spec: Optional[ProcessSpec] = None
    grid: Optional[TimeGrid] = None
    levels: Optional[LevelGrid] = None
    pairs: Tuple[Pair, ...] = ()
    cells: Tuple[Cell, ...] = ()
    deltas: Tuple[float, ...] = ()
    n_ladder: Tuple[int, ...] = ()
    scales: Tuple[float, ...] = ()
    epsilon: float = 1.0
    sup_bound: float = 0.05
    z_max: float = 3.0
    ks_level: float = 0.999
    decay_ratio: float = 0.8
    wrong_exponent_shift: float = 0.3
    c_r: float = 1.0
    reference_n: int = 1_000_000
    instances: int = 10_000

    def __post_init__(self):
        """Comprueba de antemano que el experimento tiene todo lo que necesita."""
        object.__setattr__(self, "pairs", tuple(tuple(float(v) for v in p) for p in self.pairs))
        object.__setattr__(self, "cells", tuple(tuple(float(v) for v in c) for c in self.cells))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "n_ladder", tuple(int(k) for k in self.n_ladder))
        object.__setattr__(self, "scales", tuple(float(c) for c in self.scales))

        if self.n < 2:
            raise ParameterError(f"n debe ser >= 2, se recibió {self.n}")
        if self.R < 1:
            raise ParameterError(f"R debe ser >= 1, se recibió {self.R}")
        if self.seed < 0:
            raise ParameterError("La semilla debe ser no negativa")
        if self.z_max <= 0 or self.epsilon <= 0:
            raise ParameterError("z_max y epsilon deben ser positivos")
        if not 0.0 < self.ks_level < 1.0:
            raise ParameterError("ks_level debe estar en (0,1)")
        if not 0.0 < self.decay_ratio <= 1.0:
            raise ParameterError("decay_ratio debe estar en (0,1]")

        kind = self.experiment
        if kind is ExperimentKind.IDENTITY_SUITE:
            if self.instances < 1:
                raise ParameterError("instances debe ser >= 1")
            return

        if self.spec is None or self.grid is None or self.levels is None:
            raise ParameterError(f"El experimento {kind.value} necesita proceso, malla y niveles")
        if self.spec.is_two_parameter:
            raise ParameterError("Los experimentos sólo admiten procesos de un parámetro temporal")
        if any(k < 2 for k in self.n_ladder):
            raise ParameterError("Cada n de la escalera debe ser >= 2")

        for s, beta, t, alpha in self.pairs:
            self.grid.index_of(s)
            self.grid.index_of(t)
            self.levels.index_of(beta)
            self.levels.index_of(alpha)
        for t, alpha in self.cells:
            self.grid.index_of(t)
            self.levels.index_of(alpha)

        if kind is ExperimentKind.COV_CONVERGENCE and not self.pairs:
            raise ParameterError("cov_convergence necesita al menos un par en 'pairs'")
        if kind is ExperimentKind.SUP_NEAR_ZERO:
            if not self.deltas or not self.n_ladder:
                raise ParameterError("sup_near_zero necesita 'deltas' y 'n_ladder'")
            if self.spec.kind not in (ProcessKind.SYM_STABLE, ProcessKind.FBM):
                raise ParameterError("sup_near_zero necesita un proceso estable o fBm con X(0)=0")
            if self.grid.points[0] != 0.0:
                raise ParameterError(
                    f"sup_near_zero necesita una malla que empiece en t=0, empieza en {self.grid.points[0]}"
                )
            if any(d <= 0 for d in self.deltas):
                raise ParameterError("Los valores de delta deben ser positivos")
        if kind is ExperimentKind.SCALING_LAW:
            if not self.scales or not self.cells:
                raise ParameterError("scaling_law necesita 'scales' y 'cells'")
            if self.spec.scaling_exponent is None:
                raise ParameterError("scaling_law necesita un proceso escalable (estable o fBm)")
            for c in self.scales:
                if c <= 0:
                    raise ParameterError("Las escalas deben ser positivas")
                for t, _ in self.cells:
                    self.grid.index_of(c * t, tol=1e-9)
        if kind is ExperimentKind.BAHADUR_RESIDUAL and len(self.n_ladder) < 2:
            raise ParameterError("bahadur_residual necesita al menos dos valores en 'n_ladder'")
        if kind is ExperimentKind.BAHADUR_RESIDUAL and any(
                b <= a for a, b in zip(self.n_ladder, self.n_ladder[1:])):
            raise ParameterError(f"La escalera de bahadur_residual debe ser creciente: {list(self.n_ladder)}")

    def to_dict(self) -> Dict[str, Any]:
        """Convierte la configuración a diccionario serializable."""
        return {
            "experiment": self.experiment.value,
            "n": self.n,
            "R": self.R,
            "seed": self.seed,
            "spec": self.spec.to_dict() if self.spec else None,
            "grid": self.grid.to_dict() if self.grid else None,
            "levels": self.levels.to_dict() if self.levels else None,
            "pairs": [list(p) for p in self.pairs],
            "cells": [list(c) for c in self.cells],
            "deltas": list(self.deltas),
            "n_ladder": list(self.n_ladder),
            "scales": list(self.scales),
            "epsilon": self.epsilon,
            "sup_bound": self.sup_bound,
            "z_max": self.z_max,
            "ks_level": self.ks_level,
            "decay_ratio": self.decay_ratio,
            "wrong_exponent_shift": self.wrong_exponent_shift,
            "c_r": self.c_r,
            "reference_n": self.reference_n,
            "instances": self.instances,
        }


PASS = "pass"
FAIL = "fail"
INFO = "info"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass_json
@dataclass
class ReportRow:
    """Una fila del informe CSV."""
    experiment: str
    pair_s: float
    pair_beta: float
    pair_t: float
    pair_alpha: float
    n: int
    R: int
    estimate: float
    se: float
    analytic: float
    z: float
    verdict: str

    CSV_COLUMNS: ClassVar[Tuple[str, ...]] = (
        "experiment", "pair_s", "pair_beta", "pair_t", "pair_alpha", "n", "R",
        "estimate", "se", "analytic", "z", "verdict",
    )

    def csv_fields(self) -> List[str]:
        return [
            self.experiment if name == "experiment" else
            self.verdict if name == "verdict" else
            _fmt(getattr(self, name))
            for name in self.CSV_COLUMNS
        ]


@dataclass
class Report:
    """Tabla de resultados de un experimento."""
    experiment: str
    rows: List[ReportRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.verdict != FAIL for row in self.rows)

    def failures(self) -> List[ReportRow]:
        return [row for row in self.rows if row.verdict == FAIL]


@dataclass
class CovarianceReport(Report):
    """Estimación Monte Carlo frente a covarianza límite, par a par."""
    z_max: float = 3.0

    @property
    def pairs(self) -> List[Pair]:
        return [(r.pair_s, r.pair_beta, r.pair_t, r.pair_alpha) for r in self.rows]

    @property
    def verdict(self) -> str:
        return PASS if all(abs(r.z) <= self.z_max for r in self.rows) else FAIL

    def consistent(self, tol: float = 1e-12) -> bool:
        """El z y el veredicto de cada fila se pueden recalcular desde sus campos."""
        for row in self.rows:
            if row.se > 0:
                z = (row.estimate - row.analytic) / row.se
                if abs(z - row.z) > tol * max(1.0, abs(z)):
                    return False
            if (row.verdict == PASS) != (abs(row.z) <= self.z_max):
                return False
        return True


@dataclass_json
@dataclass
class RunManifest:
    """Manifiesto de una ejecución: se escribe antes que los resultados."""
    config_path: str
    config: Dict[str, Any]
    tool_version: str
    master_seed: int
    started_at: str
    finished_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
