"""Lectura de configuraciones TOML de experimentos.

Formato: una única tabla plana ``[experiment]``. Ver README para el esquema.
"""
from typing import Any, Dict, Iterable, Mapping, Optional
import logging
import os
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, QuantCLTError
from .models import (
    ExperimentConfig,
    ExperimentKind,
    LevelGrid,
    ProcessSpec,
    Sampler,
    TimeGrid,
)

LOGGER = logging.getLogger(__name__)

THREADS_ENV = "QUANTCLT_THREADS"

PROCESS_KEYS = {"process", "gamma", "r", "c", "lambda", "jump", "jump_params", "shift", "shift_params"}
GRID_KEYS = {"times", "T", "grid_points", "levels", "level_interval"}
EXPERIMENT_KEYS = {
    "experiment", "n", "R", "seed", "pairs", "cells", "deltas", "n_ladder", "scales",
    "epsilon", "sup_bound", "z_max", "ks_level", "decay_ratio", "wrong_exponent_shift",
    "c_r", "reference_n", "instances",
}
KNOWN_KEYS = PROCESS_KEYS | GRID_KEYS | EXPERIMENT_KEYS
REQUIRED_KEYS = ("experiment", "n", "R", "seed")

_FLOAT_KEYS = ("epsilon", "sup_bound", "z_max", "ks_level", "decay_ratio",
               "wrong_exponent_shift", "c_r")
_INT_KEYS = ("reference_n", "instances")
_LOCATION = re.compile(r"line (\d+), column (\d+)")


def _decode_error(exc: Exception, source: str) -> ConfigError:
    line = getattr(exc, "lineno", None)
    column = getattr(exc, "colno", None)
    if line is None:
        match = _LOCATION.search(str(exc))
        if match:
            line, column = int(match.group(1)), int(match.group(2))
    return ConfigError(f"TOML inválido en {source}: {exc}", line, column)


def parse_override(item: str) -> tuple:
    """'KEY=VALUE' -> (key, valor); el valor se interpreta como TOML o, si no, como texto."""
    if "=" not in item:
        raise ConfigError(f"Override '{item}' no tiene la forma KEY=VALUE")
    key, raw = (part.strip() for part in item.split("=", 1))
    if key not in KNOWN_KEYS:
        raise ConfigError(f"Override de clave desconocida '{key}'")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _integer(table: Mapping[str, Any], key: str) -> int:
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"'{key}' debe ser un entero, se recibió {value!r}")
    return int(value)


def _sampler(name: Any, params: Any, key: str) -> Sampler:
    if not isinstance(name, str):
        raise ConfigError(f"'{key}' debe ser el nombre de un muestreador")
    try:
        return Sampler(name, tuple(params or ()))
    except QuantCLTError as exc:
        raise ConfigError(f"'{key}': {exc}") from exc


def build_process(table: Mapping[str, Any]) -> ProcessSpec:
    """ProcessSpec a partir de las claves de proceso de la tabla."""
    process = table.get("process")

    def need(key: str) -> Any:
        if key not in table:
            raise ConfigError(f"El proceso '{process}' necesita la clave '{key}'")
        return table[key]

    if process == "fbm":
        spec = ProcessSpec.fbm(need("gamma"))
    elif process == "brownian_motion":
        spec = ProcessSpec.brownian_motion()
    elif process == "sym_stable":
        spec = ProcessSpec.sym_stable(need("r"), need("c"))
    elif process == "compound_poisson":
        jump = _sampler(need("jump"), table.get("jump_params", ()), "jump")
        spec = ProcessSpec.compound_poisson(need("lambda"), jump)
    elif process == "brownian_sheet":
        spec = ProcessSpec.brownian_sheet()
    else:
        raise ConfigError(
            f"Proceso desconocido '{process}'; opciones: fbm, brownian_motion, sym_stable, "
            "compound_poisson, brownian_sheet"
        )
    if "shift" in table:
        spec = ProcessSpec.shifted(spec, _sampler(table["shift"], table.get("shift_params", ()), "shift"))
    return spec


def _build_grid(table: Mapping[str, Any]) -> Optional[TimeGrid]:
    if "times" in table:
        return TimeGrid.create(table["times"])
    if "T" in table:
        points = _integer(table, "grid_points") if "grid_points" in table else 11
        return TimeGrid.uniform(float(table["T"]), points)
    return None


def _build_levels(table: Mapping[str, Any]) -> Optional[LevelGrid]:
    if "levels" not in table:
        return None
    interval = table.get("level_interval")
    if interval is None:
        return LevelGrid.create(table["levels"])
    if len(interval) != 2:
        raise ConfigError("'level_interval' debe ser [a, b]")
    return LevelGrid.create(table["levels"], float(interval[0]), float(interval[1]))


def config_from_mapping(table: Mapping[str, Any]) -> ExperimentConfig:
    """Valida una tabla ya leída y construye el ExperimentConfig."""
    unknown = sorted(set(table) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"Claves desconocidas en [experiment]: {', '.join(unknown)}")
    for key in REQUIRED_KEYS:
        if key not in table:
            raise ConfigError(f"Falta la clave obligatoria '{key}'")
    try:
        experiment = ExperimentKind(table["experiment"])
    except ValueError:
        options = ", ".join(kind.value for kind in ExperimentKind)
        raise ConfigError(f"Experimento desconocido '{table['experiment']}'; opciones: {options}") from None
    if experiment is not ExperimentKind.IDENTITY_SUITE and "process" not in table:
        raise ConfigError("Falta la clave obligatoria 'process'")

    try:
        extras: Dict[str, Any] = {k: float(table[k]) for k in _FLOAT_KEYS if k in table}
        extras.update({k: _integer(table, k) for k in _INT_KEYS if k in table})
        for key in ("pairs", "cells", "deltas", "n_ladder", "scales"):
            if key in table:
                extras[key] = table[key]
        return ExperimentConfig(
            experiment=experiment,
            n=_integer(table, "n"),
            R=_integer(table, "R"),
            seed=_integer(table, "seed"),
            spec=build_process(table) if "process" in table else None,
            grid=_build_grid(table),
            levels=_build_levels(table),
            **extras,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"Configuración inválida: {exc}") from exc


def load_config(path: str, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Lee ``path``, aplica los overrides KEY=VALUE y devuelve la configuración validada."""
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"No se pudo leer {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise _decode_error(exc, path) from exc

    if "experiment" not in data or not isinstance(data["experiment"], dict):
        raise ConfigError(f"{path} no contiene la tabla [experiment]")
    table = dict(data["experiment"])
    for item in overrides:
        key, value = parse_override(item)
        LOGGER.debug("override %s = %r", key, value)
        table[key] = value
    return config_from_mapping(table)


def resolve_threads(flag: Optional[int]) -> int:
    """--threads, o la variable QUANTCLT_THREADS, o 1."""
    if flag is not None:
        value = flag
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None:
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} no es un entero")
    if value < 1:
        raise ConfigError(f"El número de hilos debe ser >= 1, se recibió {value}")
    return value
