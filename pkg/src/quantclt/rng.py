"""Flujos aleatorios reproducibles.

Cada flujo se identifica por la semilla maestra y una tupla de claves enteras
(tipo de flujo, réplica, ...). Los generadores son Philox, basados en contador,
así que dos claves distintas dan flujos independientes sin importar en qué hilo
o en qué orden se consuman.
"""
from typing import Tuple, Union

import numpy as np

from .errors import ParameterError

# Tipos de flujo
PATHS = 0
SHIFT = 1
SUITE = 2

StreamIds = Union[int, Tuple[int, ...]]


def as_stream_ids(replication: StreamIds) -> Tuple[int, ...]:
    """Normaliza un índice de réplica (entero o tupla) a tupla de enteros."""
    if isinstance(replication, (int, np.integer)):
        return (int(replication),)
    return tuple(int(k) for k in replication)


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Devuelve el generador del flujo ``(seed, keys...)``."""
    if seed < 0:
        raise ParameterError(f"La semilla debe ser no negativa, se recibió {seed}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))
