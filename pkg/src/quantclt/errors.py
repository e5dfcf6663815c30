"""Jerarquía de errores de quantclt.

Igual que la validación de modelos, todos los errores son ``ValueError``: quien
sólo quiera distinguir "dato inválido" puede seguir capturando ``ValueError``.
"""


class QuantCLTError(ValueError):
    """Error base del paquete."""


class ParameterError(QuantCLTError):
    """Parámetro fuera de rango o malla inválida."""


class DomainError(QuantCLTError):
    """Argumento fuera del dominio de una función analítica (p. ej. t <= 0)."""


class FactorizationError(QuantCLTError):
    """La matriz de covarianza no es definida positiva ni siquiera con jitter."""


class ConvergenceError(QuantCLTError):
    """Fallo de búsqueda de raíces o de cuadratura."""


class ShapeError(QuantCLTError):
    """Dimensiones de matrices incompatibles."""


class UnsupportedExperimentError(QuantCLTError):
    """No existe límite analítico para la combinación proceso/experimento."""


class ConfigError(QuantCLTError):
    """Configuración inválida: clave ausente, desconocida o TOML mal formado."""

    def __init__(self, message: str, line: int = None, column: int = None):
        if line is not None:
            message = f"{message} (línea {line}, columna {column})"
        super().__init__(message)
        self.line = line
        self.column = column
