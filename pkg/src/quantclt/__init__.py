"""Simulación y verificación de TCL para procesos de cuantiles empíricos."""

__version__ = "0.1.0"
