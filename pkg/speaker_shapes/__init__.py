"""
App de análisis de formas articulatorias y razones de verosimilitud por hablante.
"""

__version__ = "0.1.0"
