"""
Capa de infraestructura - Implementaciones concretas de las interfaces del dominio.
Adaptadores que conectan el dominio con el sistema de archivos y el logging.
"""
