"""
Domain Events - Hechos relevantes ocurridos durante un análisis.
Los eventos son inmutables y representan algo que ya ocurrió.
"""

from dataclasses import dataclass
from datetime import datetime
from typing import Tuple


@dataclass(frozen=True)
class DomainEvent:
    """Clase base para todos los eventos de dominio."""
    occurred_at: datetime


@dataclass(frozen=True)
class TrialsFiltered(DomainEvent):
    """Evento: El filtro MAD eliminó ensayos."""
    removed: int
    total: int
    threshold: float


@dataclass(frozen=True)
class ShapesAligned(DomainEvent):
    """Evento: Terminó un alineamiento de Procrustes."""
    mode: str
    iterations: int
    converged: bool


@dataclass(frozen=True)
class StageCompleted(DomainEvent):
    """Evento: Terminó una etapa del experimento."""
    stage: str
    seconds: float


@dataclass(frozen=True)
class ComparisonScored(DomainEvent):
    """Evento: Se puntuó una comparación con su población de referencia."""
    feature_set: Tuple[int, ...]
    target: str
    candidate: str
    reference_speakers: Tuple[str, ...]
    score: float


@dataclass(frozen=True)
class SystemEvaluated(DomainEvent):
    """Evento: Se evaluó un sistema (subconjunto de PCs)."""
    system: str
    mode: str
    eer_percent: float
    cllr: float
