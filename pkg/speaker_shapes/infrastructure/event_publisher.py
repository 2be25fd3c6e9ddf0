"""
Event Publishers - Implementaciones del publicador de eventos de dominio.

LoggingEventPublisher traduce eventos a mensajes JSON en el log;
CollectingEventPublisher los guarda en memoria (tiempos por etapa del
manifiesto y auditoría de exclusión de la población de referencia).
"""

import json
import logging
from typing import Any, Dict, List, Optional, Type

from ..domain.event_publisher import EventPublisher
from ..domain.events import (
    ComparisonScored,
    DomainEvent,
    ShapesAligned,
    StageCompleted,
    SystemEvaluated,
    TrialsFiltered,
)


logger = logging.getLogger(__name__)


class LoggingEventPublisher(EventPublisher):
    """
    Implementación del publicador de eventos sobre ``logging``.
    Los eventos por comparación van a DEBUG; el resto a INFO.
    """

    def __init__(self, event_logger: Optional[logging.Logger] = None):
        self.logger = event_logger or logger

    def publish(self, event: DomainEvent) -> None:
        """
        Publica un evento de dominio en el log.

        Args:
            event: Evento de dominio a publicar
        """
        message = self._translate_event(event)
        level = logging.DEBUG if isinstance(event, ComparisonScored) else logging.INFO
        self.logger.log(level, "event %s", json.dumps(message, sort_keys=True))

    def _translate_event(self, event: DomainEvent) -> Dict[str, Any]:
        """
        Traduce un evento de dominio a un diccionario JSON serializable.

        Args:
            event: Evento de dominio

        Returns:
            Diccionario con los datos del evento
        """
        if isinstance(event, TrialsFiltered):
            return {
                "event_type": "trials.filtered",
                "removed": event.removed,
                "total": event.total,
                "threshold": event.threshold,
                "occurred_at": event.occurred_at.isoformat(),
            }
        elif isinstance(event, ShapesAligned):
            return {
                "event_type": "shapes.aligned",
                "mode": event.mode,
                "iterations": event.iterations,
                "converged": event.converged,
                "occurred_at": event.occurred_at.isoformat(),
            }
        elif isinstance(event, StageCompleted):
            return {
                "event_type": "stage.completed",
                "stage": event.stage,
                "seconds": round(event.seconds, 6),
                "occurred_at": event.occurred_at.isoformat(),
            }
        elif isinstance(event, ComparisonScored):
            return {
                "event_type": "comparison.scored",
                "feature_set": list(event.feature_set),
                "target": event.target,
                "candidate": event.candidate,
                "reference_size": len(event.reference_speakers),
                "score": event.score,
                "occurred_at": event.occurred_at.isoformat(),
            }
        elif isinstance(event, SystemEvaluated):
            return {
                "event_type": "system.evaluated",
                "system": event.system,
                "mode": event.mode,
                "eer_percent": event.eer_percent,
                "cllr": event.cllr,
                "occurred_at": event.occurred_at.isoformat(),
            }
        else:
            # Evento genérico
            return {
                "event_type": event.__class__.__name__,
                "occurred_at": event.occurred_at.isoformat(),
            }


class CollectingEventPublisher(EventPublisher):
    """Guarda los eventos publicados y opcionalmente los reenvía a otro publicador."""

    def __init__(self, delegate: Optional[EventPublisher] = None):
        self.delegate = delegate
        self.events: List[DomainEvent] = []

    def publish(self, event: DomainEvent) -> None:
        self.events.append(event)
        if self.delegate is not None:
            self.delegate.publish(event)

    def of_type(self, event_type: Type[DomainEvent]) -> List[DomainEvent]:
        return [event for event in self.events if isinstance(event, event_type)]

    def stage_timings(self, prefix: str = "") -> Dict[str, float]:
        """Segundos por etapa (acumulados si una etapa se repite)."""
        timings: Dict[str, float] = {}
        for event in self.of_type(StageCompleted):
            key = f"{prefix}{event.stage}"
            timings[key] = timings.get(key, 0.0) + event.seconds
        return timings

    def exclusion_violations(self) -> List[ComparisonScored]:
        """Comparaciones cuya población de referencia contiene a un hablante comparado."""
        return [
            event for event in self.of_type(ComparisonScored)
            if event.target in event.reference_speakers or event.candidate in event.reference_speakers
        ]

    def clear(self) -> None:
        self.events.clear()
