"""
Base de los comandos de gestión.

Los comandos son thin controllers: validan la entrada, arman el comando del
caso de uso y traducen las excepciones de dominio a códigos de salida
(0 ok, 2 error de entrada, 3 error de validación).
"""

import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..domain.exceptions import DomainException, InvalidInputData, PipelineStageError
from ..infrastructure.event_publisher import LoggingEventPublisher
from ..infrastructure.repository import CsvDatasetRepository


logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_VALIDATION_ERROR = 3


def exit_code_for(error: DomainException) -> int:
    """Código de salida de una excepción de dominio según su familia."""
    if isinstance(error, PipelineStageError):
        return EXIT_INPUT_ERROR if error.is_input_error else EXIT_VALIDATION_ERROR
    if isinstance(error, InvalidInputData):
        return EXIT_INPUT_ERROR
    return EXIT_VALIDATION_ERROR


class SpeakerShapesCommand(BaseCommand):
    """Comando con las dependencias de la app ya inyectadas."""

    requires_system_checks = []

    def __init__(self, *args, **kwargs):
        """Inicializa las dependencias (repositorio, event publisher)."""
        super().__init__(*args, **kwargs)
        self.repository = CsvDatasetRepository()
        self.event_publisher = LoggingEventPublisher()

    @property
    def tuning(self) -> dict:
        return settings.SPEAKER_SHAPES

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except DomainException as error:
            code = exit_code_for(error)
            logger.debug("Comando abortado (código %d): %s", code, error)
            raise CommandError(str(error), returncode=code)

    def run(self, **options):
        raise NotImplementedError("subclasses of SpeakerShapesCommand must provide a run() method")
