"""
CSV Repository - Implementación del repositorio de datasets sobre archivos CSV.
Adaptador que traduce entre el dominio y el sistema de archivos.
"""

import hashlib
import logging
from pathlib import Path

from ..domain.entities import SpeakerDataset
from ..domain.exceptions import DatasetIOError
from ..domain.repositories import DatasetRepository
from .landmark_table import parse_landmark_table, serialize_landmark_table


logger = logging.getLogger(__name__)


class CsvDatasetRepository(DatasetRepository):
    """
    Implementación del repositorio usando archivos CSV en UTF-8.
    Nunca modifica el archivo de entrada.
    """

    def __init__(self, schema=None):
        self.schema = schema

    def load(self, path: str) -> SpeakerDataset:
        """
        Lee y valida un dataset.

        Raises:
            DatasetIOError: Si el archivo no se puede leer
            InvalidInputData: Si el contenido no respeta el esquema
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as error:
            raise DatasetIOError(str(path), str(error))

        dataset = parse_landmark_table(text, schema=self.schema, source=str(path))
        logger.info(
            "Dataset leído de %s: %d ensayos, %d hablantes, k=%d",
            path, len(dataset), len(dataset.speakers), dataset.landmark_count,
        )
        return dataset

    def save(self, dataset: SpeakerDataset, path: str) -> None:
        """
        Escribe un dataset en el CSV ancho (LF, punto decimal).

        Raises:
            DatasetIOError: Si el archivo no se puede escribir
        """
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="") as handle:
                handle.write(serialize_landmark_table(dataset))
        except OSError as error:
            raise DatasetIOError(str(path), str(error))

    def digest(self, path: str) -> str:
        """
        sha256 de los bytes del archivo.

        Raises:
            DatasetIOError: Si el archivo no se puede leer
        """
        sha = hashlib.sha256()
        try:
            with open(path, "rb") as handle:
                for chunk in iter(lambda: handle.read(65536), b""):
                    sha.update(chunk)
        except OSError as error:
            raise DatasetIOError(str(path), str(error))
        return sha.hexdigest()
