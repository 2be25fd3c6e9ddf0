"""
Repository - Interfaz (Puerto) para persistencia de datasets de landmarks.
Define el contrato que deben cumplir las implementaciones concretas.
"""

from abc import ABC, abstractmethod

from .entities import SpeakerDataset


class DatasetRepository(ABC):
    """
    Interfaz del repositorio de datasets.
    Esta es una abstracción (puerto) que será implementada por adaptadores.
    """

    @abstractmethod
    def load(self, path: str) -> SpeakerDataset:
        """
        Lee un dataset.

        Args:
            path: Ubicación del dataset

        Returns:
            El dataset leído
        """
        pass

    @abstractmethod
    def save(self, dataset: SpeakerDataset, path: str) -> None:
        """
        Persiste un dataset.

        Args:
            dataset: Dataset a persistir
            path: Ubicación de destino
        """
        pass

    @abstractmethod
    def digest(self, path: str) -> str:
        """
        Huella reproducible de los bytes del dataset almacenado.

        Args:
            path: Ubicación del dataset

        Returns:
            Huella hexadecimal (sha256)
        """
        pass
