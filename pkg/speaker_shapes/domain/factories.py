"""
Factories - Crean instancias de entidades de dominio asegurando validez.
"""

from typing import Dict, Iterable, Optional, Sequence

from .entities import LandmarkConfiguration, SpeakerDataset, TrialRecord
from .exceptions import InvalidTrialData, StructureError


class TrialFactory:
    """
    Factory para crear ensayos válidos.
    Aplica validaciones y normaliza las etiquetas.
    """

    @staticmethod
    def create(
        trial_id: str,
        speaker_id: str,
        vowel: str,
        repetition: int,
        block: int,
        points: Sequence[Sequence[float]],
    ) -> TrialRecord:
        """
        Crea un nuevo ensayo validando los datos de entrada.

        Args:
            trial_id: Identificador del ensayo (no puede estar vacío)
            speaker_id: Identificador del hablante (no puede estar vacío)
            vowel: Etiqueta de la vocal (no puede estar vacía)
            repetition: Número de repetición (>= 1)
            block: Número de bloque (>= 1)
            points: Secuencia de k pares (x, y) en mm

        Returns:
            Nueva instancia de TrialRecord

        Raises:
            InvalidTrialData: Si los datos no son válidos
        """
        if trial_id is None or not str(trial_id).strip():
            raise InvalidTrialData("El identificador del ensayo no puede estar vacío")

        if speaker_id is None or not str(speaker_id).strip():
            raise InvalidTrialData(f"El ensayo '{trial_id}' no tiene hablante")

        if vowel is None or not str(vowel).strip():
            raise InvalidTrialData(f"El ensayo '{trial_id}' no tiene vocal")

        if int(repetition) < 1:
            raise InvalidTrialData(f"El ensayo '{trial_id}' tiene una repetición inválida: {repetition}")

        if int(block) < 1:
            raise InvalidTrialData(f"El ensayo '{trial_id}' tiene un bloque inválido: {block}")

        config = LandmarkConfiguration(
            points=tuple((float(x), float(y)) for x, y in points)
        )
        return TrialRecord(
            trial_id=str(trial_id).strip(),
            speaker_id=str(speaker_id).strip(),
            vowel=str(vowel).strip(),
            repetition=int(repetition),
            block=int(block),
            config=config,
        )


class DatasetFactory:
    """Factory para ensamblar datasets consistentes."""

    @staticmethod
    def build(
        trials: Iterable[TrialRecord],
        provenance: Optional[Dict[str, object]] = None,
        landmark_count: Optional[int] = None,
    ) -> SpeakerDataset:
        """
        Ensambla un dataset verificando k común e identificadores únicos.

        Raises:
            StructureError: Si los ensayos no comparten el número de landmarks
            InvalidTrialData: Si hay identificadores de ensayo repetidos
        """
        trials = tuple(trials)
        counts = {trial.config.k for trial in trials}
        if landmark_count is not None:
            counts.add(landmark_count)
        if len(counts) > 1:
            raise StructureError(
                f"Los ensayos no comparten el número de landmarks: {sorted(counts)}"
            )

        seen = set()
        for trial in trials:
            if trial.trial_id in seen:
                raise InvalidTrialData(f"Identificador de ensayo repetido: '{trial.trial_id}'")
            seen.add(trial.trial_id)

        k = counts.pop() if counts else 0
        return SpeakerDataset(trials=trials, landmark_count=k, provenance=dict(provenance or {}))
