"""
Operaciones sobre datasets de landmarks: filtro de outliers por MAD y
partición de cada hablante en dos mitades balanceadas por vocal.
"""

import logging
import math
from collections import Counter
from typing import Dict, List, Tuple

import numpy as np

from .entities import HalfSplit, RemovalReport, SpeakerDataset
from .exceptions import InsufficientTrialsError, InvalidConfiguration


logger = logging.getLogger(__name__)

DEFAULT_MAD_THRESHOLD = 3.5

# Tolerancia (mm) cuando la dispersión de un landmark es nula
MAD_EPSILON = 1e-9


def _outlier_mask(coordinates: np.ndarray, threshold: float) -> np.ndarray:
    """
    Marca los ensayos de un hablante con algún landmark a más de
    ``threshold`` MADs de la mediana del hablante.

    Args:
        coordinates: arreglo n×k×2 con los ensayos de un hablante
        threshold: umbral en unidades de MAD

    Returns:
        Máscara booleana de longitud n (True = eliminar)
    """
    median = np.median(coordinates, axis=0)
    distances = np.linalg.norm(coordinates - median, axis=2)
    mad = np.median(distances, axis=0)

    if math.isinf(threshold):
        return np.zeros(coordinates.shape[0], dtype=bool)

    # Con MAD nula el criterio d > t·0 se interpreta como d > ε
    limits = np.where(mad > 0, threshold * mad, MAD_EPSILON)
    return np.any(distances > limits, axis=1)


def mad_outlier_filter(
    dataset: SpeakerDataset,
    threshold: float = DEFAULT_MAD_THRESHOLD,
) -> Tuple[SpeakerDataset, RemovalReport]:
    """
    Elimina los ensayos con errores de seguimiento de landmarks.

    Para cada hablante y landmark j se calcula la mediana coordenada a coordenada
    m_j, la distancia euclídea d_ij de cada ensayo a m_j y MAD_j = mediana de d_ij.
    Un ensayo se elimina si d_ij > threshold·MAD_j para algún j. Las medianas se
    calculan una sola vez, antes de eliminar nada.

    Args:
        dataset: Dataset a filtrar
        threshold: Umbral positivo (por defecto 3.5; ``inf`` desactiva el filtro)

    Returns:
        Tupla (dataset filtrado, reporte de eliminación)

    Raises:
        InvalidConfiguration: Si el umbral no es positivo
        InsufficientTrialsError: Si algún hablante tiene menos de 2 ensayos
    """
    if not threshold > 0:
        raise InvalidConfiguration("mad_threshold", f"debe ser positivo (se recibió {threshold})")

    labels = dataset.speaker_labels()
    coordinates = dataset.coordinates()
    removed_mask = np.zeros(len(dataset), dtype=bool)
    per_speaker: Dict[str, int] = {}

    for speaker in dataset.speakers:
        indices = np.flatnonzero(labels == speaker)
        if indices.size < 2:
            raise InsufficientTrialsError(speaker, int(indices.size))
        mask = _outlier_mask(coordinates[indices], threshold)
        removed_mask[indices[mask]] = True
        per_speaker[speaker] = int(mask.sum())

    removed = tuple(
        trial.trial_id for trial, flag in zip(dataset.trials, removed_mask) if flag
    )
    report = RemovalReport(
        removed=removed,
        per_speaker=per_speaker,
        total=len(dataset),
        threshold=threshold,
    )
    filtered = dataset.without(removed, mad_threshold=threshold, mad_removed=len(removed))

    logger.info(
        "Filtro MAD (umbral %.2f): %d de %d ensayos eliminados",
        threshold, len(removed), len(dataset),
    )
    return filtered, report


def split_halves(dataset: SpeakerDataset, seed: int = 0) -> List[HalfSplit]:
    """
    Divide los ensayos de cada hablante en dos mitades.

    Dentro de cada celda (hablante, vocal) los ensayos se ordenan por
    (bloque, repetición, trial_id) y se asignan alternadamente. En las celdas de
    tamaño impar el ensayo sobrante va alternando de mitad, empezando por una
    mitad elegida con la semilla, para que los totales también queden parejos.

    Args:
        dataset: Dataset a dividir
        seed: Semilla de la elección inicial por hablante

    Returns:
        Una HalfSplit por hablante, en el orden de aparición de los hablantes

    Raises:
        InsufficientTrialsError: Si algún hablante tiene menos de 2 ensayos
    """
    rng = np.random.default_rng(seed)
    splits: List[HalfSplit] = []

    for speaker in dataset.speakers:
        trials = dataset.trials_for(speaker)
        if len(trials) < 2:
            raise InsufficientTrialsError(speaker, len(trials))

        halves = ([], [])
        odd_start = int(rng.integers(0, 2))
        for vowel in sorted({trial.vowel for trial in trials}):
            cell = sorted(
                (trial for trial in trials if trial.vowel == vowel),
                key=lambda trial: (trial.block, trial.repetition, trial.trial_id),
            )
            start = odd_start if len(cell) % 2 else 0
            for position, trial in enumerate(cell):
                halves[(start + position) % 2].append(trial.trial_id)
            if len(cell) % 2:
                odd_start = 1 - odd_start

        splits.append(HalfSplit(
            speaker_id=speaker,
            first_half=frozenset(halves[0]),
            second_half=frozenset(halves[1]),
        ))

    return splits


def vowel_balance(dataset: SpeakerDataset, split: HalfSplit) -> Dict[str, Tuple[int, int]]:
    """Conteo por vocal (primera mitad, segunda mitad) de una partición."""
    vowels = {trial.trial_id: trial.vowel for trial in dataset.trials_for(split.speaker_id)}
    first = Counter(vowels[trial_id] for trial_id in split.first_half)
    second = Counter(vowels[trial_id] for trial_id in split.second_half)
    return {vowel: (first[vowel], second[vowel]) for vowel in sorted(set(vowels.values()))}
