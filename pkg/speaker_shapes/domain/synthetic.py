"""
Generador de datasets sintéticos jerárquicos.

Cada ensayo es: forma base + Σ_p (efecto del hablante + efecto de la vocal +
variación intra-hablante)_p · modo_p, re-embebida con una rotación, traslación
(y opcionalmente escala) aleatorias para que el GPA tenga trabajo real.
"""

import logging
from typing import List, Optional

import numpy as np

from .entities import SpeakerDataset, SyntheticSpec, TrialRecord
from .exceptions import InvalidConfiguration, InvalidCovarianceError
from .factories import DatasetFactory, TrialFactory


logger = logging.getLogger(__name__)

BASE_RADIUS_MM = 25.0

# Arco asimétrico: la carga de mayor magnitud del modo de dilatación queda positiva
BASE_ARC = (0.15 * np.pi, 0.95 * np.pi)


def base_shape(k: int, radius: float = BASE_RADIUS_MM) -> np.ndarray:
    """Contorno base centrado: k puntos sobre un arco de circunferencia (mm)."""
    angles = np.linspace(BASE_ARC[0], BASE_ARC[1], k)
    points = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return points - points.mean(axis=0)


def deformation_modes(base: np.ndarray, p: int) -> np.ndarray:
    """
    p modos ortonormales (columnas de una matriz 2k×p).

    El modo 1 es la dilatación pura de la base; los siguientes son ondulaciones
    normales al contorno de frecuencia creciente. Todos son ortogonales a las
    traslaciones y a la rotación infinitesimal de la base.
    """
    k = base.shape[0]
    if p > 2 * k - 3:
        raise InvalidConfiguration(
            "synthetic.between_cov", f"a lo sumo {2 * k - 3} modos para k={k}; se pidieron {p}"
        )

    rigid = [
        np.tile([1.0, 0.0], k),
        np.tile([0.0, 1.0], k),
        np.column_stack([-base[:, 1], base[:, 0]]).reshape(-1),
    ]
    candidates = [base.reshape(-1)]

    tangents = np.gradient(base, axis=0)
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    positions = np.linspace(0.0, 1.0, k)
    frequency = 1
    while len(candidates) < p:
        profile = np.sin(np.pi * frequency * positions)
        candidates.append((normals * profile[:, None]).reshape(-1))
        frequency += 1

    matrix = np.column_stack(rigid + candidates)
    q, _ = np.linalg.qr(matrix)
    modes = q[:, len(rigid):len(rigid) + p]

    # Orientación: cada modo apunta como su candidato original
    for column, candidate in enumerate(candidates):
        if modes[:, column] @ candidate < 0:
            modes[:, column] *= -1
    return modes


def _validate_covariance(name: str, matrix: Optional[np.ndarray], p: int) -> np.ndarray:
    array = np.atleast_2d(np.asarray(matrix, dtype=float))
    if array.shape != (p, p):
        raise InvalidCovarianceError(name, f"se esperaba {p}×{p}, se recibió {array.shape[0]}×{array.shape[1]}")
    if not np.all(np.isfinite(array)):
        raise InvalidCovarianceError(name, "contiene valores no finitos")
    if not np.allclose(array, array.T, atol=1e-12):
        raise InvalidCovarianceError(name, "no es simétrica")
    eigenvalues = np.linalg.eigvalsh(array)
    if eigenvalues[0] < -1e-10 * max(1.0, abs(eigenvalues[-1])):
        raise InvalidCovarianceError(name, "no es semidefinida positiva")
    return array


def validate_spec(spec: SyntheticSpec) -> None:
    """
    Verifica las invariantes de la especificación.

    Raises:
        InvalidCovarianceError: Si alguna covarianza no es simétrica PSD
        InvalidConfiguration: Si los tamaños no son válidos
    """
    if spec.landmark_count < 3:
        raise InvalidConfiguration("synthetic.landmark_count", "se requieren al menos 3 landmarks")
    if spec.n_speakers < 4:
        raise InvalidConfiguration("synthetic.n_speakers", "se requieren al menos 4 hablantes")
    if spec.n_trials < 4:
        raise InvalidConfiguration("synthetic.n_trials", "se requieren al menos 4 ensayos por hablante")
    if spec.n_vowels < 1:
        raise InvalidConfiguration("synthetic.n_vowels", "se requiere al menos una vocal")
    for key in ("landmark_noise_sd", "rotation_sd", "translation_sd", "scale_sd"):
        if getattr(spec, key) < 0:
            raise InvalidConfiguration(f"synthetic.{key}", "no puede ser negativo")

    p = np.atleast_2d(np.asarray(spec.between_cov, dtype=float)).shape[0]
    _validate_covariance("between_cov", spec.between_cov, p)
    _validate_covariance("within_cov", spec.within_cov, p)
    if spec.vowel_cov is not None:
        _validate_covariance("vowel_cov", spec.vowel_cov, p)
    if spec.base_shape is not None and np.asarray(spec.base_shape).shape != (spec.landmark_count, 2):
        raise InvalidConfiguration("synthetic.base_shape", f"se esperaba una matriz {spec.landmark_count}×2")


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def generate_synthetic(spec: SyntheticSpec) -> SpeakerDataset:
    """
    Genera un dataset de landmarks determinista dada la semilla.

    Returns:
        SpeakerDataset con n_speakers·n_trials ensayos

    Raises:
        InvalidCovarianceError / InvalidConfiguration: Si la especificación es inválida
    """
    validate_spec(spec)
    k = spec.landmark_count
    p = spec.p
    rng = np.random.default_rng(spec.seed)

    base = base_shape(k) if spec.base_shape is None else np.asarray(spec.base_shape, dtype=float)
    base = base - base.mean(axis=0)
    modes = deformation_modes(base, p)

    zeros = np.zeros(p)
    speaker_effects = rng.multivariate_normal(zeros, spec.between_cov, size=spec.n_speakers, method="eigh")
    if spec.vowel_cov is not None:
        vowel_effects = rng.multivariate_normal(zeros, spec.vowel_cov, size=spec.n_vowels, method="eigh")
    else:
        vowel_effects = np.zeros((spec.n_vowels, p))

    width = len(str(spec.n_speakers))
    trials: List[TrialRecord] = []
    for speaker_index in range(spec.n_speakers):
        speaker_id = f"S{speaker_index + 1:0{width}d}"
        for trial_index in range(spec.n_trials):
            vowel_index = trial_index % spec.n_vowels
            repetition = trial_index // spec.n_vowels + 1
            within = rng.multivariate_normal(zeros, spec.within_cov, method="eigh")
            vector = speaker_effects[speaker_index] + vowel_effects[vowel_index] + within

            shape = base + (modes @ vector).reshape(k, 2)
            if spec.landmark_noise_sd > 0:
                shape = shape + rng.normal(0.0, spec.landmark_noise_sd, size=(k, 2))

            angle = rng.normal(0.0, spec.rotation_sd)
            translation = rng.normal(0.0, spec.translation_sd, size=2)
            scale = np.exp(rng.normal(0.0, spec.scale_sd)) if spec.scale_sd > 0 else 1.0
            embedded = scale * shape @ _rotation(angle).T + translation

            trials.append(TrialFactory.create(
                trial_id=f"{speaker_id}-{trial_index + 1:03d}",
                speaker_id=speaker_id,
                vowel=f"v{vowel_index + 1}",
                repetition=repetition,
                block=repetition,
                points=embedded,
            ))

    logger.info(
        "Dataset sintético: %d hablantes × %d ensayos, k=%d, p=%d (semilla %d)",
        spec.n_speakers, spec.n_trials, k, p, spec.seed,
    )
    return DatasetFactory.build(trials, provenance={"source": "synthetic", "seed": spec.seed})
