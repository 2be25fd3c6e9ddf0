"""
Entidades de dominio - Representan los conceptos del análisis de forma y de
razones de verosimilitud (LR).

Son independientes del framework. Las entidades que contienen arreglos de numpy
no definen igualdad estructural (eq=False); las que provienen directamente del
archivo de entrada sí, para poder comparar datasets leídos y reescritos.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidTrialData


Point = Tuple[float, float]
FeatureSet = Tuple[int, ...]


class AlignmentMode(str, Enum):
    """Modo de alineamiento de Procrustes."""

    # GPA parcial: elimina traslación y rotación, conserva el tamaño
    SIZE_AND_SHAPE = "size_and_shape"
    # GPA completo: además normaliza la escala
    SHAPE_ONLY = "shape_only"

    @classmethod
    def parse(cls, value: str) -> "AlignmentMode":
        """
        Acepta tanto el valor interno como la forma de la CLI
        (``size-and-shape`` / ``shape``).
        """
        normalized = value.strip().lower().replace("-", "_")
        if normalized == "shape":
            return cls.SHAPE_ONLY
        return cls(normalized)

    @property
    def cli_name(self) -> str:
        return "size-and-shape" if self is AlignmentMode.SIZE_AND_SHAPE else "shape"


class Label(str, Enum):
    """Etiqueta de una comparación: mismo hablante o hablantes distintos."""

    SAME = "same"
    DIFFERENT = "different"


def feature_set_label(feature_set: Sequence[int]) -> str:
    """Etiqueta de sistema al estilo de la tabla de resultados: ``PC1+2+3``."""
    return "PC" + "+".join(str(index) for index in feature_set)


# =============================================================================
# Datos de entrada
# =============================================================================

@dataclass(frozen=True)
class LandmarkConfiguration:
    """
    Configuración de landmarks de un ensayo: k pares (x, y) en mm.

    El orden de los puntos es anatómico: el mismo índice corresponde al mismo
    landmark en todos los ensayos.
    """

    MIN_LANDMARKS = 3

    points: Tuple[Point, ...]

    def __post_init__(self):
        if len(self.points) < self.MIN_LANDMARKS:
            raise InvalidTrialData(
                f"Una configuración requiere al menos {self.MIN_LANDMARKS} landmarks; "
                f"se recibieron {len(self.points)}"
            )
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidTrialData("Las coordenadas de los landmarks deben ser finitas")

    @property
    def k(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        """Matriz k×2 de coordenadas."""
        return np.asarray(self.points, dtype=float)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "LandmarkConfiguration":
        matrix = np.asarray(array, dtype=float).reshape(-1, 2)
        return cls(points=tuple((float(x), float(y)) for x, y in matrix))


@dataclass(frozen=True)
class TrialRecord:
    """Un ensayo: configuración más etiquetas de hablante, vocal, repetición y bloque."""

    trial_id: str
    speaker_id: str
    vowel: str
    repetition: int
    block: int
    config: LandmarkConfiguration


@dataclass(frozen=True)
class SpeakerDataset:
    """
    Conjunto de ensayos con un número fijo de landmarks.

    Atributos:
        trials: ensayos en el orden del archivo de origen
        landmark_count: k, común a todos los ensayos
        provenance: metadatos libres (archivo de origen, filtros aplicados)
    """

    trials: Tuple[TrialRecord, ...]
    landmark_count: int
    provenance: Dict[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trials)

    @property
    def trial_ids(self) -> List[str]:
        return [trial.trial_id for trial in self.trials]

    @property
    def speakers(self) -> List[str]:
        """Hablantes en orden de primera aparición."""
        return list(dict.fromkeys(trial.speaker_id for trial in self.trials))

    def trials_for(self, speaker_id: str) -> List[TrialRecord]:
        return [trial for trial in self.trials if trial.speaker_id == speaker_id]

    def coordinates(self) -> np.ndarray:
        """Arreglo n×k×2 con las coordenadas de todos los ensayos."""
        if not self.trials:
            return np.zeros((0, self.landmark_count, 2))
        return np.stack([trial.config.as_array() for trial in self.trials])

    def speaker_labels(self) -> np.ndarray:
        return np.asarray([trial.speaker_id for trial in self.trials], dtype=object)

    def without(self, trial_ids: Sequence[str], **provenance) -> "SpeakerDataset":
        """Nuevo dataset sin los ensayos indicados (se conserva el orden)."""
        excluded = set(trial_ids)
        merged = dict(self.provenance)
        merged.update(provenance)
        return SpeakerDataset(
            trials=tuple(t for t in self.trials if t.trial_id not in excluded),
            landmark_count=self.landmark_count,
            provenance=merged,
        )


@dataclass(frozen=True)
class RemovalReport:
    """Resultado del filtro de outliers por MAD."""

    removed: Tuple[str, ...]
    per_speaker: Dict[str, int]
    total: int
    threshold: float

    @property
    def fraction(self) -> float:
        return len(self.removed) / self.total if self.total else 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "removed": list(self.removed),
            "fraction": self.fraction,
            "per_speaker": dict(self.per_speaker),
        }


@dataclass(frozen=True)
class HalfSplit:
    """Partición de los ensayos de un hablante en dos mitades balanceadas por vocal."""

    speaker_id: str
    first_half: FrozenSet[str]
    second_half: FrozenSet[str]


# =============================================================================
# Motor de formas
# =============================================================================

@dataclass(eq=False)
class AlignedShapeSet:
    """
    Configuraciones alineadas por Procrustes generalizado.

    Atributos:
        mode: modo de alineamiento
        trial_ids: identificadores en el mismo orden que ``aligned``
        aligned: arreglo n×k×2 (mm en size_and_shape; adimensional en shape_only)
        mean_shape: forma media k×2
        centroid_sizes: tamaño de centroide de cada ensayo antes de escalar (mm)
        rotations: rotación 2×2 aplicada a cada ensayo en la última iteración
        iterations: iteraciones realizadas
        converged: si el cambio de la media quedó bajo la tolerancia
        objective_history: suma de distancias cuadradas a la media por iteración
    """

    mode: AlignmentMode
    trial_ids: List[str]
    aligned: np.ndarray
    mean_shape: np.ndarray
    centroid_sizes: np.ndarray
    rotations: np.ndarray
    iterations: int
    converged: bool
    objective_history: List[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.mean_shape.shape[0]


@dataclass(eq=False)
class PCModel:
    """
    Modelo de componentes principales en el espacio tangente.

    ``mean_vector`` es vec(forma media), el punto de tangencia; las formas se
    reconstruyen como mean_vector + components·scores.
    """

    mean_vector: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    explained_ratio: np.ndarray
    scores: np.ndarray
    total_variance: float
    effective_rank: int

    @property
    def q(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True, eq=False)
class EffectShape:
    """Forma reconstruida a ``sd_multiple`` desviaciones estándar sobre un PC."""

    pc_index: int
    sd_multiple: float
    shape: np.ndarray


@dataclass(frozen=True, eq=False)
class SpeakerMeanShapes:
    """Forma media alineada de cada hablante y media general de todas las formas."""

    by_speaker: Dict[str, np.ndarray]
    overall: np.ndarray


# =============================================================================
# Razones de verosimilitud
# =============================================================================

@dataclass(eq=False)
class ReferencePopulation:
    """
    Población de referencia para evaluar tipicidad (modelo MVKD).

    Inmutable tras su construcción; puede compartirse entre hilos.
    """

    speaker_ids: Tuple[str, ...]
    means: np.ndarray
    counts: np.ndarray
    pooled_within: np.ndarray
    between: np.ndarray
    bandwidth: float
    regularized: bool = False

    @property
    def m(self) -> int:
        return self.means.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> Dict[str, object]:
        return {
            "speakers": list(self.speaker_ids),
            "U": self.pooled_within.tolist(),
            "B": self.between.tolist(),
            "h": self.bandwidth,
            "regularized": self.regularized,
        }


@dataclass(eq=False)
class ComparisonSample:
    """Conjunto de vectores de un lado de la comparación."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if self.vectors.shape[0] < 1:
            raise InvalidTrialData("Una muestra de comparación requiere al menos un vector")

    @property
    def mean(self) -> np.ndarray:
        return self.vectors.mean(axis=0)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def p(self) -> int:
        return self.vectors.shape[1]


# =============================================================================
# Evaluación
# =============================================================================

@dataclass(frozen=True)
class ScoreEntry:
    score: float
    label: Label
    pair: Tuple[str, str]


@dataclass(frozen=True)
class ScoreSet:
    """Puntajes de un sistema con su etiqueta y el par de hablantes comparado."""

    entries: Tuple[ScoreEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def scores(self) -> np.ndarray:
        return np.asarray([entry.score for entry in self.entries], dtype=float)

    @property
    def is_same(self) -> np.ndarray:
        return np.asarray([entry.label is Label.SAME for entry in self.entries], dtype=bool)

    @property
    def n_same(self) -> int:
        return int(self.is_same.sum())

    @property
    def n_different(self) -> int:
        return len(self.entries) - self.n_same

    @classmethod
    def from_arrays(cls, same: Sequence[float], different: Sequence[float]) -> "ScoreSet":
        """Construye un ScoreSet a partir de dos listas de puntajes (pares anónimos)."""
        entries = [ScoreEntry(float(s), Label.SAME, ("", "")) for s in same]
        entries += [ScoreEntry(float(s), Label.DIFFERENT, ("", "")) for s in different]
        return cls(entries=tuple(entries))

    def with_scores(self, scores: Sequence[float]) -> "ScoreSet":
        """Mismas etiquetas y pares con otros puntajes (p. ej. LRs calibrados)."""
        return ScoreSet(entries=tuple(
            ScoreEntry(float(value), entry.label, entry.pair)
            for entry, value in zip(self.entries, scores)
        ))


@dataclass(frozen=True)
class CalibrationModel:
    """
    Calibración logística: log10 LR = (weight·polarity·s + offset) / ln(10).

    ``polarity`` vale -1 cuando el ajuste sin restricciones era decreciente
    (puntajes invertidos); así ``weight`` es siempre no negativo.
    """

    weight: float
    offset: float
    polarity: int = 1
    separated: bool = False

    def log10_lr(self, scores) -> np.ndarray:
        values = np.asarray(scores, dtype=float)
        return (self.weight * self.polarity * values + self.offset) / math.log(10.0)


@dataclass(frozen=True)
class SystemMetrics:
    eer_percent: float
    cllr: float
    n_same: int
    n_different: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "eer_percent": self.eer_percent,
            "cllr": self.cllr,
            "n_same": self.n_same,
            "n_different": self.n_different,
        }


@dataclass(frozen=True)
class TippettCurves:
    """Distribuciones acumuladas de log10 LR por etiqueta: pares (llr, proporción)."""

    same: Tuple[Tuple[float, float], ...]
    different: Tuple[Tuple[float, float], ...]


# =============================================================================
# Experimento
# =============================================================================

DEFAULT_FEATURE_SETS: Tuple[FeatureSet, ...] = (
    (1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Configuración de un experimento de discriminación de hablantes.

    Atributos:
        mode: modo de alineamiento
        feature_sets: subconjuntos de PCs (índices desde 1)
        mad_threshold: umbral del filtro de outliers
        seed: semilla de toda la aleatoriedad del experimento
        calibration: ``pooled`` o ``leave-pair-out``
        q: número de componentes a ajustar
        pca_fit: ``pooled`` (todas las mitades) o ``first-half``
        subtract_within: variante B − U/n̄ de la covarianza entre hablantes
        bandwidth: ancho de banda explícito (None = fórmula óptima)
        workers: techo de hilos para el puntaje por pares
    """

    POOLED = "pooled"
    LEAVE_PAIR_OUT = "leave-pair-out"
    FIRST_HALF = "first-half"

    mode: AlignmentMode = AlignmentMode.SIZE_AND_SHAPE
    feature_sets: Tuple[FeatureSet, ...] = DEFAULT_FEATURE_SETS
    mad_threshold: float = 3.5
    seed: int = 0
    calibration: str = "pooled"
    q: int = 3
    pca_fit: str = "pooled"
    subtract_within: bool = False
    bandwidth: Optional[float] = None
    workers: int = 1


@dataclass(eq=False)
class SystemResult:
    """Resultado de un sistema (un subconjunto de PCs en un modo)."""

    feature_set: FeatureSet
    mode: AlignmentMode
    raw_scores: ScoreSet
    calibrated: np.ndarray
    metrics: SystemMetrics
    calibration: CalibrationModel

    @property
    def label(self) -> str:
        return feature_set_label(self.feature_set)


@dataclass(frozen=True)
class CorrelationEntry:
    """Correlación entre hablantes de un estadístico por hablante de dos PCs."""

    pc_i: int
    pc_j: int
    statistic: str
    r: float
    p: float
    degenerate: bool = False


@dataclass(eq=False)
class SyntheticSpec:
    """
    Especificación de un dataset sintético jerárquico.

    Los vectores (dimensión p) son desplazamientos sobre p modos de deformación
    de una forma base de k landmarks; el modo 1 es una dilatación pura.
    """

    landmark_count: int
    n_speakers: int
    n_trials: int
    between_cov: np.ndarray
    within_cov: np.ndarray
    seed: int = 0
    n_vowels: int = 4
    vowel_cov: Optional[np.ndarray] = None
    landmark_noise_sd: float = 0.0
    rotation_sd: float = 0.1
    translation_sd: float = 2.0
    scale_sd: float = 0.0
    base_shape: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return int(np.asarray(self.between_cov).shape[0])


@dataclass
class RunManifest:
    """Manifiesto de una ejecución: suficiente para repetirla de forma idéntica."""

    command: str
    config: Dict[str, object]
    input_digest: Optional[str]
    seed: Optional[int]
    version: Dict[str, str]
    stage_timings: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    extra: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        payload = {
            "command": self.command,
            "config": self.config,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "version": self.version,
            "stage_timings": self.stage_timings,
            "outputs": self.outputs,
        }
        payload.update(self.extra)
        return payload
