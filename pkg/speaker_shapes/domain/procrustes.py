"""
Motor de formas - Análisis de Procrustes generalizado (parcial y completo),
proyección al espacio tangente, PCA y formas de efecto de cada componente.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .entities import AlignedShapeSet, AlignmentMode, EffectShape, LandmarkConfiguration, PCModel
from .exceptions import (
    AnalysisPreconditionError,
    ComponentOutOfRangeError,
    DegenerateConfigurationError,
    RankDeficiencyError,
    StructureError,
    ZeroVarianceError,
)


logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 200

# Autovalores por debajo de esta fracción del mayor se consideran nulos
RANK_TOLERANCE = 1e-10

ConfigLike = Union[LandmarkConfiguration, np.ndarray, Sequence[Sequence[float]]]


def _as_matrix(config: ConfigLike) -> np.ndarray:
    if isinstance(config, LandmarkConfiguration):
        return config.as_array()
    return np.asarray(config, dtype=float).reshape(-1, 2)


def centroid_size(config: ConfigLike) -> float:
    """
    Tamaño de centroide: raíz de la suma de distancias cuadradas al centroide.

    Raises:
        DegenerateConfigurationError: Si todos los puntos coinciden
    """
    points = _as_matrix(config)
    centered = points - points.mean(axis=0)
    size = float(np.sqrt(np.sum(centered ** 2)))
    if size <= 0.0:
        raise DegenerateConfigurationError()
    return size


def optimal_rotation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    Rotación propia R (det = +1) que minimiza ||source·R − target||_F.

    Solución de Procrustes ortogonal por SVD de la covarianza cruzada; si la
    solución óptima es una reflexión se invierte la dirección singular menor.
    """
    u, _, vt = np.linalg.svd(source.T @ target)
    d = np.sign(np.linalg.det(u @ vt))
    if d == 0:
        d = 1.0
    correction = np.diag([1.0] * (source.shape[1] - 1) + [d])
    return u @ correction @ vt


def procrustes_distance(a: ConfigLike, b: ConfigLike, scale: bool = False) -> float:
    """
    Distancia de Procrustes entre dos configuraciones.

    Ambas se centran (y, con ``scale``, se llevan a tamaño de centroide unitario)
    y ``b`` se rota sobre ``a``.
    """
    first = _as_matrix(a)
    second = _as_matrix(b)
    first = first - first.mean(axis=0)
    second = second - second.mean(axis=0)
    if scale:
        first = first / centroid_size(first)
        second = second / centroid_size(second)
    rotation = optimal_rotation(second, first)
    return float(np.linalg.norm(second @ rotation - first))


def _objective(aligned: np.ndarray, mean: np.ndarray) -> float:
    return float(np.sum((aligned - mean) ** 2))


def procrustes_align(
    configs: Sequence[ConfigLike],
    mode: AlignmentMode = AlignmentMode.SIZE_AND_SHAPE,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    trial_ids: Optional[Sequence[str]] = None,
) -> AlignedShapeSet:
    """
    Alineamiento de Procrustes generalizado.

    Se centran todas las configuraciones (y en ``shape_only`` se escalan una vez
    a tamaño de centroide unitario). La referencia inicial es la primera
    configuración; en cada iteración cada configuración se rota sobre la media
    vigente y se recalcula la media, hasta que su cambio (Frobenius) sea menor
    que ``tol`` o se alcance ``max_iter``.

    Args:
        configs: Configuraciones k×2 (al menos 2, mismo k)
        mode: ``size_and_shape`` (GPA parcial) o ``shape_only`` (GPA completo)
        tol: Tolerancia del cambio de la media
        max_iter: Máximo de iteraciones
        trial_ids: Identificadores opcionales de los ensayos

    Returns:
        AlignedShapeSet con formas alineadas, media, tamaños y diagnóstico

    Raises:
        AnalysisPreconditionError: Si hay menos de 2 configuraciones
        StructureError: Si las configuraciones no comparten k
        DegenerateConfigurationError: Si alguna configuración es degenerada
    """
    mode = AlignmentMode(mode)
    matrices = [_as_matrix(config) for config in configs]
    if len(matrices) < 2:
        raise AnalysisPreconditionError("El alineamiento requiere al menos 2 configuraciones")
    if len({matrix.shape for matrix in matrices}) != 1:
        raise StructureError("Las configuraciones no comparten el número de landmarks")

    ids = list(trial_ids) if trial_ids is not None else [str(i) for i in range(len(matrices))]
    stacked = np.stack(matrices)
    centered = stacked - stacked.mean(axis=1, keepdims=True)

    sizes = np.empty(len(matrices))
    for index, matrix in enumerate(centered):
        try:
            sizes[index] = centroid_size(matrix)
        except DegenerateConfigurationError:
            raise DegenerateConfigurationError(ids[index])

    if mode is AlignmentMode.SHAPE_ONLY:
        centered = centered / sizes[:, None, None]

    mean = centered[0].copy()
    aligned = centered.copy()
    rotations = np.tile(np.eye(2), (len(matrices), 1, 1))
    history: List[float] = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        for index in range(len(centered)):
            rotations[index] = optimal_rotation(centered[index], mean)
            aligned[index] = centered[index] @ rotations[index]
        # Suma en orden fijo para que el resultado sea determinista
        new_mean = aligned.mean(axis=0)
        history.append(_objective(aligned, new_mean))
        change = float(np.linalg.norm(new_mean - mean))
        mean = new_mean
        if change < tol:
            converged = True
            break

    if not converged:
        logger.warning(
            "GPA (%s) no convergió tras %d iteraciones", mode.value, iterations
        )

    return AlignedShapeSet(
        mode=mode,
        trial_ids=ids,
        aligned=aligned,
        mean_shape=aligned.mean(axis=0),
        centroid_sizes=sizes,
        rotations=rotations,
        iterations=iterations,
        converged=converged,
        objective_history=history,
    )


def tangent_coordinates(aligned: AlignedShapeSet) -> np.ndarray:
    """
    Coordenadas en el espacio tangente a la forma media (una fila por ensayo).

    En ``size_and_shape`` son los residuos vec(alineada) − vec(media). En
    ``shape_only`` es la proyección ortogonal (I − u·uᵀ)·vec(alineada), con
    u = vec(media)/|vec(media)|.
    """
    if not aligned.converged:
        logger.warning("Se proyecta al espacio tangente un alineamiento que no convergió")

    vectors = aligned.aligned.reshape(aligned.aligned.shape[0], -1)
    mean_vector = aligned.mean_shape.reshape(-1)

    if aligned.mode is AlignmentMode.SIZE_AND_SHAPE:
        return vectors - mean_vector

    unit = mean_vector / np.linalg.norm(mean_vector)
    return vectors - np.outer(vectors @ unit, unit)


def _orient(components: np.ndarray) -> np.ndarray:
    """Cada componente con su carga de mayor magnitud positiva (empates: menor índice)."""
    oriented = components.copy()
    for column in range(oriented.shape[1]):
        pivot = int(np.argmax(np.abs(oriented[:, column])))
        if oriented[pivot, column] < 0:
            oriented[:, column] *= -1
    return oriented


def fit_pca(
    tangent: np.ndarray,
    q: int,
    mean_vector: Optional[np.ndarray] = None,
) -> PCModel:
    """
    PCA de los vectores tangentes.

    Las componentes son los q autovectores principales de la covarianza muestral
    (ddof = 1), ordenados por varianza decreciente y orientados con su carga de
    mayor magnitud positiva. Los puntajes son componentsᵀ·tangente.

    Args:
        tangent: Arreglo n×2k de vectores tangentes
        q: Número de componentes (1 <= q <= 2k, q < n)
        mean_vector: Punto de tangencia vec(forma media); ceros si se omite

    Raises:
        AnalysisPreconditionError: Si q no cumple los límites
        RankDeficiencyError: Si q excede el rango efectivo
    """
    data = np.asarray(tangent, dtype=float)
    n, dimension = data.shape
    if q < 1 or q > dimension:
        raise AnalysisPreconditionError(
            f"El número de componentes debe estar entre 1 y {dimension}; se recibió {q}"
        )
    if n <= q:
        raise AnalysisPreconditionError(
            f"Se requieren más de {q} ensayos para ajustar {q} componentes; hay {n}"
        )

    covariance = np.cov(data, rowvar=False, ddof=1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    largest = eigenvalues[0] if eigenvalues.size else 0.0
    rank = int(np.sum(eigenvalues > RANK_TOLERANCE * largest)) if largest > 0 else 0
    if q > rank:
        raise RankDeficiencyError(q, rank)

    components = _orient(eigenvectors[:, :q])
    variances = eigenvalues[:q].copy()
    total = float(np.trace(covariance))

    if mean_vector is None:
        mean_vector = np.zeros(dimension)

    return PCModel(
        mean_vector=np.asarray(mean_vector, dtype=float).reshape(-1),
        components=components,
        variances=variances,
        explained_ratio=variances / total,
        scores=data @ components,
        total_variance=total,
        effective_rank=rank,
    )


def project(model: PCModel, tangent: np.ndarray) -> np.ndarray:
    """Puntajes de nuevos vectores tangentes sobre un modelo existente."""
    return np.asarray(tangent, dtype=float) @ model.components


def reconstruct(model: PCModel, scores: np.ndarray) -> np.ndarray:
    """Formas k×2 reconstruidas como mean_vector + components·scores."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    vectors = model.mean_vector + scores @ model.components.T
    return vectors.reshape(scores.shape[0], -1, 2)


def effect_shapes(model: PCModel, pc: int, sd_multiples: Sequence[float]) -> List[EffectShape]:
    """
    Formas a ``sd_multiple`` desviaciones estándar sobre el componente ``pc``.

    Raises:
        ComponentOutOfRangeError: Si pc no está en 1..q
    """
    if not 1 <= pc <= model.q:
        raise ComponentOutOfRangeError(pc, model.q)

    component = model.components[:, pc - 1]
    sd = float(np.sqrt(model.variances[pc - 1]))
    shapes = []
    for multiple in sd_multiples:
        vector = model.mean_vector + multiple * sd * component
        shapes.append(EffectShape(pc_index=pc, sd_multiple=float(multiple), shape=vector.reshape(-1, 2)))
    return shapes


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """
    Correlación de Pearson y valor p bilateral por la aproximación t con n − 2 gl.

    Raises:
        AnalysisPreconditionError: Si las longitudes difieren o n < 3
        ZeroVarianceError: Si alguna variable es constante
    """
    first = np.asarray(x, dtype=float)
    second = np.asarray(y, dtype=float)
    if first.shape != second.shape or first.ndim != 1:
        raise AnalysisPreconditionError("Las variables deben ser vectores de igual longitud")
    n = first.size
    if n < 3:
        raise AnalysisPreconditionError(f"La correlación requiere al menos 3 observaciones; hay {n}")

    dx = first - first.mean()
    dy = second - second.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("Una de las variables no tiene varianza")

    r = float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t_value = r * np.sqrt((n - 2) / (1.0 - r * r))
    p_value = float(2.0 * stats.t.sf(abs(t_value), df=n - 2))
    return r, p_value
