"""
Razón de verosimilitud por densidad de kernel multivariada (MVKD).

Variación intra-hablante normal con covarianza U; variación entre hablantes
modelada por una mezcla de kernels normales centrados en las medias de la
población de referencia, con covarianza h²·B. Todo se evalúa en espacio
logarítmico con factorizaciones de Cholesky.
"""

import logging
import math
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .entities import ComparisonSample, ReferencePopulation
from .exceptions import (
    AnalysisPreconditionError,
    InsufficientReferenceError,
    SingularCovarianceError,
)


logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
RIDGE_FACTOR = 1e-8


def optimal_bandwidth(m: int, p: int) -> float:
    """h = (4 / (m·(2p + 1)))^(1/(p + 4))."""
    return (4.0 / (m * (2 * p + 1))) ** (1.0 / (p + 4))


def _regularize(pooled_within: np.ndarray) -> tuple:
    """
    Agrega un ridge 1e-8·traza(U)/p·I si U está mal condicionada.

    Raises:
        SingularCovarianceError: Si U sigue siendo singular
    """
    p = pooled_within.shape[0]
    eigenvalues = np.linalg.eigvalsh(pooled_within)
    smallest, largest = float(eigenvalues[0]), float(eigenvalues[-1])
    if largest > 0 and smallest > 0 and largest / smallest <= MAX_CONDITION:
        return pooled_within, False

    ridge = RIDGE_FACTOR * float(np.trace(pooled_within)) / p
    if ridge <= 0:
        raise SingularCovarianceError("U", "es nula: no hay variación intra-hablante")
    logger.warning("Covarianza intra-hablante mal condicionada; se agrega ridge %.3e", ridge)
    regularized = pooled_within + ridge * np.eye(p)
    if np.linalg.eigvalsh(regularized)[0] <= 0:
        raise SingularCovarianceError("U")
    return regularized, True


def _nearest_psd(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.T) / 2.0)
    return (eigenvectors * np.clip(eigenvalues, 0.0, None)) @ eigenvectors.T


def estimate_population(
    groups: Mapping[str, np.ndarray],
    subtract_within: bool = False,
    bandwidth: Optional[float] = None,
) -> ReferencePopulation:
    """
    Estima U, B y h a partir de los vectores de cada hablante de referencia.

    U = Σᵢ Σⱼ (x_ij − x̄_i)(x_ij − x̄_i)ᵀ / (N − m)
    B = Σᵢ (x̄_i − x̄)(x̄_i − x̄)ᵀ / (m − 1)

    Args:
        groups: Vectores (n_i × p) por hablante, en el orden deseado
        subtract_within: Usa B − U/n̄ (proyectada a semidefinida positiva)
        bandwidth: Ancho de banda explícito; por defecto la fórmula óptima

    Raises:
        InsufficientReferenceError: Si hay menos de 3 hablantes
        AnalysisPreconditionError: Si un hablante tiene menos de 2 vectores o
            las dimensiones no coinciden
        SingularCovarianceError: Si U es singular aun regularizada
    """
    speaker_ids = tuple(groups.keys())
    arrays = [np.atleast_2d(np.asarray(groups[key], dtype=float)) for key in speaker_ids]
    m = len(arrays)
    if m < 3:
        raise InsufficientReferenceError(m)
    if len({array.shape[1] for array in arrays}) != 1:
        raise AnalysisPreconditionError("Los vectores de referencia no comparten la dimensión")
    for key, array in zip(speaker_ids, arrays):
        if array.shape[0] < 2:
            raise AnalysisPreconditionError(
                f"El hablante de referencia '{key}' tiene {array.shape[0]} vector(es); se requieren 2"
            )

    p = arrays[0].shape[1]
    counts = np.asarray([array.shape[0] for array in arrays])
    means = np.stack([array.mean(axis=0) for array in arrays])

    scatter = np.zeros((p, p))
    for array, mean in zip(arrays, means):
        deviations = array - mean
        scatter += deviations.T @ deviations
    pooled_within = scatter / (counts.sum() - m)

    grand_mean = means.mean(axis=0)
    deviations = means - grand_mean
    between = deviations.T @ deviations / (m - 1)
    if subtract_within:
        between = _nearest_psd(between - pooled_within / counts.mean())

    pooled_within, regularized = _regularize(pooled_within)

    return ReferencePopulation(
        speaker_ids=speaker_ids,
        means=means,
        counts=counts,
        pooled_within=pooled_within,
        between=between,
        bandwidth=float(bandwidth) if bandwidth is not None else optimal_bandwidth(m, p),
        regularized=regularized,
    )


def _cholesky(covariance: np.ndarray, name: str):
    try:
        return linalg.cho_factor(covariance, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        raise SingularCovarianceError(name)


def _log_gaussian(points: np.ndarray, mean: np.ndarray, covariance: np.ndarray, name: str) -> np.ndarray:
    """log N(x; μ, Σ) para cada fila de ``points`` (o para un solo punto)."""
    factor = _cholesky(covariance, name)
    lower = factor[0]
    p = covariance.shape[0]
    deltas = np.atleast_2d(points - mean)
    solved = linalg.solve_triangular(lower, deltas.T, lower=True)
    quadratic = np.sum(solved ** 2, axis=0)
    log_det = 2.0 * np.sum(np.log(np.diag(lower)))
    return -0.5 * (p * math.log(2.0 * math.pi) + log_det + quadratic)


def _log_kernel_mixture(point: np.ndarray, population: ReferencePopulation, covariance: np.ndarray, name: str) -> float:
    """log[(1/m)·Σᵢ N(point; x̄_i, covariance)]."""
    terms = _log_gaussian(population.means, point, covariance, name)
    return float(logsumexp(terms) - math.log(population.m))


def mvkd_log10_lr(
    a: ComparisonSample,
    b: ComparisonSample,
    population: ReferencePopulation,
) -> float:
    """
    log10 LR de dos muestras bajo el modelo MVKD.

    Numerador: N(ȳ_A; ȳ_B, D_A + D_B)·(1/m)Σᵢ N(μ_AB; x̄_i, D_AB + H)
    Denominador: [(1/m)Σᵢ N(ȳ_A; x̄_i, D_A + H)]·[(1/m)Σᵢ N(ȳ_B; x̄_i, D_B + H)]
    con D = U/n, H = h²·B, D_AB = (D_A⁻¹ + D_B⁻¹)⁻¹ y
    μ_AB = D_AB·(D_A⁻¹ȳ_A + D_B⁻¹ȳ_B).

    Raises:
        AnalysisPreconditionError: Si las dimensiones no coinciden
        SingularCovarianceError: Si una covarianza compuesta no es definida positiva
    """
    if a.p != population.p or b.p != population.p:
        raise AnalysisPreconditionError(
            f"Dimensión de las muestras ({a.p}, {b.p}) distinta de la población ({population.p})"
        )

    within = population.pooled_within
    kernel = population.bandwidth ** 2 * population.between
    d_a = within / a.count
    d_b = within / b.count
    mean_a = a.mean
    mean_b = b.mean

    # D_A⁻¹ = n_A·U⁻¹, D_B⁻¹ = n_B·U⁻¹, así que D_AB = U/(n_A + n_B)
    within_factor = _cholesky(within, "U")
    information = (
        a.count * linalg.cho_solve(within_factor, mean_a)
        + b.count * linalg.cho_solve(within_factor, mean_b)
    )
    d_ab = within / (a.count + b.count)
    mu_ab = d_ab @ information

    similarity = float(_log_gaussian(mean_a, mean_b, d_a + d_b, "D_A + D_B")[0])
    numerator = similarity + _log_kernel_mixture(mu_ab, population, d_ab + kernel, "D_AB + H")
    typicality_a = _log_kernel_mixture(mean_a, population, d_a + kernel, "D_A + H")
    typicality_b = _log_kernel_mixture(mean_b, population, d_b + kernel, "D_B + H")

    return (numerator - (typicality_a + typicality_b)) / math.log(10.0)


def score_pair(
    first: np.ndarray,
    second: np.ndarray,
    population: ReferencePopulation,
) -> float:
    """Atajo: puntúa dos arreglos de vectores contra una población."""
    return mvkd_log10_lr(ComparisonSample(first), ComparisonSample(second), population)


def groups_from_arrays(vectors: np.ndarray, labels: Sequence[str]) -> dict:
    """Agrupa filas por etiqueta conservando el orden de primera aparición."""
    labels = np.asarray(labels, dtype=object)
    ordered = list(dict.fromkeys(labels.tolist()))
    return {label: vectors[labels == label] for label in ordered}
