"""
Evaluación de sistemas: calibración logística de puntajes, EER, Cllr y datos
para curvas de Tippett.
"""

import logging
import math
import warnings
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression

from .entities import CalibrationModel, Label, ScoreSet, SystemMetrics, TippettCurves
from .exceptions import AnalysisPreconditionError, SingleLabelError


logger = logging.getLogger(__name__)

LN10 = math.log(10.0)

# Tope de |log10 LR| en el ajuste con separación perfecta
SEPARATION_CAP_LOG10 = 6.0

# Rango de LR admitido por Cllr antes del logaritmo
CLLR_LOG10_CLAMP = 10.0

LOGISTIC_TOLERANCE = 1e-10
MAX_LOGISTIC_ITER = 1000

GRADIENT_TOLERANCE = 1e-8
MAX_NEWTON_ITER = 100


def _require_both_labels(is_same: np.ndarray) -> None:
    if is_same.size == 0:
        raise AnalysisPreconditionError("El conjunto de puntajes está vacío")
    if is_same.all():
        raise SingleLabelError(Label.SAME.value)
    if not is_same.any():
        raise SingleLabelError(Label.DIFFERENT.value)


def _class_weights(is_same: np.ndarray) -> np.ndarray:
    """Pesos que igualan las probabilidades previas efectivas de ambas clases."""
    n_same = is_same.sum()
    n_different = is_same.size - n_same
    return np.where(is_same, 0.5 / n_same, 0.5 / n_different)


def _loss(params: np.ndarray, scores: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> float:
    logits = params[0] * scores + params[1]
    signs = np.where(targets > 0, 1.0, -1.0)
    return float(-np.sum(weights * log_expit(signs * logits)))


def _is_separated(scores: np.ndarray, is_same: np.ndarray) -> bool:
    same, different = scores[is_same], scores[~is_same]
    return bool(same.min() > different.max() or different.min() > same.max())


def _logistic_fit(scores: np.ndarray, is_same: np.ndarray) -> tuple:
    """
    Regresión logística sin penalización con clases balanceadas.

    Returns:
        (weight, offset, convergió)
    """
    # C=inf: sin término de penalización
    model = LogisticRegression(
        class_weight="balanced",
        C=np.inf,
        tol=LOGISTIC_TOLERANCE,
        max_iter=MAX_LOGISTIC_ITER,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model.fit(scores.reshape(-1, 1), is_same.astype(int))
    converged = not any(issubclass(item.category, ConvergenceWarning) for item in caught)
    return float(model.coef_[0, 0]), float(model.intercept_[0]), converged


def _capped_newton(scores: np.ndarray, is_same: np.ndarray, cap: float) -> tuple:
    """
    Newton-Raphson amortiguado para puntajes perfectamente separados.

    Sin tope el óptimo está en el infinito; el ajuste se detiene en la
    iteración en la que algún log LR natural superaría ``cap``, recortando el
    último paso para quedar justo en él.

    Returns:
        (weight, offset, convergió)
    """
    targets = is_same.astype(float)
    weights = _class_weights(is_same)
    params = np.zeros(2)
    design = np.column_stack([scores, np.ones_like(scores)])

    for _ in range(MAX_NEWTON_ITER):
        probabilities = expit(design @ params)
        gradient = design.T @ (weights * (probabilities - targets))
        if np.linalg.norm(gradient) < GRADIENT_TOLERANCE:
            return params[0], params[1], True

        curvature = weights * probabilities * (1.0 - probabilities)
        hessian = design.T @ (design * curvature[:, None])
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hessian, gradient, rcond=None)[0]

        current = _loss(params, scores, targets, weights)
        fraction = 1.0
        candidate = params - step
        while _loss(candidate, scores, targets, weights) > current and fraction > 1e-10:
            fraction /= 2.0
            candidate = params - fraction * step

        peak = np.max(np.abs(design @ candidate))
        if peak > cap:
            # Recorte lineal del paso: |logit| es afín en la fracción del paso
            start = design @ params
            delta = design @ (candidate - params)
            limits = []
            for value, change in zip(start, delta):
                if change > 0:
                    limits.append((cap - value) / change)
                elif change < 0:
                    limits.append((-cap - value) / change)
            t = max(0.0, min(1.0, min(limits) if limits else 1.0))
            params = params + t * (candidate - params)
            return params[0], params[1], True

        params = candidate

    return params[0], params[1], False


def fit_calibration(scores: ScoreSet) -> CalibrationModel:
    """
    Calibración por regresión logística con previas efectivas iguales.

    log10 LR(s) = (weight·s + offset)/ln(10). El ajuste usa
    ``LogisticRegression(class_weight="balanced")`` sin penalización. Si resulta
    decreciente se invierte la polaridad (y se advierte): el LR calibrado decrece
    con el puntaje crudo en ese caso. Con separación perfecta los log10 LR de
    entrenamiento se limitan a ±6.

    Raises:
        SingleLabelError: Si falta alguna de las etiquetas
        AnalysisPreconditionError: Si todos los puntajes son idénticos
    """
    values = scores.scores
    is_same = scores.is_same
    _require_both_labels(is_same)
    if np.ptp(values) == 0.0:
        raise AnalysisPreconditionError("Todos los puntajes son idénticos; no se puede calibrar")
    if not np.all(np.isfinite(values)):
        raise AnalysisPreconditionError("Los puntajes deben ser finitos")

    separated = _is_separated(values, is_same)
    if separated:
        logger.warning("Puntajes perfectamente separados: se limita |log10 LR| a %.1f", SEPARATION_CAP_LOG10)
        weight, offset, converged = _capped_newton(values, is_same, SEPARATION_CAP_LOG10 * LN10)
    else:
        weight, offset, converged = _logistic_fit(values, is_same)
    if not converged:
        logger.warning("La calibración logística no alcanzó la tolerancia")

    polarity = 1
    if weight < 0:
        logger.warning("Calibración decreciente: los puntajes parecen invertidos; se invierte la polaridad")
        polarity = -1
        weight = -weight

    return CalibrationModel(
        weight=float(weight),
        offset=float(offset),
        polarity=polarity,
        separated=separated,
    )


def equal_error_rate(scores: ScoreSet) -> float:
    """
    Tasa de error igual (%).

    Se barren los umbrales sobre el soporte ordenado de los puntajes con
    FRR(t) = fracción de puntajes ``same`` < t y FAR(t) = fracción de
    ``different`` >= t; el cruce se ubica por interpolación lineal entre
    umbrales adyacentes.

    Raises:
        SingleLabelError: Si falta alguna de las etiquetas
    """
    values = scores.scores
    is_same = scores.is_same
    _require_both_labels(is_same)

    same = np.sort(values[is_same])
    different = np.sort(values[~is_same])
    support = np.unique(values)
    thresholds = np.append(support, np.inf)

    frr = np.searchsorted(same, thresholds, side="left") / same.size
    far = 1.0 - np.searchsorted(different, thresholds, side="left") / different.size
    gap = far - frr

    crossing = int(np.argmax(gap <= 0))
    if gap[crossing] == 0 or crossing == 0:
        return float(100.0 * frr[crossing])

    before, after = gap[crossing - 1], gap[crossing]
    fraction = before / (before - after)
    eer = frr[crossing - 1] + fraction * (frr[crossing] - frr[crossing - 1])
    return float(100.0 * eer)


def cllr(llrs: ScoreSet) -> float:
    """
    Costo de log LR:
    ½·[(1/N_s)·Σ_same log2(1 + 1/LR) + (1/N_d)·Σ_diff log2(1 + LR)].

    Los log10 LR se limitan a [−10, 10] antes del cálculo.
    """
    values = np.clip(llrs.scores, -CLLR_LOG10_CLAMP, CLLR_LOG10_CLAMP)
    is_same = llrs.is_same
    _require_both_labels(is_same)

    same_cost = np.mean(np.log2(1.0 + np.power(10.0, -values[is_same])))
    different_cost = np.mean(np.log2(1.0 + np.power(10.0, values[~is_same])))
    return float(0.5 * (same_cost + different_cost))


def evaluate(raw: ScoreSet, calibrated: Sequence[float]) -> SystemMetrics:
    """EER sobre los puntajes crudos y Cllr sobre los log10 LR calibrados."""
    return SystemMetrics(
        eer_percent=equal_error_rate(raw),
        cllr=cllr(raw.with_scores(calibrated)),
        n_same=raw.n_same,
        n_different=raw.n_different,
    )


def tippett_data(llrs: ScoreSet) -> TippettCurves:
    """Distribución acumulada empírica de los log10 LR de cada etiqueta."""
    if len(llrs) == 0:
        raise AnalysisPreconditionError("No hay log LR para construir las curvas de Tippett")

    def _curve(values: np.ndarray) -> tuple:
        ordered = np.sort(values)
        proportions = np.arange(1, ordered.size + 1) / ordered.size
        return tuple((float(v), float(p)) for v, p in zip(ordered, proportions))

    values = llrs.scores
    is_same = llrs.is_same
    return TippettCurves(same=_curve(values[is_same]), different=_curve(values[~is_same]))
