"""
Harness del experimento de discriminación de hablantes.

Orquesta las etapas de dominio: filtro MAD → GPA → espacio tangente → mitades
→ PCA → comparaciones por pares con la regla de exclusión de la población de
referencia → calibración → métricas, una vez por subconjunto de PCs.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..domain.dataset import mad_outlier_filter, split_halves
from ..domain.entities import (
    AlignedShapeSet,
    CalibrationModel,
    ComparisonSample,
    CorrelationEntry,
    ExperimentConfig,
    FeatureSet,
    HalfSplit,
    Label,
    PCModel,
    ReferencePopulation,
    RemovalReport,
    ScoreEntry,
    ScoreSet,
    SpeakerDataset,
    SpeakerMeanShapes,
    SystemResult,
    feature_set_label,
)
from ..domain.evaluation import evaluate, fit_calibration
from ..domain.event_publisher import EventPublisher, NullEventPublisher
from ..domain.events import (
    ComparisonScored,
    ShapesAligned,
    StageCompleted,
    SystemEvaluated,
    TrialsFiltered,
)
from ..domain.exceptions import (
    AnalysisPreconditionError,
    ComponentOutOfRangeError,
    DomainException,
    InsufficientReferenceError,
    InvalidConfiguration,
    PipelineStageError,
    ZeroVarianceError,
)
from ..domain.mvkd import estimate_population, mvkd_log10_lr
from ..domain.procrustes import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
    fit_pca,
    pearson_correlation,
    procrustes_align,
    project,
    tangent_coordinates,
)


logger = logging.getLogger(__name__)

# Sub-flujo de la semilla para elegir el hablante extra excluido en comparaciones same
EXCLUSION_STREAM = 1

MIN_REFERENCE_SPEAKERS = 3

STATISTICS = ("mean", "sd")


@dataclass(eq=False)
class ExperimentRun:
    """Todo lo que produce una corrida del experimento para un modo de alineamiento."""

    config: ExperimentConfig
    removal: RemovalReport
    dataset: SpeakerDataset
    aligned: AlignedShapeSet
    model: PCModel
    trial_scores: np.ndarray
    splits: List[HalfSplit]
    results: List[SystemResult]

    @property
    def speaker_labels(self) -> np.ndarray:
        return self.dataset.speaker_labels()


@contextmanager
def _stage(name: str, event_publisher: EventPublisher):
    """Envuelve una etapa: cronometra y conserva el nombre de la etapa si falla."""
    started = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except DomainException as error:
        logger.error("Falló la etapa '%s': %s", name, error)
        raise PipelineStageError(name, error) from error
    event_publisher.publish(StageCompleted(
        occurred_at=datetime.now(),
        stage=name,
        seconds=time.perf_counter() - started,
    ))


def _validate_config(config: ExperimentConfig) -> None:
    if not config.feature_sets:
        raise InvalidConfiguration("experiment.feature_sets", "se requiere al menos un subconjunto")
    for feature_set in config.feature_sets:
        if not feature_set:
            raise InvalidConfiguration("experiment.feature_sets", "hay un subconjunto vacío")
        if len(set(feature_set)) != len(feature_set):
            raise InvalidConfiguration("experiment.feature_sets", f"índices repetidos en {feature_set}")
        for index in feature_set:
            if not 1 <= index <= config.q:
                raise ComponentOutOfRangeError(index, config.q)
    if config.calibration not in (ExperimentConfig.POOLED, ExperimentConfig.LEAVE_PAIR_OUT):
        raise InvalidConfiguration("experiment.calibration", f"valor desconocido '{config.calibration}'")
    if config.pca_fit not in (ExperimentConfig.POOLED, ExperimentConfig.FIRST_HALF):
        raise InvalidConfiguration("experiment.pca_fit", f"valor desconocido '{config.pca_fit}'")


def _extra_exclusions(speakers: Sequence[str], seed: int) -> Dict[str, str]:
    """Hablante adicional excluido en la comparación same de cada objetivo (uno por objetivo)."""
    rng = np.random.default_rng((seed, EXCLUSION_STREAM))
    extra = {}
    for target in speakers:
        others = [speaker for speaker in speakers if speaker != target]
        extra[target] = others[int(rng.integers(len(others)))]
    return extra


def comparison_plan(
    speakers: Sequence[str],
    seed: int,
) -> List[Tuple[str, str, FrozenSet[str]]]:
    """
    Lista ordenada (objetivo, candidato, excluidos) de las S² comparaciones.

    Para pares de hablantes distintos se excluyen los dos comparados; para el par
    same se excluye el objetivo y otro hablante elegido con la semilla, de modo
    que la población de referencia tiene siempre S − 2 hablantes.
    """
    extra = _extra_exclusions(speakers, seed)
    plan = []
    for target in speakers:
        for candidate in speakers:
            other = candidate if candidate != target else extra[target]
            plan.append((target, candidate, frozenset((target, other))))
    return plan


def _indices(trial_ids: Sequence[str], members: FrozenSet[str]) -> np.ndarray:
    return np.asarray([i for i, trial_id in enumerate(trial_ids) if trial_id in members], dtype=int)


def _score_feature_set(
    feature_set: FeatureSet,
    trial_scores: np.ndarray,
    dataset: SpeakerDataset,
    splits: List[HalfSplit],
    config: ExperimentConfig,
    plan: List[Tuple[str, str, FrozenSet[str]]],
    event_publisher: EventPublisher,
    max_workers: int,
) -> ScoreSet:
    vectors = trial_scores[:, [index - 1 for index in feature_set]]
    trial_ids = dataset.trial_ids
    labels = dataset.speaker_labels()
    speakers = dataset.speakers

    groups = {speaker: vectors[labels == speaker] for speaker in speakers}
    first = {split.speaker_id: vectors[_indices(trial_ids, split.first_half)] for split in splits}
    second = {split.speaker_id: vectors[_indices(trial_ids, split.second_half)] for split in splits}

    # Una población por conjunto de excluidos; se construyen antes de repartir el trabajo
    populations: Dict[FrozenSet[str], ReferencePopulation] = {}
    for _, _, excluded in plan:
        if excluded not in populations:
            populations[excluded] = estimate_population(
                {speaker: groups[speaker] for speaker in speakers if speaker not in excluded},
                subtract_within=config.subtract_within,
                bandwidth=config.bandwidth,
            )

    def _score(task: Tuple[str, str, FrozenSet[str]]) -> float:
        target, candidate, excluded = task
        return mvkd_log10_lr(
            ComparisonSample(first[target]),
            ComparisonSample(second[candidate]),
            populations[excluded],
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            values = list(executor.map(_score, plan))
    else:
        values = [_score(task) for task in plan]

    entries = []
    for (target, candidate, excluded), value in zip(plan, values):
        event_publisher.publish(ComparisonScored(
            occurred_at=datetime.now(),
            feature_set=tuple(feature_set),
            target=target,
            candidate=candidate,
            reference_speakers=populations[excluded].speaker_ids,
            score=value,
        ))
        label = Label.SAME if target == candidate else Label.DIFFERENT
        entries.append(ScoreEntry(score=value, label=label, pair=(target, candidate)))
    return ScoreSet(entries=tuple(entries))


def calibrate(raw: ScoreSet, strategy: str = ExperimentConfig.POOLED) -> Tuple[np.ndarray, CalibrationModel]:
    """
    Calibra los puntajes crudos.

    ``pooled`` ajusta un único modelo con todos los puntajes; ``leave-pair-out``
    calibra cada comparación con un modelo ajustado sin ninguna comparación que
    involucre a alguno de sus dos hablantes.

    Returns:
        (log10 LR calibrados, modelo global ajustado con todos los puntajes)
    """
    model = fit_calibration(raw)
    if strategy == ExperimentConfig.POOLED:
        return model.log10_lr(raw.scores), model

    models = {}
    calibrated = np.empty(len(raw))
    for index, entry in enumerate(raw.entries):
        held_out = frozenset(entry.pair)
        if held_out not in models:
            training = ScoreSet(entries=tuple(
                other for other in raw.entries if not held_out.intersection(other.pair)
            ))
            models[held_out] = fit_calibration(training)
        calibrated[index] = models[held_out].log10_lr([entry.score])[0]
    return calibrated, model


def execute_experiment(
    dataset: SpeakerDataset,
    config: ExperimentConfig,
    event_publisher: Optional[EventPublisher] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    max_workers: Optional[int] = None,
) -> ExperimentRun:
    """
    Ejecuta el experimento completo para un modo de alineamiento.

    Args:
        dataset: Dataset sin filtrar
        config: Configuración del experimento
        event_publisher: Destino de los eventos de instrumentación
        tol, max_iter: Parámetros del GPA
        max_workers: Techo de hilos (el efectivo es min(config.workers, techo))

    Raises:
        PipelineStageError: Si falla alguna etapa (conserva la causa)
    """
    publisher = event_publisher or NullEventPublisher()
    workers = max(1, min(config.workers, max_workers) if max_workers else config.workers)

    with _stage("config", publisher):
        _validate_config(config)

    with _stage("filter", publisher):
        filtered, removal = mad_outlier_filter(dataset, config.mad_threshold)
        publisher.publish(TrialsFiltered(
            occurred_at=datetime.now(),
            removed=len(removal.removed),
            total=removal.total,
            threshold=removal.threshold,
        ))
    with _stage("align", publisher):
        aligned = procrustes_align(
            [trial.config for trial in filtered.trials],
            mode=config.mode,
            tol=tol,
            max_iter=max_iter,
            trial_ids=filtered.trial_ids,
        )
        publisher.publish(ShapesAligned(
            occurred_at=datetime.now(),
            mode=aligned.mode.value,
            iterations=aligned.iterations,
            converged=aligned.converged,
        ))
        tangent = tangent_coordinates(aligned)

    with _stage("split", publisher):
        speakers = filtered.speakers
        if len(speakers) - 2 < MIN_REFERENCE_SPEAKERS:
            raise InsufficientReferenceError(len(speakers) - 2, MIN_REFERENCE_SPEAKERS)
        splits = split_halves(filtered, seed=config.seed)

    with _stage("pca", publisher):
        mean_vector = aligned.mean_shape.reshape(-1)
        if config.pca_fit == ExperimentConfig.FIRST_HALF:
            first_ids = frozenset().union(*(split.first_half for split in splits))
            model = fit_pca(tangent[_indices(filtered.trial_ids, first_ids)], config.q, mean_vector)
        else:
            model = fit_pca(tangent, config.q, mean_vector)
        trial_scores = project(model, tangent)

    plan = comparison_plan(speakers, config.seed)
    results: List[SystemResult] = []
    for feature_set in config.feature_sets:
        label = feature_set_label(feature_set)
        with _stage(f"score:{label}", publisher):
            raw = _score_feature_set(
                feature_set, trial_scores, filtered, splits, config, plan, publisher, workers
            )
        with _stage(f"calibrate:{label}", publisher):
            calibrated, calibration = calibrate(raw, config.calibration)
        with _stage(f"evaluate:{label}", publisher):
            metrics = evaluate(raw, calibrated)

        publisher.publish(SystemEvaluated(
            occurred_at=datetime.now(),
            system=label,
            mode=config.mode.value,
            eer_percent=metrics.eer_percent,
            cllr=metrics.cllr,
        ))
        logger.info(
            "%s [%s]: EER %.2f%%, Cllr %.3f (%d same / %d different)",
            label, config.mode.value, metrics.eer_percent, metrics.cllr,
            metrics.n_same, metrics.n_different,
        )
        results.append(SystemResult(
            feature_set=tuple(feature_set),
            mode=config.mode,
            raw_scores=raw,
            calibrated=calibrated,
            metrics=metrics,
            calibration=calibration,
        ))

    return ExperimentRun(
        config=config,
        removal=removal,
        dataset=filtered,
        aligned=aligned,
        model=model,
        trial_scores=trial_scores,
        splits=splits,
        results=results,
    )


def run_experiment(
    dataset: SpeakerDataset,
    config: ExperimentConfig,
    event_publisher: Optional[EventPublisher] = None,
    **options,
) -> List[SystemResult]:
    """Una SystemResult por subconjunto de PCs, en el orden de ``config.feature_sets``."""
    return execute_experiment(dataset, config, event_publisher, **options).results


def _group_statistic(scores: np.ndarray, labels: np.ndarray, speakers: Sequence[str], statistic: str) -> np.ndarray:
    rows = []
    for speaker in speakers:
        values = scores[labels == speaker]
        if statistic == "mean":
            rows.append(values.mean(axis=0))
        elif values.shape[0] < 2:
            rows.append(np.full(values.shape[1], np.nan))
        else:
            rows.append(values.std(axis=0, ddof=1))
    return np.asarray(rows)


def speaker_level_correlations(
    scores: np.ndarray,
    labels: Sequence[str],
    statistics: Sequence[str] = STATISTICS,
) -> List[CorrelationEntry]:
    """
    Correlaciones entre hablantes de estadísticos por hablante de cada par de PCs.

    Para cada par (i < j) y cada estadístico (media o desvío estándar de los
    puntajes de cada hablante) se correlacionan los valores de los hablantes.
    Las entradas con varianza nula o desvíos indefinidos se marcan como
    degeneradas en lugar de fallar.

    Raises:
        AnalysisPreconditionError: Si hay menos de 3 hablantes
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    labels = np.asarray(labels, dtype=object)
    speakers = list(dict.fromkeys(labels.tolist()))
    if len(speakers) < 3:
        raise AnalysisPreconditionError(
            f"Las correlaciones entre hablantes requieren al menos 3 hablantes; hay {len(speakers)}"
        )
    for statistic in statistics:
        if statistic not in STATISTICS:
            raise InvalidConfiguration("statistics", f"estadístico desconocido '{statistic}'")

    q = scores.shape[1]
    entries = []
    for statistic in statistics:
        table = _group_statistic(scores, labels, speakers, statistic)
        for i in range(q):
            for j in range(i + 1, q):
                x, y = table[:, i], table[:, j]
                if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                    entries.append(CorrelationEntry(i + 1, j + 1, statistic, float("nan"), float("nan"), True))
                    continue
                try:
                    r, p = pearson_correlation(x, y)
                except ZeroVarianceError:
                    entries.append(CorrelationEntry(i + 1, j + 1, statistic, float("nan"), float("nan"), True))
                    continue
                entries.append(CorrelationEntry(i + 1, j + 1, statistic, r, p))
    return entries


def extreme_speakers(scores: np.ndarray, labels: Sequence[str], pc: int) -> Tuple[str, str]:
    """
    Hablantes con la mayor y la menor media de puntaje sobre un PC.

    Raises:
        ComponentOutOfRangeError: Si pc no está en 1..q
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if not 1 <= pc <= scores.shape[1]:
        raise ComponentOutOfRangeError(pc, scores.shape[1])
    labels = np.asarray(labels, dtype=object)
    speakers = list(dict.fromkeys(labels.tolist()))
    means = _group_statistic(scores, labels, speakers, "mean")[:, pc - 1]
    return speakers[int(np.argmax(means))], speakers[int(np.argmin(means))]


def speaker_mean_shapes(
    aligned: AlignedShapeSet,
    labels: Sequence[str],
    speakers: Optional[Sequence[str]] = None,
) -> SpeakerMeanShapes:
    """
    Forma media alineada de cada hablante más la media general.

    Args:
        aligned: Formas alineadas
        labels: Hablante de cada forma, en el mismo orden
        speakers: Restringe la salida a estos hablantes (la media general usa todos)

    Raises:
        AnalysisPreconditionError: Si las etiquetas no corresponden a las formas
    """
    labels = np.asarray(labels, dtype=object)
    if labels.shape[0] != aligned.aligned.shape[0]:
        raise AnalysisPreconditionError(
            f"Hay {labels.shape[0]} etiquetas para {aligned.aligned.shape[0]} formas alineadas"
        )
    selected = list(speakers) if speakers is not None else list(dict.fromkeys(labels.tolist()))
    shapes = {}
    for speaker in selected:
        members = aligned.aligned[labels == speaker]
        if members.shape[0] == 0:
            raise AnalysisPreconditionError(f"El hablante '{speaker}' no tiene formas alineadas")
        shapes[speaker] = members.mean(axis=0)
    return SpeakerMeanShapes(by_speaker=shapes, overall=aligned.aligned.mean(axis=0))
