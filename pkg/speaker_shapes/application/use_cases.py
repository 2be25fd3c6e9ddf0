"""
Use Cases (Comandos) - Casos de uso que orquestan operaciones de dominio.
Cada caso de uso corresponde a un comando de la línea de comandos.
"""

import hashlib
import logging
import platform
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy
import sklearn

from .. import __version__
from ..domain.dataset import DEFAULT_MAD_THRESHOLD, mad_outlier_filter
from ..domain.entities import (
    AlignedShapeSet,
    AlignmentMode,
    ExperimentConfig,
    PCModel,
    RemovalReport,
    RunManifest,
    SpeakerDataset,
    SyntheticSpec,
    SystemResult,
)
from ..domain.event_publisher import EventPublisher
from ..domain.events import ShapesAligned, StageCompleted, TrialsFiltered
from ..domain.exceptions import AnalysisPreconditionError, DomainException, InvalidConfiguration
from ..domain.procrustes import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
    effect_shapes,
    fit_pca,
    pearson_correlation,
    procrustes_align,
    tangent_coordinates,
)
from ..domain.repositories import DatasetRepository
from ..domain.synthetic import generate_synthetic
from ..infrastructure.event_publisher import CollectingEventPublisher
from ..infrastructure.exporters import (
    OutputSet,
    aligned_frame,
    correlations_frame,
    effect_shapes_frame,
    explained_variance_frame,
    loadings_frame,
    metrics_frame,
    metrics_payload,
    pc_scores_frame,
    scores_frame,
    shapes_frame,
    speaker_mean_shapes_frame,
    tippett_frame,
)
from ..infrastructure.landmark_table import serialize_landmark_table
from .harness import (
    ExperimentRun,
    execute_experiment,
    extreme_speakers,
    speaker_level_correlations,
    speaker_mean_shapes,
)


logger = logging.getLogger(__name__)

DEFAULT_SD_MULTIPLES = (-3.0, 3.0)


def runtime_versions() -> Dict[str, str]:
    """Versiones de la herramienta y de las bibliotecas numéricas."""
    return {
        "speaker_shapes": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _sidecar(path: Path, suffix: str) -> str:
    """Nombre de un archivo acompañante: ``datos.csv`` -> ``datos<suffix>``."""
    return path.with_suffix("").name + suffix


# =============================================================================
# filter
# =============================================================================

@dataclass
class FilterTrialsCommand:
    """Comando: Filtrar ensayos con errores de seguimiento."""
    input_path: str
    output_path: str
    threshold: float = DEFAULT_MAD_THRESHOLD


@dataclass
class FilterOutcome:
    dataset: SpeakerDataset
    report: RemovalReport
    manifest: RunManifest


class FilterTrialsUseCase:
    """
    Caso de uso: Filtrar outliers por MAD.

    Responsabilidades:
    1. Leer el dataset de entrada
    2. Aplicar el filtro (una sola pasada)
    3. Escribir el dataset filtrado, el reporte y el manifiesto
    4. Publicar el evento de dominio
    """

    def __init__(self, repository: DatasetRepository, event_publisher: EventPublisher):
        """
        Inyección de dependencias (DIP).

        Args:
            repository: Repositorio de datasets
            event_publisher: Publicador de eventos
        """
        self.repository = repository
        self.event_publisher = event_publisher

    def execute(self, command: FilterTrialsCommand) -> FilterOutcome:
        """
        Ejecuta el filtrado.

        Raises:
            InvalidInputData: Si la entrada no se puede leer o interpretar
            AnalysisPreconditionError: Si el umbral o el dataset no son válidos
        """
        # 1. Leer la entrada
        dataset = self.repository.load(command.input_path)
        digest = self.repository.digest(command.input_path)

        # 2. Filtrar
        filtered, report = mad_outlier_filter(dataset, command.threshold)

        # 3. Escribir salidas
        output = Path(command.output_path)
        outputs = OutputSet(output.parent)
        manifest = RunManifest(
            command="filter",
            config={
                "input": str(command.input_path),
                "output": str(output),
                "threshold": command.threshold,
            },
            input_digest=digest,
            seed=None,
            version=runtime_versions(),
        )
        try:
            self.repository.save(filtered, str(output))
            outputs.track(output)
            outputs.json(_sidecar(output, ".removals.json"), report.to_dict())
            manifest.outputs = [str(path) for path in outputs.written]
            outputs.json(_sidecar(output, ".manifest.json"), manifest.to_dict())
        except DomainException:
            outputs.discard()
            raise

        # 4. Publicar evento
        self.event_publisher.publish(TrialsFiltered(
            occurred_at=datetime.now(),
            removed=len(report.removed),
            total=report.total,
            threshold=report.threshold,
        ))
        return FilterOutcome(dataset=filtered, report=report, manifest=manifest)


# =============================================================================
# shapes
# =============================================================================

@dataclass
class AnalyseShapesCommand:
    """Comando: Alinear, proyectar y descomponer en componentes principales."""
    input_path: str
    output_dir: str
    mode: AlignmentMode = AlignmentMode.SIZE_AND_SHAPE
    q: int = 3
    sd_multiples: Tuple[float, ...] = DEFAULT_SD_MULTIPLES
    extreme_pc: Optional[int] = None
    tol: float = DEFAULT_TOLERANCE
    max_iter: int = DEFAULT_MAX_ITER


@dataclass
class ShapesOutcome:
    aligned: AlignedShapeSet
    model: PCModel
    summary: Dict[str, object]
    manifest: RunManifest


class AnalyseShapesUseCase:
    """
    Caso de uso: Análisis de formas.

    Responsabilidades:
    1. Leer el dataset
    2. Alinear por Procrustes generalizado en el modo pedido
    3. Ajustar el PCA en el espacio tangente
    4. Derivar formas de efecto, correlación con el tamaño y hablantes extremos
    5. Escribir las tablas, el resumen y el manifiesto
    """

    def __init__(self, repository: DatasetRepository, event_publisher: EventPublisher):
        self.repository = repository
        self.event_publisher = event_publisher

    def _size_correlation(self, model: PCModel, aligned: AlignedShapeSet) -> Optional[Dict[str, float]]:
        try:
            r, p = pearson_correlation(model.scores[:, 0], aligned.centroid_sizes)
        except AnalysisPreconditionError as error:
            logger.warning("No se pudo correlacionar PC1 con el tamaño de centroide: %s", error)
            return None
        return {"r": r, "p": p}

    def execute(self, command: AnalyseShapesCommand) -> ShapesOutcome:
        """
        Ejecuta el análisis de formas.

        Raises:
            InvalidInputData: Si la entrada no se puede leer o interpretar
            RankDeficiencyError: Si q excede el rango efectivo
        """
        # 1. Leer la entrada
        dataset = self.repository.load(command.input_path)
        digest = self.repository.digest(command.input_path)
        labels = dataset.speaker_labels()

        # 2. Alinear
        aligned = procrustes_align(
            [trial.config for trial in dataset.trials],
            mode=command.mode,
            tol=command.tol,
            max_iter=command.max_iter,
            trial_ids=dataset.trial_ids,
        )
        self.event_publisher.publish(ShapesAligned(
            occurred_at=datetime.now(),
            mode=aligned.mode.value,
            iterations=aligned.iterations,
            converged=aligned.converged,
        ))

        # 3. PCA
        tangent = tangent_coordinates(aligned)
        model = fit_pca(tangent, command.q, aligned.mean_shape.reshape(-1))

        # 4. Derivados
        effects = [
            effect
            for pc in range(1, model.q + 1)
            for effect in effect_shapes(model, pc, command.sd_multiples)
        ]
        extreme_pc = command.extreme_pc or min(2, model.q)
        summary: Dict[str, object] = {
            "mode": aligned.mode.value,
            "n_trials": len(dataset),
            "n_speakers": len(dataset.speakers),
            "landmark_count": dataset.landmark_count,
            "iterations": aligned.iterations,
            "converged": aligned.converged,
            "objective": aligned.objective_history[-1] if aligned.objective_history else None,
            "effective_rank": model.effective_rank,
            "total_variance": model.total_variance,
            "explained_ratio": model.explained_ratio.tolist(),
            "centroid_size_correlation": self._size_correlation(model, aligned),
        }
        selected = None
        if len(dataset.speakers) >= 2:
            highest, lowest = extreme_speakers(model.scores, labels, extreme_pc)
            selected = [highest, lowest] if highest != lowest else [highest]
            summary["extreme_speakers"] = {"pc": extreme_pc, "highest": highest, "lowest": lowest}
        mean_shapes = speaker_mean_shapes(aligned, labels, speakers=selected)

        # 5. Escribir salidas
        outputs = OutputSet(Path(command.output_dir))
        manifest = RunManifest(
            command="shapes",
            config={
                "input": str(command.input_path),
                "output": str(command.output_dir),
                "mode": aligned.mode.value,
                "q": command.q,
                "sd_multiples": list(command.sd_multiples),
                "tol": command.tol,
                "max_iter": command.max_iter,
            },
            input_digest=digest,
            seed=None,
            version=runtime_versions(),
            extra={"converged": aligned.converged, "iterations": aligned.iterations},
        )
        try:
            outputs.csv("aligned_shapes.csv", aligned_frame(aligned, labels))
            outputs.csv("mean_shape.csv", shapes_frame({"mean": aligned.mean_shape}))
            outputs.csv("pc_loadings.csv", loadings_frame(model))
            outputs.csv("pc_scores.csv", pc_scores_frame(model.scores, aligned.trial_ids, labels))
            outputs.csv("explained_variance.csv", explained_variance_frame(model))
            outputs.csv("effect_shapes.csv", effect_shapes_frame(effects))
            outputs.csv("speaker_mean_shapes.csv", speaker_mean_shapes_frame(mean_shapes))
            outputs.json("summary.json", summary)
            manifest.outputs = [str(path) for path in outputs.written]
            outputs.json("manifest.json", manifest.to_dict())
        except DomainException:
            outputs.discard()
            raise

        return ShapesOutcome(aligned=aligned, model=model, summary=summary, manifest=manifest)


# =============================================================================
# run
# =============================================================================

@dataclass
class RunExperimentCommand:
    """Comando: Ejecutar el experimento para uno o más modos de alineamiento.

    Si no hay ``input_path`` el dataset se genera en memoria a partir de ``synthetic``.
    """
    input_path: Optional[str]
    output_dir: str
    configs: List[ExperimentConfig]
    synthetic: Optional[SyntheticSpec] = None
    config_snapshot: Dict[str, object] = field(default_factory=dict)
    tol: float = DEFAULT_TOLERANCE
    max_iter: int = DEFAULT_MAX_ITER
    max_workers: Optional[int] = None


@dataclass
class RunOutcome:
    runs: Dict[AlignmentMode, ExperimentRun]
    manifest: RunManifest

    @property
    def results(self) -> Dict[AlignmentMode, List[SystemResult]]:
        return {mode: run.results for mode, run in self.runs.items()}


class RunExperimentUseCase:
    """
    Caso de uso: Experimento de discriminación de hablantes.

    Responsabilidades:
    1. Leer el dataset
    2. Ejecutar el harness para cada modo configurado
    3. Calcular las correlaciones entre hablantes
    4. Escribir métricas, puntajes, Tippett, correlaciones y el manifiesto;
       si algo falla se eliminan las salidas parciales
    """

    def __init__(self, repository: DatasetRepository, event_publisher: EventPublisher):
        self.repository = repository
        self.event_publisher = event_publisher

    def execute(self, command: RunExperimentCommand) -> RunOutcome:
        """
        Ejecuta el experimento.

        Raises:
            InvalidInputData: Si la entrada no se puede leer o interpretar
            PipelineStageError: Si falla una etapa del experimento
        """
        # 1. Leer (o generar) la entrada
        if command.input_path is None:
            if command.synthetic is None:
                raise InvalidConfiguration("experiment.input", "se requiere un dataset o una sección synthetic")
            dataset = generate_synthetic(command.synthetic)
            digest = hashlib.sha256(serialize_landmark_table(dataset).encode("utf-8")).hexdigest()
        else:
            dataset = self.repository.load(command.input_path)
            digest = self.repository.digest(command.input_path)

        # 2. Ejecutar por modo
        collector = CollectingEventPublisher(delegate=self.event_publisher)
        runs: Dict[AlignmentMode, ExperimentRun] = {}
        timings: Dict[str, float] = {}
        for config in command.configs:
            collector.clear()
            runs[config.mode] = execute_experiment(
                dataset,
                config,
                event_publisher=collector,
                tol=command.tol,
                max_iter=command.max_iter,
                max_workers=command.max_workers,
            )
            timings.update(collector.stage_timings(prefix=f"{config.mode.value}:"))
            violations = collector.exclusion_violations()
            if violations:
                raise AnalysisPreconditionError(
                    f"{len(violations)} comparación(es) usaron a un hablante comparado como referencia"
                )

        # 3. Correlaciones entre hablantes
        correlations = pd.concat([
            correlations_frame(speaker_level_correlations(run.trial_scores, run.speaker_labels), mode)
            for mode, run in runs.items()
        ], ignore_index=True)

        # 4. Escribir salidas
        results_by_mode = {mode: run.results for mode, run in runs.items()}
        all_results = [result for results in results_by_mode.values() for result in results]
        outputs = OutputSet(Path(command.output_dir))
        manifest = RunManifest(
            command="run",
            config=dict(command.config_snapshot),
            input_digest=digest,
            seed=command.configs[0].seed if command.configs else None,
            version=runtime_versions(),
            stage_timings=timings,
            extra={
                "modes": {
                    mode.value: {
                        "removed": len(run.removal.removed),
                        "retained": len(run.dataset),
                        "speakers": len(run.dataset.speakers),
                        "converged": run.aligned.converged,
                        "iterations": run.aligned.iterations,
                        "explained_ratio": run.model.explained_ratio.tolist(),
                    }
                    for mode, run in runs.items()
                },
            },
        )
        try:
            outputs.csv("metrics.csv", metrics_frame(results_by_mode))
            outputs.json("metrics.json", metrics_payload(results_by_mode))
            outputs.csv("scores.csv", scores_frame(all_results))
            outputs.csv("tippett.csv", tippett_frame(all_results))
            outputs.csv("speaker_correlations.csv", correlations)
            manifest.outputs = [str(path) for path in outputs.written]
            outputs.json("manifest.json", manifest.to_dict())
        except DomainException:
            outputs.discard()
            raise

        return RunOutcome(runs=runs, manifest=manifest)


# =============================================================================
# synth
# =============================================================================

@dataclass
class GenerateSyntheticCommand:
    """Comando: Generar un dataset sintético."""
    spec: SyntheticSpec
    output_path: str
    spec_snapshot: Dict[str, object] = field(default_factory=dict)


@dataclass
class SynthOutcome:
    dataset: SpeakerDataset
    manifest: RunManifest


class GenerateSyntheticUseCase:
    """
    Caso de uso: Generar un dataset sintético jerárquico.

    Responsabilidades:
    1. Muestrear el dataset a partir de la especificación
    2. Escribir el CSV y un manifiesto con la especificación
    """

    def __init__(self, repository: DatasetRepository, event_publisher: EventPublisher):
        self.repository = repository
        self.event_publisher = event_publisher

    def execute(self, command: GenerateSyntheticCommand) -> SynthOutcome:
        """
        Raises:
            InvalidCovarianceError: Si alguna covarianza no es simétrica PSD
            InvalidConfiguration: Si los tamaños no son válidos
        """
        started = datetime.now()
        dataset = generate_synthetic(command.spec)

        output = Path(command.output_path)
        outputs = OutputSet(output.parent)
        manifest = RunManifest(
            command="synth",
            config=dict(command.spec_snapshot),
            input_digest=None,
            seed=command.spec.seed,
            version=runtime_versions(),
        )
        try:
            self.repository.save(dataset, str(output))
            outputs.track(output)
            manifest.extra["output_digest"] = self.repository.digest(str(output))
            manifest.stage_timings["generate"] = (datetime.now() - started).total_seconds()
            manifest.outputs = [str(path) for path in outputs.written]
            outputs.json(_sidecar(output, ".manifest.json"), manifest.to_dict())
        except DomainException:
            outputs.discard()
            raise

        self.event_publisher.publish(StageCompleted(
            occurred_at=datetime.now(),
            stage="synth",
            seconds=manifest.stage_timings["generate"],
        ))
        return SynthOutcome(dataset=dataset, manifest=manifest)
