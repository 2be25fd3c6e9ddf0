"""
Tests unitarios de casos de uso (Application Layer).
Usan mocks para el repositorio y el event publisher; las salidas se escriben en tmp_path.
"""

import json
from unittest.mock import Mock

import numpy as np
import pandas as pd
import pytest

from speaker_shapes.application.use_cases import (
    AnalyseShapesCommand,
    AnalyseShapesUseCase,
    FilterTrialsCommand,
    FilterTrialsUseCase,
    GenerateSyntheticCommand,
    GenerateSyntheticUseCase,
    RunExperimentCommand,
    RunExperimentUseCase,
)
from speaker_shapes.domain.entities import AlignmentMode, ExperimentConfig
from speaker_shapes.domain.event_publisher import EventPublisher
from speaker_shapes.domain.events import ShapesAligned, StageCompleted, TrialsFiltered
from speaker_shapes.domain.exceptions import (
    ComponentOutOfRangeError,
    InvalidConfiguration,
    InvalidCovarianceError,
    PipelineStageError,
)
from speaker_shapes.domain.repositories import DatasetRepository
from speaker_shapes.infrastructure.repository import CsvDatasetRepository

from ..builders import dataset_from, diagonal_spec, random_configs


def _small_spec(**overrides):
    options = {
        "landmark_count": 7,
        "n_speakers": 8,
        "n_trials": 8,
        "landmark_noise_sd": 0.05,
        "seed": 3,
    }
    options.update(overrides)
    return diagonal_spec([9.0, 4.0, 1.0], [1.0, 1.0, 0.5], **options)


@pytest.fixture
def mock_repo():
    repo = Mock(spec=DatasetRepository)
    repo.digest.return_value = "abc"
    return repo


@pytest.fixture
def mock_publisher():
    return Mock(spec=EventPublisher)


class TestFilterTrialsUseCase:
    """Tests del caso de uso FilterTrials."""

    def test_filter_saves_dataset_and_writes_report(self, mock_repo, mock_publisher, small_csv, tmp_path):
        """Filtrar guarda el dataset, escribe el reporte y el manifiesto y publica el evento."""
        mock_repo.load.return_value = CsvDatasetRepository().load(str(small_csv))
        output = tmp_path / "clean.csv"

        outcome = FilterTrialsUseCase(mock_repo, mock_publisher).execute(
            FilterTrialsCommand(input_path="in.csv", output_path=str(output), threshold=3.5)
        )

        mock_repo.load.assert_called_once_with("in.csv")
        saved, path = mock_repo.save.call_args[0]
        assert path == str(output)
        assert len(saved) == 12
        assert outcome.report.removed == ()

        removals = json.loads((tmp_path / "clean.removals.json").read_text(encoding="utf-8"))
        assert removals["removed"] == []
        assert removals["fraction"] == 0.0

        manifest = json.loads((tmp_path / "clean.manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "filter"
        assert manifest["input_digest"] == "abc"
        assert manifest["config"]["threshold"] == 3.5
        assert str(output) in manifest["outputs"]

        event = mock_publisher.publish.call_args[0][0]
        assert isinstance(event, TrialsFiltered)
        assert (event.removed, event.total) == (0, 12)

    def test_invalid_threshold_writes_nothing(self, mock_repo, mock_publisher, small_csv, tmp_path):
        """Un umbral no positivo falla antes de escribir."""
        mock_repo.load.return_value = CsvDatasetRepository().load(str(small_csv))

        with pytest.raises(InvalidConfiguration):
            FilterTrialsUseCase(mock_repo, mock_publisher).execute(
                FilterTrialsCommand(input_path="in.csv", output_path=str(tmp_path / "clean.csv"), threshold=0.0)
            )

        mock_repo.save.assert_not_called()
        mock_publisher.publish.assert_not_called()
        assert list(tmp_path.iterdir()) == []


class TestAnalyseShapesUseCase:
    """Tests del caso de uso AnalyseShapes."""

    def test_writes_tables_and_summary(self, mock_repo, mock_publisher, tmp_path):
        mock_repo.load.return_value = dataset_from({
            "A": random_configs(6, 5, seed=1),
            "B": random_configs(6, 5, seed=2, spread=2.0),
        })

        outcome = AnalyseShapesUseCase(mock_repo, mock_publisher).execute(
            AnalyseShapesCommand(input_path="in.csv", output_dir=str(tmp_path / "shapes"), q=3)
        )

        written = sorted(path.name for path in (tmp_path / "shapes").iterdir())
        assert written == [
            "aligned_shapes.csv",
            "effect_shapes.csv",
            "explained_variance.csv",
            "manifest.json",
            "mean_shape.csv",
            "pc_loadings.csv",
            "pc_scores.csv",
            "speaker_mean_shapes.csv",
            "summary.json",
        ]
        means = pd.read_csv(tmp_path / "shapes" / "speaker_mean_shapes.csv", keep_default_na=False)
        assert list(means.columns) == ["scope", "speaker", "landmark", "x", "y"]
        assert means.groupby("scope").size().to_dict() == {"overall": 5, "speaker": 10}
        assert set(means.loc[means["scope"] == "overall", "speaker"]) == {""}

        assert outcome.model.q == 3
        assert outcome.summary["n_trials"] == 12
        assert outcome.summary["extreme_speakers"]["pc"] == 2
        assert isinstance(mock_publisher.publish.call_args[0][0], ShapesAligned)


class TestRunExperimentUseCase:
    """Tests del caso de uso RunExperiment."""

    def test_runs_on_synthetic_section(self, mock_repo, mock_publisher, tmp_path):
        """Sin archivo de entrada el dataset se genera en memoria."""
        config = ExperimentConfig(
            mode=AlignmentMode.SIZE_AND_SHAPE,
            feature_sets=((1,), (1, 2)),
            seed=7,
        )

        outcome = RunExperimentUseCase(mock_repo, mock_publisher).execute(RunExperimentCommand(
            input_path=None,
            output_dir=str(tmp_path / "run"),
            configs=[config],
            synthetic=_small_spec(),
        ))

        mock_repo.load.assert_not_called()
        results = outcome.results[AlignmentMode.SIZE_AND_SHAPE]
        assert [result.label for result in results] == ["PC1", "PC1+2"]
        assert all(len(result.raw_scores) == 64 for result in results)

        written = {path.name for path in (tmp_path / "run").iterdir()}
        assert written == {
            "metrics.csv", "metrics.json", "scores.csv", "tippett.csv",
            "speaker_correlations.csv", "manifest.json",
        }
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 7
        assert len(manifest["input_digest"]) == 64
        assert "size_and_shape:score:PC1" in manifest["stage_timings"]

    def test_requires_input_or_synthetic(self, mock_repo, mock_publisher, tmp_path):
        with pytest.raises(InvalidConfiguration, match="experiment.input"):
            RunExperimentUseCase(mock_repo, mock_publisher).execute(RunExperimentCommand(
                input_path=None,
                output_dir=str(tmp_path / "run"),
                configs=[ExperimentConfig()],
            ))

    def test_failed_stage_leaves_no_outputs(self, mock_repo, mock_publisher, tmp_path):
        config = ExperimentConfig(feature_sets=((4,),), q=3)

        with pytest.raises(PipelineStageError) as excinfo:
            RunExperimentUseCase(mock_repo, mock_publisher).execute(RunExperimentCommand(
                input_path=None,
                output_dir=str(tmp_path / "run"),
                configs=[config],
                synthetic=_small_spec(),
            ))

        assert excinfo.value.stage == "config"
        assert isinstance(excinfo.value.cause, ComponentOutOfRangeError)
        assert not (tmp_path / "run").exists()


class TestGenerateSyntheticUseCase:
    """Tests del caso de uso GenerateSynthetic."""

    def test_saves_dataset_and_manifest(self, mock_repo, mock_publisher, tmp_path):
        output = tmp_path / "synthetic.csv"
        spec = _small_spec(seed=5)

        outcome = GenerateSyntheticUseCase(mock_repo, mock_publisher).execute(
            GenerateSyntheticCommand(spec=spec, output_path=str(output), spec_snapshot={"seed": 5})
        )

        saved, path = mock_repo.save.call_args[0]
        assert path == str(output)
        assert saved is outcome.dataset
        assert len(saved) == 64

        manifest = json.loads((tmp_path / "synthetic.manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 5
        assert manifest["config"] == {"seed": 5}
        assert manifest["output_digest"] == "abc"

        event = mock_publisher.publish.call_args[0][0]
        assert isinstance(event, StageCompleted)
        assert event.stage == "synth"

    def test_invalid_spec_writes_nothing(self, mock_repo, mock_publisher, tmp_path):
        spec = _small_spec()
        spec.within_cov = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])

        with pytest.raises(InvalidCovarianceError, match="semidefinida"):
            GenerateSyntheticUseCase(mock_repo, mock_publisher).execute(
                GenerateSyntheticCommand(spec=spec, output_path=str(tmp_path / "synthetic.csv"))
            )

        mock_repo.save.assert_not_called()
