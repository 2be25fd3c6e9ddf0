"""
Tests de integración de los resúmenes por hablante: correlaciones entre
hablantes, formas medias y hablantes extremos sobre formas alineadas.
"""

import math

import numpy as np
import pytest

from speaker_shapes.application.harness import (
    extreme_speakers,
    speaker_level_correlations,
    speaker_mean_shapes,
)
from speaker_shapes.domain.exceptions import AnalysisPreconditionError, ComponentOutOfRangeError, InvalidConfiguration
from speaker_shapes.domain.procrustes import procrustes_align
from speaker_shapes.domain.synthetic import generate_synthetic

from ..builders import dataset_from, diagonal_spec, random_configs


LABELS = ["a", "a", "b", "b", "c", "c"]

# Medias por hablante (1, 2), (2, 4), (3, 6); desvíos iguales en todos
SCORES = np.array([
    [0.0, 1.0], [2.0, 3.0],
    [1.0, 3.0], [3.0, 5.0],
    [2.0, 5.0], [4.0, 7.0],
])


class TestSpeakerLevelCorrelations:
    """Tests de las correlaciones entre estadísticos por hablante."""

    def test_mean_and_sd_entries(self):
        mean, sd = speaker_level_correlations(SCORES, LABELS)

        assert (mean.pc_i, mean.pc_j, mean.statistic) == (1, 2, "mean")
        assert mean.r == pytest.approx(1.0)
        assert not mean.degenerate

        assert sd.statistic == "sd"
        assert sd.degenerate
        assert math.isnan(sd.r)

    def test_one_entry_per_pair_and_statistic(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=(20, 4))
        labels = np.repeat(["a", "b", "c", "d", "e"], 4)

        entries = speaker_level_correlations(scores, labels)

        assert len(entries) == 12
        assert [(e.pc_i, e.pc_j) for e in entries[:6]] == [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
        assert all(-1.0 <= e.r <= 1.0 for e in entries)

    def test_singleton_speaker_makes_sd_degenerate(self):
        scores = np.vstack([SCORES, [[9.0, 1.0]]])
        labels = LABELS + ["d"]

        entries = speaker_level_correlations(scores, labels, statistics=("sd",))

        assert entries[0].degenerate

    def test_requires_three_speakers(self):
        with pytest.raises(AnalysisPreconditionError, match="3 hablantes"):
            speaker_level_correlations(SCORES[:4], LABELS[:4])

    def test_unknown_statistic(self):
        with pytest.raises(InvalidConfiguration, match="statistics"):
            speaker_level_correlations(SCORES, LABELS, statistics=("median",))


class TestExtremeSpeakers:
    """Tests de la selección de hablantes extremos."""

    def test_highest_and_lowest_mean(self):
        assert extreme_speakers(SCORES, LABELS, 2) == ("c", "a")

    def test_pc_out_of_range(self):
        with pytest.raises(ComponentOutOfRangeError):
            extreme_speakers(SCORES, LABELS, 3)


class TestSpeakerMeanShapes:
    """Tests de las formas medias por hablante."""

    @pytest.fixture(scope="class")
    def aligned_with_labels(self):
        dataset = generate_synthetic(diagonal_spec(
            [4.0, 1.0], [0.5, 0.5], landmark_count=6, n_speakers=5, n_trials=4, landmark_noise_sd=0.05,
        ))
        aligned = procrustes_align([trial.config for trial in dataset.trials], trial_ids=dataset.trial_ids)
        return aligned, dataset.speaker_labels()

    def test_matches_group_average(self, aligned_with_labels):
        aligned, labels = aligned_with_labels

        shapes = speaker_mean_shapes(aligned, labels)

        for speaker in dict.fromkeys(labels.tolist()):
            members = [aligned.aligned[i] for i, label in enumerate(labels) if label == speaker]
            np.testing.assert_allclose(shapes.by_speaker[speaker], sum(members) / len(members), atol=1e-12)
        np.testing.assert_allclose(shapes.overall, aligned.aligned.mean(axis=0), atol=1e-12)

    def test_restricted_speakers_keep_overall(self, aligned_with_labels):
        aligned, labels = aligned_with_labels

        shapes = speaker_mean_shapes(aligned, labels, speakers=["S2"])

        assert list(shapes.by_speaker) == ["S2"]
        np.testing.assert_allclose(shapes.overall, aligned.aligned.mean(axis=0), atol=1e-12)

    def test_speaker_named_overall_is_kept(self):
        """Un hablante llamado ``overall`` no pisa la media general."""
        dataset = dataset_from({
            "overall": random_configs(3, 4, seed=1),
            "B": random_configs(3, 4, seed=2, spread=3.0),
        })
        aligned = procrustes_align([trial.config for trial in dataset.trials])
        labels = dataset.speaker_labels()

        shapes = speaker_mean_shapes(aligned, labels)

        assert list(shapes.by_speaker) == ["overall", "B"]
        np.testing.assert_allclose(shapes.by_speaker["overall"], aligned.aligned[:3].mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(shapes.overall, aligned.aligned.mean(axis=0), atol=1e-12)
        assert not np.allclose(shapes.by_speaker["overall"], shapes.overall)

    def test_mirrored_speakers_average_midway(self):
        base = random_configs(1, 5, seed=4, spread=0.0)[0]
        offset = np.zeros_like(base)
        offset[:, 1] = np.linspace(-1.0, 1.0, base.shape[0])
        dataset = dataset_from({"A": [base + offset] * 2, "B": [base - offset] * 2})
        aligned = procrustes_align([trial.config for trial in dataset.trials])

        shapes = speaker_mean_shapes(aligned, dataset.speaker_labels())

        midway = (shapes.by_speaker["A"] + shapes.by_speaker["B"]) / 2.0
        np.testing.assert_allclose(shapes.overall, midway, atol=1e-9)

    def test_label_count_must_match(self, aligned_with_labels):
        aligned, labels = aligned_with_labels
        with pytest.raises(AnalysisPreconditionError, match="etiquetas"):
            speaker_mean_shapes(aligned, labels[:-1])

    def test_unknown_speaker(self, aligned_with_labels):
        aligned, labels = aligned_with_labels
        with pytest.raises(AnalysisPreconditionError, match="'S9'"):
            speaker_mean_shapes(aligned, labels, speakers=["S9"])
