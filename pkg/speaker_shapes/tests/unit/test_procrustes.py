"""
Tests unitarios del motor de formas: GPA, espacio tangente, PCA y correlación.
"""

import logging

import numpy as np
import pytest

from speaker_shapes.domain.entities import AlignmentMode
from speaker_shapes.domain.exceptions import (
    AnalysisPreconditionError,
    ComponentOutOfRangeError,
    DegenerateConfigurationError,
    RankDeficiencyError,
    StructureError,
    ZeroVarianceError,
)
from speaker_shapes.domain.procrustes import (
    centroid_size,
    effect_shapes,
    fit_pca,
    optimal_rotation,
    pearson_correlation,
    procrustes_align,
    procrustes_distance,
    project,
    reconstruct,
    tangent_coordinates,
)

from ..builders import TRIANGLE, random_configs, rigid_motion


# Tres configuraciones k=4 con orientaciones parecidas
GRID_FIXTURE = np.array([
    [[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]],
    [[1.0, 1.0], [5.0, 2.0], [4.0, 5.0], [0.0, 4.0]],
    [[2.0, 0.0], [6.0, 1.5], [4.5, 4.0], [1.0, 3.5]],
])


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _pairwise_distances(aligned: np.ndarray) -> np.ndarray:
    n = aligned.shape[0]
    return np.array([
        [np.linalg.norm(aligned[i] - aligned[j]) for j in range(n)]
        for i in range(n)
    ])


class TestPrimitives:
    """Tests de tamaño de centroide, rotación óptima y distancia."""

    def test_centroid_size(self):
        config = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
        assert centroid_size(config) == pytest.approx(np.sqrt(150.0) / 3.0)

    def test_centroid_size_degenerate(self):
        with pytest.raises(DegenerateConfigurationError):
            centroid_size(np.ones((4, 2)))

    def test_optimal_rotation_recovers_known_rotation(self):
        source = TRIANGLE - TRIANGLE.mean(axis=0)
        angle = 0.7
        expected = np.array([[np.cos(angle), np.sin(angle)], [-np.sin(angle), np.cos(angle)]])

        rotation = optimal_rotation(source, source @ expected)

        np.testing.assert_allclose(rotation, expected, atol=1e-12)

    def test_optimal_rotation_never_reflects(self):
        source = TRIANGLE - TRIANGLE.mean(axis=0)
        mirrored = source * np.array([-1.0, 1.0])

        rotation = optimal_rotation(source, mirrored)

        assert np.linalg.det(rotation) == pytest.approx(1.0)

    def test_distance_ignores_rigid_motion(self):
        moved = rigid_motion(TRIANGLE, 1.1, [40.0, -7.0])
        assert procrustes_distance(TRIANGLE, moved) == pytest.approx(0.0, abs=1e-10)

    def test_distance_with_scale_ignores_size(self):
        moved = rigid_motion(TRIANGLE, -0.4, [1.0, 2.0], scale=3.0)
        assert procrustes_distance(TRIANGLE, moved) > 1.0
        assert procrustes_distance(TRIANGLE, moved, scale=True) == pytest.approx(0.0, abs=1e-10)


class TestProcrustesAlign:
    """Tests del alineamiento de Procrustes generalizado."""

    @pytest.mark.parametrize("mode", list(AlignmentMode))
    def test_invariant_to_rigid_motions(self, mode):
        rng = np.random.default_rng(5)
        configs = random_configs(30, 6, seed=1)
        moved = [
            rigid_motion(
                config,
                rng.uniform(-np.pi, np.pi),
                rng.normal(0.0, 50.0, size=2),
                scale=rng.uniform(0.5, 2.0) if mode is AlignmentMode.SHAPE_ONLY else 1.0,
            )
            for config in configs
        ]

        original = procrustes_align(configs, mode=mode)
        transformed = procrustes_align(moved, mode=mode)

        np.testing.assert_allclose(
            _pairwise_distances(original.aligned),
            _pairwise_distances(transformed.aligned),
            atol=1e-6,
        )

    def test_matches_rotation_grid_search(self):
        """Ninguna rotación vecina (paso 1e-4 rad) de la 2.ª y 3.ª configuración mejora el objetivo."""
        result = procrustes_align(GRID_FIXTURE, mode=AlignmentMode.SIZE_AND_SHAPE)
        centered = GRID_FIXTURE - GRID_FIXTURE.mean(axis=1, keepdims=True)
        angles = [np.arctan2(rotation[1, 0], rotation[0, 0]) for rotation in result.rotations]
        steps = np.arange(-50, 51) * 1e-4

        first = centered[0] @ _rotation(angles[0])
        second = np.stack([centered[1] @ _rotation(angles[1] + step) for step in steps])[:, None]
        third = np.stack([centered[2] @ _rotation(angles[2] + step) for step in steps])[None, :]
        means = (first + second + third) / 3.0
        objective = sum(np.sum((shapes - means) ** 2, axis=(-2, -1)) for shapes in (first, second, third))
        best = np.unravel_index(np.argmin(objective), objective.shape)

        assert best == (50, 50)
        assert objective[best] == pytest.approx(result.objective_history[-1], abs=1e-9)
        np.testing.assert_allclose(result.mean_shape, means[best], atol=1e-8)

    def test_rotations_are_proper(self):
        result = procrustes_align(random_configs(20, 5, seed=2))
        for rotation in result.rotations:
            assert np.linalg.det(rotation) == pytest.approx(1.0)
            np.testing.assert_allclose(rotation @ rotation.T, np.eye(2), atol=1e-12)

    def test_objective_never_increases(self):
        result = procrustes_align(random_configs(25, 7, seed=3, spread=3.0))

        history = np.asarray(result.objective_history)

        assert result.converged
        assert np.all(np.diff(history) <= 1e-9 * history[0])

    def test_size_and_shape_preserves_centroid_size(self):
        configs = random_configs(10, 5, seed=4)

        result = procrustes_align(configs, mode=AlignmentMode.SIZE_AND_SHAPE)

        for config, aligned in zip(configs, result.aligned):
            assert centroid_size(aligned) == pytest.approx(centroid_size(config))
        np.testing.assert_allclose(result.centroid_sizes, [centroid_size(c) for c in configs])

    def test_shape_only_has_unit_size(self):
        result = procrustes_align(random_configs(10, 5, seed=4), mode=AlignmentMode.SHAPE_ONLY)
        for aligned in result.aligned:
            assert centroid_size(aligned) == pytest.approx(1.0)

    def test_aligned_shapes_are_centered(self):
        result = procrustes_align(random_configs(10, 5, seed=6))
        np.testing.assert_allclose(result.aligned.mean(axis=1), 0.0, atol=1e-10)

    def test_max_iter_reports_non_convergence(self, caplog):
        with caplog.at_level(logging.WARNING, logger="speaker_shapes"):
            result = procrustes_align(random_configs(10, 5, seed=7, spread=3.0), max_iter=1)

        assert not result.converged
        assert result.iterations == 1
        assert "no convergió" in caplog.text

    def test_requires_two_configs(self):
        with pytest.raises(AnalysisPreconditionError, match="al menos 2"):
            procrustes_align([TRIANGLE])

    def test_mixed_landmark_counts(self):
        with pytest.raises(StructureError):
            procrustes_align([TRIANGLE, np.vstack([TRIANGLE, [[1.0, 1.0]]])])

    def test_degenerate_config_names_trial(self):
        with pytest.raises(DegenerateConfigurationError, match="t2"):
            procrustes_align([TRIANGLE, np.zeros((3, 2))], trial_ids=["t1", "t2"])


class TestTangentCoordinates:
    """Tests de la proyección al espacio tangente."""

    def test_size_and_shape_residuals_sum_to_zero(self):
        aligned = procrustes_align(random_configs(12, 5, seed=8))

        tangent = tangent_coordinates(aligned)

        assert tangent.shape == (12, 10)
        np.testing.assert_allclose(tangent.sum(axis=0), 0.0, atol=1e-9)

    def test_shape_only_is_orthogonal_to_mean(self):
        aligned = procrustes_align(random_configs(12, 5, seed=8), mode=AlignmentMode.SHAPE_ONLY)

        tangent = tangent_coordinates(aligned)

        np.testing.assert_allclose(tangent @ aligned.mean_shape.reshape(-1), 0.0, atol=1e-12)


class TestFitPca:
    """Tests del PCA en el espacio tangente."""

    @pytest.fixture
    def data(self):
        rng = np.random.default_rng(11)
        raw = rng.normal(size=(50, 4)) @ np.diag([3.0, 2.0, 1.0, 0.5])
        return raw - raw.mean(axis=0)

    def test_components_are_orthonormal(self, data):
        model = fit_pca(data, 3)
        np.testing.assert_allclose(model.components.T @ model.components, np.eye(3), atol=1e-8)

    def test_full_decomposition_matches_trace(self, data):
        model = fit_pca(data, 4)

        covariance = np.cov(data, rowvar=False, ddof=1)

        assert model.variances.sum() == pytest.approx(np.trace(covariance), rel=1e-8)
        assert model.explained_ratio.sum() == pytest.approx(1.0)
        assert np.all(np.diff(model.variances) <= 0)

    def test_largest_loading_is_positive(self, data):
        model = fit_pca(-data, 3)
        for column in model.components.T:
            assert column[np.argmax(np.abs(column))] > 0

    def test_scores_are_projections(self, data):
        model = fit_pca(data, 2)
        np.testing.assert_allclose(model.scores, project(model, data))
        np.testing.assert_allclose(model.scores.var(axis=0, ddof=1), model.variances, rtol=1e-8)

    def test_rank_one_data(self):
        rng = np.random.default_rng(2)
        direction = np.array([1.0, 2.0, -1.0, 0.5]) / np.linalg.norm([1.0, 2.0, -1.0, 0.5])
        data = np.outer(rng.normal(size=30), direction)

        model = fit_pca(data, 1)

        assert model.explained_ratio[0] == pytest.approx(1.0, abs=1e-10)
        assert model.effective_rank == 1
        with pytest.raises(RankDeficiencyError) as excinfo:
            fit_pca(data, 2)
        assert excinfo.value.rank == 1

    @pytest.mark.parametrize("q", [0, 5])
    def test_q_out_of_bounds(self, data, q):
        with pytest.raises(AnalysisPreconditionError):
            fit_pca(data, q)

    def test_q_must_be_below_trial_count(self):
        with pytest.raises(AnalysisPreconditionError, match="ensayos"):
            fit_pca(np.eye(3), 3)

    def test_full_rank_reconstruction_recovers_aligned_shapes(self):
        aligned = procrustes_align(random_configs(20, 4, seed=12))
        tangent = tangent_coordinates(aligned)

        model = fit_pca(tangent, 5, aligned.mean_shape.reshape(-1))

        np.testing.assert_allclose(reconstruct(model, model.scores), aligned.aligned, atol=1e-6)
        np.testing.assert_allclose(reconstruct(model, np.zeros(5))[0], aligned.mean_shape)


class TestEffectShapes:
    """Tests de las formas de efecto de cada componente."""

    def test_effect_shape_offsets(self):
        aligned = procrustes_align(random_configs(20, 5, seed=13))
        model = fit_pca(tangent_coordinates(aligned), 2, aligned.mean_shape.reshape(-1))

        low, high = effect_shapes(model, 2, (-3.0, 3.0))

        expected = 3.0 * np.sqrt(model.variances[1]) * model.components[:, 1]
        np.testing.assert_allclose(high.shape.reshape(-1) - model.mean_vector, expected)
        np.testing.assert_allclose(low.shape.reshape(-1) - model.mean_vector, -expected)
        assert (high.pc_index, high.sd_multiple) == (2, 3.0)

    @pytest.mark.parametrize("pc", [0, 3])
    def test_component_out_of_range(self, pc):
        aligned = procrustes_align(random_configs(20, 5, seed=13))
        model = fit_pca(tangent_coordinates(aligned), 2)
        with pytest.raises(ComponentOutOfRangeError):
            effect_shapes(model, pc, (3.0,))


class TestPearsonCorrelation:
    """Tests de la correlación de Pearson."""

    def test_known_value(self):
        r, p = pearson_correlation([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
        assert r == pytest.approx(0.8)
        assert p == pytest.approx(0.1041, abs=1e-3)

    def test_perfect_correlation(self):
        r, p = pearson_correlation([1, 2, 3], [2, 4, 6])
        assert r == pytest.approx(1.0)
        assert p == 0.0

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceError):
            pearson_correlation([1, 1, 1], [1, 2, 3])

    def test_requires_three_observations(self):
        with pytest.raises(AnalysisPreconditionError, match="al menos 3"):
            pearson_correlation([1, 2], [2, 1])
