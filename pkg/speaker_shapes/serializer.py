"""Serializadores de configuración para los comandos de la app.

Validan las secciones de los archivos de configuración (``experiment``,
``population`` y ``synthetic``) y las convierten en objetos de dominio.
Cualquier error se informa como :class:`InvalidConfiguration` con la clave
punteada que lo causó.
"""

from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from rest_framework import serializers

from .domain.entities import DEFAULT_FEATURE_SETS, AlignmentMode, ExperimentConfig, SyntheticSpec
from .domain.exceptions import DomainException, InvalidConfiguration
from .domain.synthetic import validate_spec


class ModeField(serializers.Field):
    """Modo de alineamiento: ``size-and-shape`` / ``shape`` (o el valor interno)."""

    default_error_messages = {"invalid": "Modo desconocido '{value}'."}

    def to_internal_value(self, data) -> AlignmentMode:
        try:
            return AlignmentMode.parse(str(data))
        except ValueError:
            self.fail("invalid", value=data)

    def to_representation(self, value) -> str:
        return AlignmentMode(value).cli_name


class ModesField(serializers.Field):
    """Lista de modos separados por coma, sin repetidos."""

    default_error_messages = {
        "invalid": "Modo desconocido '{value}'.",
        "duplicate": "El modo '{value}' aparece más de una vez.",
        "empty": "Se requiere al menos un modo.",
    }

    def to_internal_value(self, data) -> Tuple[AlignmentMode, ...]:
        modes = []
        for item in str(data).split(","):
            if not item.strip():
                continue
            try:
                mode = AlignmentMode.parse(item)
            except ValueError:
                self.fail("invalid", value=item.strip())
            if mode in modes:
                self.fail("duplicate", value=item.strip())
            modes.append(mode)
        if not modes:
            self.fail("empty")
        return tuple(modes)

    def to_representation(self, value) -> str:
        return ",".join(AlignmentMode(mode).cli_name for mode in value)


class FeatureSetsField(serializers.Field):
    """Subconjuntos de PCs: ``1;2;3;1+2;1+3;2+3;1+2+3``."""

    default_error_messages = {
        "invalid": "Subconjunto de PCs inválido '{value}'.",
        "empty": "Se requiere al menos un subconjunto de PCs.",
    }

    def to_internal_value(self, data) -> Tuple[Tuple[int, ...], ...]:
        feature_sets = []
        for item in str(data).split(";"):
            if not item.strip():
                continue
            try:
                indices = tuple(int(part) for part in item.split("+"))
            except ValueError:
                self.fail("invalid", value=item.strip())
            if any(index < 1 for index in indices) or len(set(indices)) != len(indices):
                self.fail("invalid", value=item.strip())
            feature_sets.append(indices)
        if not feature_sets:
            self.fail("empty")
        return tuple(feature_sets)

    def to_representation(self, value) -> str:
        return ";".join("+".join(str(index) for index in feature_set) for feature_set in value)


class MatrixField(serializers.Field):
    """Matriz cuadrada: filas separadas por ``;`` y valores por ``,``."""

    default_error_messages = {
        "invalid": "Valor no numérico '{value}'.",
        "ragged": "Las filas de la matriz no tienen la misma longitud.",
        "not_square": "La matriz debe ser cuadrada ({rows}×{columns}).",
    }

    def to_internal_value(self, data) -> np.ndarray:
        rows = []
        for row in str(data).split(";"):
            if not row.strip():
                continue
            values = []
            for value in row.split(","):
                try:
                    values.append(float(value))
                except ValueError:
                    self.fail("invalid", value=value.strip())
            rows.append(values)
        if len({len(row) for row in rows}) != 1:
            self.fail("ragged")
        matrix = np.asarray(rows, dtype=float)
        if matrix.shape[0] != matrix.shape[1]:
            self.fail("not_square", rows=matrix.shape[0], columns=matrix.shape[1])
        return matrix

    def to_representation(self, value) -> str:
        return ";".join(",".join(repr(float(item)) for item in row) for row in np.atleast_2d(value))


class StrictSerializer(serializers.Serializer):
    """Serializer que rechaza claves desconocidas."""

    def validate(self, attrs):
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: "Clave desconocida." for key in unknown})
        return attrs


class ExperimentSerializer(StrictSerializer):
    """Sección ``experiment`` de un archivo de configuración de ``run``."""

    input = serializers.CharField(required=False, allow_blank=False)
    output = serializers.CharField(required=True, allow_blank=False)
    mode = ModeField(required=False)
    modes = ModesField(required=False)
    seed = serializers.IntegerField(required=False, default=0, min_value=0)
    feature_sets = FeatureSetsField(required=False, default=DEFAULT_FEATURE_SETS)
    mad_threshold = serializers.FloatField(required=False)
    q = serializers.IntegerField(required=False, default=3, min_value=1)
    calibration = serializers.ChoiceField(
        choices=[ExperimentConfig.POOLED, ExperimentConfig.LEAVE_PAIR_OUT],
        required=False,
        default=ExperimentConfig.POOLED,
    )
    pca_fit = serializers.ChoiceField(
        choices=[ExperimentConfig.POOLED, ExperimentConfig.FIRST_HALF],
        required=False,
        default=ExperimentConfig.POOLED,
    )
    workers = serializers.IntegerField(required=False, min_value=1)

    def validate_mad_threshold(self, value: float) -> float:
        if not value > 0:
            raise serializers.ValidationError("Debe ser positivo.")
        return value

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if "mode" in attrs and "modes" in attrs:
            raise serializers.ValidationError({"modes": "Use 'mode' o 'modes', no ambos."})
        for feature_set in attrs["feature_sets"]:
            for index in feature_set:
                if index > attrs["q"]:
                    raise serializers.ValidationError({
                        "feature_sets": f"PC{index} excede el número de componentes q={attrs['q']}."
                    })
        return attrs


class PopulationOptionsSerializer(StrictSerializer):
    """Sección ``population``: variantes de la población de referencia."""

    subtract_within = serializers.BooleanField(required=False, default=False)
    bandwidth = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate_bandwidth(self, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0:
            raise serializers.ValidationError("Debe ser positivo.")
        return value


class SyntheticSpecSerializer(StrictSerializer):
    """Sección ``synthetic``: especificación de un dataset sintético."""

    landmark_count = serializers.IntegerField(min_value=3)
    n_speakers = serializers.IntegerField(min_value=4)
    n_trials = serializers.IntegerField(min_value=4)
    n_vowels = serializers.IntegerField(required=False, default=4, min_value=1)
    between_cov = MatrixField()
    within_cov = MatrixField()
    vowel_cov = MatrixField(required=False)
    landmark_noise_sd = serializers.FloatField(required=False, default=0.0, min_value=0.0)
    rotation_sd = serializers.FloatField(required=False, default=0.1, min_value=0.0)
    translation_sd = serializers.FloatField(required=False, default=2.0, min_value=0.0)
    scale_sd = serializers.FloatField(required=False, default=0.0, min_value=0.0)
    seed = serializers.IntegerField(required=False, default=0, min_value=0)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        try:
            validate_spec(SyntheticSpec(**attrs))
        except DomainException as error:
            raise serializers.ValidationError(str(error))
        return attrs


def _first_error(errors) -> Tuple[Optional[str], str]:
    """Primera (clave, mensaje) de la estructura de errores de DRF."""
    if isinstance(errors, Mapping):
        for key, value in errors.items():
            nested_key, message = _first_error(value)
            if key == "non_field_errors":
                return nested_key, message
            return key, message
    if isinstance(errors, (list, tuple)) and errors:
        return _first_error(errors[0])
    return None, str(errors)


def validated(serializer_class, section: str, values: Mapping[str, str]) -> Dict[str, object]:
    """
    Valida una sección y devuelve sus datos convertidos.

    Raises:
        InvalidConfiguration: Con la clave punteada del primer error
    """
    serializer = serializer_class(data=dict(values))
    if not serializer.is_valid():
        key, message = _first_error(serializer.errors)
        raise InvalidConfiguration(f"{section}.{key}" if key else section, message)
    return dict(serializer.validated_data)


def synthetic_spec(values: Mapping[str, str]) -> SyntheticSpec:
    """SyntheticSpec a partir de la sección ``synthetic``."""
    return SyntheticSpec(**validated(SyntheticSpecSerializer, "synthetic", values))


def experiment_configs(
    experiment: Mapping[str, object],
    population: Mapping[str, object],
    defaults: Optional[Mapping[str, object]] = None,
) -> List[ExperimentConfig]:
    """
    Una ExperimentConfig por modo a partir de las secciones ya validadas.

    Args:
        experiment: Datos validados de ``experiment``
        population: Datos validados de ``population``
        defaults: Valores de entorno (``MAD_THRESHOLD``, ``MAX_WORKERS``)
    """
    defaults = defaults or {}
    modes = experiment.get("modes") or (experiment.get("mode", AlignmentMode.SIZE_AND_SHAPE),)
    mad_threshold = experiment.get("mad_threshold")
    if mad_threshold is None:
        mad_threshold = defaults.get("MAD_THRESHOLD", 3.5)
    workers = experiment.get("workers") or defaults.get("MAX_WORKERS", 1)
    return [
        ExperimentConfig(
            mode=mode,
            feature_sets=tuple(experiment["feature_sets"]),
            mad_threshold=float(mad_threshold),
            seed=experiment["seed"],
            calibration=experiment["calibration"],
            q=experiment["q"],
            pca_fit=experiment["pca_fit"],
            subtract_within=population.get("subtract_within", False),
            bandwidth=population.get("bandwidth"),
            workers=int(workers),
        )
        for mode in modes
    ]
