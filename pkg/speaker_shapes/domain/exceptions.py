"""
Excepciones de dominio - Representan violaciones de precondiciones del análisis.

Hay dos familias:
- InvalidInputData: el archivo de entrada no se puede leer o no respeta el esquema
  (la CLI termina con código 2).
- AnalysisPreconditionError: los datos se leyeron bien pero no cumplen las
  condiciones de una operación (la CLI termina con código 3).
"""


class DomainException(Exception):
    """Excepción base para errores de dominio."""
    pass


class InvalidInputData(DomainException):
    """Se lanza cuando los datos de entrada no se pueden interpretar."""
    pass


class AnalysisPreconditionError(DomainException):
    """Se lanza cuando los datos no cumplen la precondición de una operación."""
    pass


class SchemaError(InvalidInputData):
    """Se lanza cuando falta una columna requerida en la tabla de landmarks."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Falta la columna requerida '{column}'")


class LandmarkParseError(InvalidInputData):
    """Se lanza cuando una celda no contiene un valor válido."""

    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"Fila {row}: valor inválido '{value}' en la columna '{column}'"
        )


class StructureError(InvalidInputData):
    """Se lanza cuando la tabla no tiene una estructura de landmarks consistente."""
    pass


class DatasetIOError(InvalidInputData):
    """Se lanza cuando no se puede leer o escribir un archivo de datos."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"No se puede acceder a '{path}': {reason}")


class InvalidTrialData(AnalysisPreconditionError):
    """Se lanza cuando los datos de un ensayo son inválidos."""
    pass


class InsufficientTrialsError(AnalysisPreconditionError):
    """Se lanza cuando un hablante no tiene suficientes ensayos para una operación."""

    def __init__(self, speaker_id: str, count: int, required: int = 2):
        self.speaker_id = speaker_id
        self.count = count
        self.required = required
        super().__init__(
            f"El hablante '{speaker_id}' tiene {count} ensayo(s); se requieren al menos {required}"
        )


class DegenerateConfigurationError(AnalysisPreconditionError):
    """Se lanza cuando una configuración tiene todos sus puntos coincidentes."""

    def __init__(self, label: str = ""):
        self.label = label
        detail = f" ({label})" if label else ""
        super().__init__(f"Configuración degenerada{detail}: tamaño de centroide nulo")


class RankDeficiencyError(AnalysisPreconditionError):
    """Se lanza cuando se piden más componentes que el rango efectivo de los datos."""

    def __init__(self, requested: int, rank: int):
        self.requested = requested
        self.rank = rank
        super().__init__(
            f"Se pidieron {requested} componentes pero el rango efectivo es {rank}"
        )


class ComponentOutOfRangeError(AnalysisPreconditionError):
    """Se lanza cuando se referencia un componente principal inexistente."""

    def __init__(self, pc: int, available: int):
        self.pc = pc
        self.available = available
        super().__init__(
            f"El componente PC{pc} no existe; el modelo tiene {available} componente(s)"
        )


class ZeroVarianceError(AnalysisPreconditionError):
    """Se lanza cuando una variable no tiene varianza."""
    pass


class SingularCovarianceError(AnalysisPreconditionError):
    """Se lanza cuando una matriz de covarianza no es definida positiva."""

    def __init__(self, matrix: str, reason: str = "no es definida positiva"):
        self.matrix = matrix
        super().__init__(f"La matriz de covarianza '{matrix}' {reason}")


class InsufficientReferenceError(AnalysisPreconditionError):
    """Se lanza cuando la población de referencia tiene menos de 3 hablantes."""

    def __init__(self, size: int, minimum: int = 3):
        self.size = size
        self.minimum = minimum
        super().__init__(
            f"La población de referencia tiene {size} hablante(s); se requieren al menos {minimum}"
        )


class SingleLabelError(AnalysisPreconditionError):
    """Se lanza cuando un conjunto de puntajes no contiene ambas etiquetas."""

    def __init__(self, present: str):
        self.present = present
        super().__init__(
            f"El conjunto de puntajes solo contiene comparaciones '{present}'; se requieren ambas etiquetas"
        )


class InvalidCovarianceError(AnalysisPreconditionError):
    """Se lanza cuando una covarianza de especificación no es simétrica semidefinida positiva."""

    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason
        super().__init__(f"Covarianza '{name}' inválida: {reason}")


class InvalidConfiguration(AnalysisPreconditionError):
    """Se lanza cuando un valor de configuración es inválido."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"Configuración inválida en '{key}': {reason}")


class PipelineStageError(DomainException):
    """Se lanza cuando falla una etapa del experimento; conserva la causa original."""

    def __init__(self, stage: str, cause: DomainException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Falló la etapa '{stage}': {cause}")

    @property
    def is_input_error(self) -> bool:
        return isinstance(self.cause, InvalidInputData)
