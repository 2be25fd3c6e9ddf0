"""
Tabla de landmarks - Lectura y escritura del formato CSV ancho.

Una fila por ensayo: columnas de etiquetas (trial_id, speaker, vowel,
repetition, block) más x1, y1, ..., xk, yk en mm.
"""

import io
import re
from typing import Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from ..domain.entities import SpeakerDataset
from ..domain.exceptions import LandmarkParseError, SchemaError, StructureError
from ..domain.factories import DatasetFactory, TrialFactory


# Campo lógico -> nombre de columna en el archivo
DEFAULT_SCHEMA: Dict[str, str] = {
    "trial_id": "trial_id",
    "speaker_id": "speaker",
    "vowel": "vowel",
    "repetition": "repetition",
    "block": "block",
}

_COORDINATE = re.compile(r"^([xy])(\d+)$")


def _landmark_count(columns: List[str]) -> int:
    indices = {"x": set(), "y": set()}
    for column in columns:
        match = _COORDINATE.match(column)
        if match:
            indices[match.group(1)].add(int(match.group(2)))

    if not indices["x"] and not indices["y"]:
        raise StructureError("La tabla no tiene columnas de coordenadas (x1, y1, ...)")
    k_x = max(indices["x"], default=0)
    k_y = max(indices["y"], default=0)
    if k_x != k_y:
        raise StructureError(
            f"Número de landmarks inconsistente: {k_x} columnas x y {k_y} columnas y"
        )
    for j in range(1, k_x + 1):
        for axis in ("x", "y"):
            if j not in indices[axis]:
                raise SchemaError(f"{axis}{j}")
    return k_x


def _parse_int(value: str, row: int, column: str) -> int:
    try:
        number = float(value)
    except ValueError:
        raise LandmarkParseError(row, column, value)
    if not number.is_integer():
        raise LandmarkParseError(row, column, value)
    return int(number)


def parse_landmark_table(
    text: str,
    schema: Optional[Mapping[str, str]] = None,
    source: str = "<texto>",
) -> SpeakerDataset:
    """
    Interpreta una tabla de landmarks en formato CSV ancho.

    Args:
        text: Contenido de la tabla (con encabezado)
        schema: Mapeo campo lógico -> columna (ver DEFAULT_SCHEMA)
        source: Origen, registrado en la procedencia del dataset

    Returns:
        SpeakerDataset con un ensayo por fila, en el orden del archivo

    Raises:
        SchemaError: Si falta una columna requerida
        LandmarkParseError: Si una celda no es numérica (indica la fila, desde 1)
        StructureError: Si el número de landmarks es inconsistente
    """
    columns_for = dict(DEFAULT_SCHEMA)
    columns_for.update(schema or {})

    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise StructureError("La tabla está vacía")
    except pd.errors.ParserError as error:
        raise StructureError(f"La tabla no es un CSV válido: {error}")

    frame.columns = [str(column).strip() for column in frame.columns]
    columns = list(frame.columns)
    for field_name in DEFAULT_SCHEMA:
        if columns_for[field_name] not in columns:
            raise SchemaError(columns_for[field_name])

    k = _landmark_count(columns)
    coordinate_columns = [f"{axis}{j}" for j in range(1, k + 1) for axis in ("x", "y")]

    values = frame[coordinate_columns].apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    invalid = ~np.isfinite(values.to_numpy(dtype=float))
    if invalid.any():
        position, column_index = np.argwhere(invalid)[0]
        column = coordinate_columns[column_index]
        raise LandmarkParseError(int(position) + 1, column, frame[column].iloc[position])
    coordinates = values.to_numpy(dtype=float).reshape(len(frame), k, 2)

    trials = []
    for position, record in enumerate(frame.to_dict(orient="records")):
        row = position + 1
        trials.append(TrialFactory.create(
            trial_id=record[columns_for["trial_id"]],
            speaker_id=record[columns_for["speaker_id"]],
            vowel=record[columns_for["vowel"]],
            repetition=_parse_int(record[columns_for["repetition"]], row, columns_for["repetition"]),
            block=_parse_int(record[columns_for["block"]], row, columns_for["block"]),
            points=coordinates[position],
        ))

    return DatasetFactory.build(trials, provenance={"source": source}, landmark_count=k)


def landmark_frame(dataset: SpeakerDataset) -> pd.DataFrame:
    """DataFrame en el layout ancho con el esquema por defecto."""
    k = dataset.landmark_count
    columns = list(DEFAULT_SCHEMA.values()) + [f"{axis}{j}" for j in range(1, k + 1) for axis in ("x", "y")]
    rows = []
    for trial in dataset.trials:
        row = [trial.trial_id, trial.speaker_id, trial.vowel, trial.repetition, trial.block]
        row.extend(float(value) for point in trial.config.points for value in point)
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def serialize_landmark_table(dataset: SpeakerDataset) -> str:
    """
    Serializa un dataset al CSV ancho: separador coma, punto decimal, finales LF.

    Los flotantes se escriben con su representación más corta que los
    reconstruye exactamente, de modo que leer lo escrito devuelve el mismo dataset.
    """
    buffer = io.StringIO()
    frame = landmark_frame(dataset)
    coordinate_columns = frame.columns[len(DEFAULT_SCHEMA):]
    frame[coordinate_columns] = frame[coordinate_columns].apply(lambda column: column.map(lambda value: repr(float(value))))
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()
