"""
Exportadores - Tablas CSV y documentos JSON de resultados.

Todos los CSV usan coma como separador, punto decimal, UTF-8 y finales LF, de
modo que dos corridas idénticas producen los mismos bytes.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..domain.entities import (
    AlignedShapeSet,
    AlignmentMode,
    CorrelationEntry,
    EffectShape,
    PCModel,
    SpeakerMeanShapes,
    SystemResult,
)
from ..domain.evaluation import tippett_data
from ..domain.exceptions import DatasetIOError


logger = logging.getLogger(__name__)


def _jsonable(value):
    """Convierte tipos de numpy y NaN/inf a valores JSON estándar."""
    if isinstance(value, Mapping):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


class OutputSet:
    """
    Archivos escritos por un comando bajo un directorio.

    Lleva registro de lo escrito para poder descartarlo si la ejecución falla.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: List[Path] = []
        self._created_root = False

    def _target(self, name: str) -> Path:
        if not self.root.exists():
            try:
                self.root.mkdir(parents=True)
            except OSError as error:
                raise DatasetIOError(str(self.root), str(error))
            self._created_root = True
        return self.root / name

    def track(self, path: Path) -> Path:
        if path not in self.written:
            self.written.append(path)
        return path

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._target(name)
        try:
            frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        except OSError as error:
            raise DatasetIOError(str(path), str(error))
        return self.track(path)

    def json(self, name: str, payload) -> Path:
        path = self._target(name)
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        try:
            with open(path, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        except OSError as error:
            raise DatasetIOError(str(path), str(error))
        return self.track(path)

    def discard(self) -> None:
        """Elimina lo escrito (y el directorio si lo creó este OutputSet y quedó vacío)."""
        for path in self.written:
            path.unlink(missing_ok=True)
        if self._created_root and self.root.exists() and not any(self.root.iterdir()):
            self.root.rmdir()
        logger.warning("Se descartaron %d salida(s) parciales en %s", len(self.written), self.root)
        self.written = []


# =============================================================================
# Experimento
# =============================================================================

def metrics_frame(results_by_mode: Mapping[AlignmentMode, Sequence[SystemResult]]) -> pd.DataFrame:
    """
    Tabla de métricas con el layout de la tabla de resultados: una fila por
    sistema. Con un solo modo las columnas son ``eer_percent`` y ``cllr``; con
    varios, cada modo aporta sus dos columnas prefijadas con su nombre.
    """
    prefixed = len(results_by_mode) > 1
    rows: Dict[str, Dict[str, object]] = {}
    for mode, results in results_by_mode.items():
        prefix = f"{AlignmentMode(mode).value}_" if prefixed else ""
        for result in results:
            row = rows.setdefault(result.label, {"system": result.label})
            row[f"{prefix}eer_percent"] = result.metrics.eer_percent
            row[f"{prefix}cllr"] = result.metrics.cllr
    return pd.DataFrame(list(rows.values()))


def metrics_payload(results_by_mode: Mapping[AlignmentMode, Sequence[SystemResult]]) -> Dict[str, object]:
    return {
        AlignmentMode(mode).value: {result.label: result.metrics.to_dict() for result in results}
        for mode, results in results_by_mode.items()
    }


def scores_frame(results: Iterable[SystemResult]) -> pd.DataFrame:
    rows = []
    for result in results:
        for entry, llr in zip(result.raw_scores.entries, result.calibrated):
            rows.append({
                "mode": result.mode.value,
                "system": result.label,
                "target": entry.pair[0],
                "candidate": entry.pair[1],
                "label": entry.label.value,
                "raw_log10_lr": entry.score,
                "calibrated_log10_lr": float(llr),
            })
    return pd.DataFrame(rows, columns=[
        "mode", "system", "target", "candidate", "label", "raw_log10_lr", "calibrated_log10_lr",
    ])


def tippett_frame(results: Iterable[SystemResult]) -> pd.DataFrame:
    rows = []
    for result in results:
        curves = tippett_data(result.raw_scores.with_scores(result.calibrated))
        for label, curve in (("same", curves.same), ("different", curves.different)):
            for llr, proportion in curve:
                rows.append({
                    "mode": result.mode.value,
                    "system": result.label,
                    "label": label,
                    "log10_lr": llr,
                    "proportion": proportion,
                })
    return pd.DataFrame(rows, columns=["mode", "system", "label", "log10_lr", "proportion"])


def correlations_frame(entries: Iterable[CorrelationEntry], mode: Optional[AlignmentMode] = None) -> pd.DataFrame:
    rows = []
    for entry in entries:
        row = {} if mode is None else {"mode": AlignmentMode(mode).value}
        row.update({
            "pc_i": entry.pc_i,
            "pc_j": entry.pc_j,
            "statistic": entry.statistic,
            "r": entry.r,
            "p": entry.p,
            "degenerate": entry.degenerate,
        })
        rows.append(row)
    return pd.DataFrame(rows)


# =============================================================================
# Formas
# =============================================================================

def _shape_rows(shape: np.ndarray) -> List[Dict[str, object]]:
    return [
        {"landmark": index + 1, "x": float(x), "y": float(y)}
        for index, (x, y) in enumerate(np.asarray(shape))
    ]


def aligned_frame(aligned: AlignedShapeSet, labels: Sequence[str]) -> pd.DataFrame:
    rows = []
    for trial_id, speaker, shape in zip(aligned.trial_ids, labels, aligned.aligned):
        for row in _shape_rows(shape):
            rows.append({"trial_id": trial_id, "speaker": speaker, **row})
    return pd.DataFrame(rows, columns=["trial_id", "speaker", "landmark", "x", "y"])


def shapes_frame(shapes: Mapping[str, np.ndarray], key: str = "group") -> pd.DataFrame:
    rows = []
    for name, shape in shapes.items():
        for row in _shape_rows(shape):
            rows.append({key: name, **row})
    return pd.DataFrame(rows, columns=[key, "landmark", "x", "y"])


def speaker_mean_shapes_frame(mean_shapes: SpeakerMeanShapes) -> pd.DataFrame:
    """
    Filas ``scope=speaker`` por hablante y luego ``scope=overall`` (con
    ``speaker`` vacío) para la media general.
    """
    rows = []
    for speaker, shape in mean_shapes.by_speaker.items():
        for row in _shape_rows(shape):
            rows.append({"scope": "speaker", "speaker": speaker, **row})
    for row in _shape_rows(mean_shapes.overall):
        rows.append({"scope": "overall", "speaker": "", **row})
    return pd.DataFrame(rows, columns=["scope", "speaker", "landmark", "x", "y"])


def loadings_frame(model: PCModel) -> pd.DataFrame:
    """Una fila por coordenada (landmark, eje) con la carga de cada PC."""
    k = model.components.shape[0] // 2
    frame = pd.DataFrame({
        "landmark": np.repeat(np.arange(1, k + 1), 2),
        "axis": ["x", "y"] * k,
    })
    for index in range(model.q):
        frame[f"PC{index + 1}"] = model.components[:, index]
    return frame


def pc_scores_frame(scores: np.ndarray, trial_ids: Sequence[str], labels: Sequence[str]) -> pd.DataFrame:
    frame = pd.DataFrame({"trial_id": list(trial_ids), "speaker": list(labels)})
    for index in range(scores.shape[1]):
        frame[f"PC{index + 1}"] = scores[:, index]
    return frame


def explained_variance_frame(model: PCModel) -> pd.DataFrame:
    return pd.DataFrame({
        "pc": np.arange(1, model.q + 1),
        "variance": model.variances,
        "explained_ratio": model.explained_ratio,
        "cumulative_ratio": np.cumsum(model.explained_ratio),
    })


def effect_shapes_frame(effects: Iterable[EffectShape]) -> pd.DataFrame:
    rows = []
    for effect in effects:
        for row in _shape_rows(effect.shape):
            rows.append({"pc": effect.pc_index, "sd_multiple": effect.sd_multiple, **row})
    return pd.DataFrame(rows, columns=["pc", "sd_multiple", "landmark", "x", "y"])
