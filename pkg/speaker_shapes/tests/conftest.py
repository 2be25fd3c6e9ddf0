"""
Fixtures compartidas por las suites de la app.
"""

import pytest

from speaker_shapes.infrastructure.repository import CsvDatasetRepository

from .builders import FIXTURES_DIR


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def small_csv():
    """12 ensayos: 2 hablantes × 2 vocales × 3 repeticiones, k=3, sin outliers."""
    return FIXTURES_DIR / "landmarks_small.csv"


@pytest.fixture
def repository():
    return CsvDatasetRepository()


@pytest.fixture
def outlier_csv(tmp_path, small_csv):
    """La tabla chica con el landmark 3 del ensayo A05 desplazado 50 mm."""
    lines = small_csv.read_text(encoding="utf-8").splitlines()
    for index, line in enumerate(lines):
        if line.startswith("A05,"):
            values = line.split(",")
            values[9] = "100.0"
            lines[index] = ",".join(values)
    path = tmp_path / "outlier.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
