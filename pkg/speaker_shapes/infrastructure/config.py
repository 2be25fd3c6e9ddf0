"""
Lector de archivos de configuración planos con claves punteadas.

    # comentario
    experiment.mode = size-and-shape
    experiment.feature_sets = 1;2;3;1+2
    synthetic.between_cov = 4,0;0,1

La sintaxis de cada línea es la de un archivo ``.env`` y la interpreta
python-dotenv; este módulo agrupa las claves por sección. Los valores quedan
como texto; los serializadores de la app los validan y convierten. Las rutas
relativas se resuelven contra el directorio del archivo.
"""

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

from dotenv.parser import parse_stream

from ..domain.exceptions import DatasetIOError, InvalidConfiguration


@dataclass(frozen=True)
class ConfigFile:
    """Contenido de un archivo de configuración agrupado por sección."""

    path: Path
    sections: Dict[str, Dict[str, str]]

    @property
    def base_dir(self) -> Path:
        return self.path.parent

    def section(self, name: str) -> Dict[str, str]:
        return dict(self.sections.get(name, {}))

    def resolve(self, value: str) -> Path:
        """Ruta absoluta de un valor relativo al archivo de configuración."""
        candidate = Path(value).expanduser()
        return candidate if candidate.is_absolute() else (self.base_dir / candidate).resolve()

    def snapshot(self) -> Dict[str, str]:
        """Vista plana ``seccion.clave -> valor`` (para el manifiesto)."""
        return {
            f"{section}.{key}": value
            for section, values in sorted(self.sections.items())
            for key, value in sorted(values.items())
        }


def parse_config_text(text: str) -> Dict[str, Dict[str, str]]:
    """
    Interpreta el texto de configuración.

    Raises:
        InvalidConfiguration: Si una línea no es ``seccion.clave = valor`` o
            si una clave aparece dos veces
    """
    sections: Dict[str, Dict[str, str]] = {}
    for binding in parse_stream(io.StringIO(text)):
        if binding.error or (binding.key is not None and binding.value is None):
            raise InvalidConfiguration(f"línea {binding.original.line}", "se esperaba 'clave = valor'")
        if binding.key is None:
            continue

        section, _, name = binding.key.partition(".")
        if not section or not name:
            raise InvalidConfiguration(binding.key, "la clave debe tener la forma 'seccion.clave'")

        values = sections.setdefault(section, {})
        if name in values:
            raise InvalidConfiguration(binding.key, "clave repetida")
        values[name] = binding.value.strip()
    return sections


def read_config(path: str) -> ConfigFile:
    """
    Lee un archivo de configuración.

    Raises:
        DatasetIOError: Si el archivo no se puede leer
        InvalidConfiguration: Si la sintaxis es inválida
    """
    location = Path(path).expanduser().resolve()
    try:
        text = location.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as error:
        raise DatasetIOError(str(path), str(error))
    return ConfigFile(path=location, sections=parse_config_text(text))
