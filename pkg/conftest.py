"""
Conftest raíz para pytest-django.
Usa articulatory_lr.settings_test para pruebas y fija el techo de hilos.
"""
import os

os.environ.setdefault("ARTICULATORY_LR_MAX_WORKERS", "2")
