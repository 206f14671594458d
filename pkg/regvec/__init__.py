import importlib as _importlib
import sys
from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("regvec")
except _metadata.PackageNotFoundError:  # запуск из исходников без установки
    __version__ = "0.1.0.dev0"

# ---------------------------------------------------------------------------
# Динамический реэкспорт core-модулей: regvec.<module> == regvec.core.<module>
# ---------------------------------------------------------------------------
_CORE = (
    "config",
    "errors",
    "geom_core",
    "pl_complex",
    "lip_calculus",
    "regular_systems",
    "flattener",
    "oracle_verify",
    "scene",
    "render",
)

for _m in _CORE:
    _mod = _importlib.import_module(f"regvec.core.{_m}")
    sys.modules[f"regvec.{_m}"] = _mod
    globals()[_m] = _mod

__all__ = ["__version__", "core", "commands", *_CORE]

from . import commands  # noqa: E402,F401
