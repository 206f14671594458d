"""Core API подпакет regvec.core.

Библиотечные модули: геометрия направлений, PL-множества, липшицевы
функции, регулярные системы, выпрямление и оракулы проверки.
"""

from __future__ import annotations

from .config import Config, Tolerances, DEFAULT_TOLERANCES, load_config  # noqa: F401
from .errors import (  # noqa: F401
    ContractViolation,
    DegenerateInput,
    NumericFailure,
    RegvecError,
    SceneParseError,
    VerificationFailure,
)
from .pl_complex import PLSet, Simplex  # noqa: F401
from .regular_systems import RegularSystem, build_system, validate  # noqa: F401
from .flattener import ZigzagMap, build_flattening, flatten_set  # noqa: F401
from .scene import Scene, load_scene, save_scene  # noqa: F401

__all__ = [
    "Config",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "load_config",
    "RegvecError",
    "SceneParseError",
    "ContractViolation",
    "DegenerateInput",
    "NumericFailure",
    "VerificationFailure",
    "PLSet",
    "Simplex",
    "RegularSystem",
    "build_system",
    "validate",
    "ZigzagMap",
    "build_flattening",
    "flatten_set",
    "Scene",
    "load_scene",
    "save_scene",
]
