"""Иерархия исключений regvec.

Библиотека только бросает исключения; коды возврата назначают команды CLI
по атрибуту ``exit_code``.
"""
from __future__ import annotations

from typing import Any, Mapping

__all__ = [
    "RegvecError",
    "SceneParseError",
    "ContractViolation",
    "DegenerateInput",
    "NumericFailure",
    "VerificationFailure",
]


class RegvecError(RuntimeError):
    """Базовое исключение regvec."""

    exit_code = 1


class SceneParseError(RegvecError):
    """Файл сцены/отчёта не разбирается."""

    exit_code = 2


class ContractViolation(RegvecError, ValueError):
    """Нарушено предусловие операции."""

    exit_code = 3


class DegenerateInput(ContractViolation):
    """Вход на границе области определения (например, u = ±e для π̃_e)."""


class NumericFailure(RegvecError):
    """Численная процедура не сошлась; ``details`` хранит слой/слайс."""

    exit_code = 4

    def __init__(self, message: str, details: Mapping[str, Any] | None = None) -> None:
        super().__init__(message)
        self.details: dict[str, Any] = dict(details or {})


class VerificationFailure(RegvecError):
    """Независимая проверка опровергла сертификат."""

    exit_code = 5
