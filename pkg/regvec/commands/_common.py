"""Общие части команд: флаги допусков, конфиг, консоль и коды возврата."""
from __future__ import annotations

import argparse
import json
import pathlib
import sys
from typing import Any, Callable

import numpy as np

from ..core.config import Config, load_config
from ..core.errors import RegvecError
from ..core.pl_complex import PLSet
from ..core.scene import Scene, load_scene

__all__ = [
    "Console",
    "add_common_flags",
    "config_from_args",
    "guarded",
    "load_scene_set",
    "write_json",
]

# флаг CLI -> ключ конфигурации
_FLAG_KEYS = {
    "alpha": float,
    "eta": float,
    "mesh_res": int,
    "samples": int,
    "seed": int,
    "eps_eval": float,
    "alpha_min": float,
    "samples_per_simplex": int,
    "threads": int,
}


class Console:
    """Вывод в стиле «[cmd] сообщение»; ошибки: в stderr."""

    def __init__(self, name: str, quiet: bool = False) -> None:
        self.name = name
        self.quiet = quiet

    def info(self, message: str) -> None:
        if not self.quiet:
            print(f"[{self.name}] {message}")

    def ok(self, message: str) -> None:
        if not self.quiet:
            print(f"[{self.name}] ✅ {message}")

    def error(self, message: str) -> None:
        print(f"[{self.name}] ❌ {message}", file=sys.stderr)


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="путь к regvec.toml (по умолчанию: поиск)")
    for key, kind in _FLAG_KEYS.items():
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind, default=None)
    parser.add_argument("--quiet", action="store_true", help="без строк прогресса")


def config_from_args(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config)
    return cfg.with_overrides(**{key: getattr(args, key, None) for key in _FLAG_KEYS})


def guarded(console: Console, body: Callable[[], int]) -> int:
    """Выполняет команду, переводя исключения regvec в коды возврата."""
    try:
        return body()
    except RegvecError as exc:
        console.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


def load_scene_set(path: str | pathlib.Path) -> tuple[Scene, PLSet]:
    scene = load_scene(path)
    return scene, scene.to_plset()


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_json(path: str | pathlib.Path, data: dict[str, Any]) -> None:
    text = json.dumps(data, indent=1, default=_jsonable, allow_nan=True)
    pathlib.Path(path).write_text(text + "\n", encoding="utf-8")
