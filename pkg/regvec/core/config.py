"""Конфигурация regvec: значения по умолчанию, TOML-файлы и числовые допуски.

Поиск файла: явный путь, затем ``./regvec.toml``, затем ``[tool.regvec]`` в
``./pyproject.toml``, затем файл, поставляемый вместе с пакетом.
"""
from __future__ import annotations

import os
import pathlib
import sys
from dataclasses import asdict, dataclass, fields
from typing import Any, Iterator

import tomlkit  # type: ignore  # third-party

__all__ = ["Config", "Tolerances", "DEFAULT_TOLERANCES", "load_config", "default_threads"]


def default_threads() -> int:
    """Число потоков для выборок: ``REGVEC_THREADS`` или число CPU."""
    raw = os.environ.get("REGVEC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True, slots=True)
class Tolerances:
    """Числовые параметры, которые библиотека получает явно (``tol=``)."""

    eps_geom: float = 1e-12
    eps_eval: float = 1e-9
    eps_mem: float = 1e-8
    eps_rt: float = 1e-6
    eta: float = 0.25
    lambda_ball: float = 1.0
    eta_opt: float = 0.02
    alpha_min: float = 0.005
    alpha_lambda: float = 0.01
    direct_margin: float = 0.2
    cover_radius: float = 0.2
    reuse_ratio: float = 0.5
    mesh_res: int = 0
    grid_divisions: int = 32
    max_slabs: int = 10_000
    validate_samples: int = 2000
    seed: int = 1729

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "Tolerances":
        names = {f.name: f.type for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in names or value is None:
                continue
            default = getattr(DEFAULT_TOLERANCES, key)
            kwargs[key] = type(default)(value)
        return cls(**kwargs)

    def mesh_vertices(self, n: int) -> int:
        """Целевое число вершин сферической сетки для S^{n-1}."""
        if self.mesh_res > 0:
            return self.mesh_res
        return 512 if n <= 2 else 10_000


DEFAULT_TOLERANCES = Tolerances()


class Config(dict[str, Any]):
    """Словарь-обёртка с дефолтами и парсингом TOML."""

    _DEFAULTS: dict[str, Any] = {
        **DEFAULT_TOLERANCES.to_dict(),
        "alpha": 0.1,
        "samples": 10_000,
        "samples_per_simplex": 64,
        "threads": None,
    }

    def __init__(self, data: dict[str, Any] | None = None, *, source: str = "<default>") -> None:  # noqa: D401
        merged = dict(self._DEFAULTS)
        if data:
            merged.update({str(k): _plain(v) for k, v in data.items()})
        if merged.get("threads") is None:
            merged["threads"] = default_threads()
        super().__init__(merged)
        self["_config_source"] = source

    # --- convenience --------------------------------------

    def __getattr__(self, item: str) -> Any:  # noqa: D401
        try:
            return self[item]
        except KeyError as exc:
            raise AttributeError(item) from exc

    def __repr__(self) -> str:  # noqa: D401
        return f"<Config {dict(self)!r} from {self['_config_source']}>"

    def with_overrides(self, **overrides: Any) -> "Config":
        """Копия с заменёнными ключами; ``None`` означает «не задано в CLI»."""
        data = {k: v for k, v in self.items() if k != "_config_source"}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return Config(data, source=self["_config_source"])

    def tolerances(self) -> Tolerances:
        return Tolerances.from_mapping(dict(self))

    # --- parsing helpers -----------------------------------

    @classmethod
    def _iter_candidate_files(cls) -> Iterator[pathlib.Path]:
        root = pathlib.Path.cwd()
        yield root / "regvec.toml"
        yield root / "pyproject.toml"
        yield pathlib.Path(__file__).resolve().parent.parent / "regvec.toml"

    @classmethod
    def _parse_toml(cls, path: pathlib.Path) -> dict[str, Any] | None:
        raw_text = path.read_text(encoding="utf-8")
        data: Any = tomlkit.parse(raw_text)
        if path.name == "pyproject.toml":
            try:
                return data["tool"]["regvec"]
            except KeyError:
                return None
        return data.get("tool", {}).get("regvec", data)

    # --- public -------------------------------------------

    @classmethod
    def load(cls, config_path: str | pathlib.Path | None = None) -> "Config":
        if config_path is not None:
            path = pathlib.Path(config_path)
            if not path.exists():
                print(f"[regvec] ❌ Конфигурационный файл не найден: {path}", file=sys.stderr)
                raise SystemExit(2)
            return cls(cls._parse_toml(path) or {}, source=str(path))

        for candidate in cls._iter_candidate_files():
            if candidate.exists():
                data = cls._parse_toml(candidate)
                if data is None:
                    continue
                return cls(data, source=str(candidate))

        return cls()


def _plain(value: Any) -> Any:
    """tomlkit-элементы -> обычные python-значения."""
    unwrap = getattr(value, "unwrap", None)
    return unwrap() if callable(unwrap) else value


def load_config(config_path: pathlib.Path | str | None = None) -> Config:
    return Config.load(config_path)
