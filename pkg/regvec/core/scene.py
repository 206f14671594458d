"""Файлы сцен: строгий JSON и стандартные сцены.

Формат::

    {"dimension": 2, "name": "square", "simplices": [[[0, 0], [1, 0]], ...]}

Числа пишутся кратчайшим представлением, однозначно восстанавливающим
float, поэтому load(save(scene)) совпадает побитно.
"""
from __future__ import annotations

import json
import math
import pathlib
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ContractViolation, SceneParseError
from .pl_complex import PLSet

__all__ = [
    "Scene",
    "loads_scene",
    "dumps_scene",
    "load_scene",
    "save_scene",
    "GENERATORS",
    "generate",
]

Vertex = list[float]


@dataclass
class Scene:
    dimension: int
    simplices: list[list[Vertex]]
    name: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_plset(self) -> PLSet:
        """PLSet сцены; полноразмерный симплекс: ContractViolation."""
        for i, simplex in enumerate(self.simplices):
            if len(simplex) > self.dimension:
                raise ContractViolation(
                    f"empty-interior violation: simplex {i} has dimension {len(simplex) - 1} "
                    f"in R^{self.dimension}"
                )
        return PLSet.from_vertex_lists(self.dimension, self.simplices)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"dimension": self.dimension}
        if self.name:
            data["name"] = self.name
        if self.metadata:
            data["metadata"] = self.metadata
        data["simplices"] = self.simplices
        return data


def _reject_constant(token: str) -> float:
    raise SceneParseError(f"non-finite number {token!r} is not allowed")


def _coord(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneParseError(f"{where}: coordinate must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise SceneParseError(f"{where}: coordinate is not finite")
    return out


def scene_from_dict(data: Any) -> Scene:
    if not isinstance(data, dict):
        raise SceneParseError("scene must be a JSON object")
    dim = data.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SceneParseError("'dimension' must be a positive integer")
    raw = data.get("simplices")
    if not isinstance(raw, list):
        raise SceneParseError("'simplices' must be a list")
    simplices: list[list[Vertex]] = []
    for i, simplex in enumerate(raw):
        if not isinstance(simplex, list) or not simplex:
            raise SceneParseError(f"simplex {i} must be a non-empty list of vertices")
        if len(simplex) > dim + 1:
            raise SceneParseError(f"simplex {i} has {len(simplex)} vertices, at most {dim + 1} allowed")
        verts = []
        for j, v in enumerate(simplex):
            if not isinstance(v, list) or len(v) != dim:
                raise SceneParseError(f"simplex {i} vertex {j} must have {dim} coordinates")
            verts.append([_coord(c, f"simplex {i} vertex {j}") for c in v])
        simplices.append(verts)
    name = data.get("name", "")
    metadata = data.get("metadata", {})
    if not isinstance(name, str) or not isinstance(metadata, dict):
        raise SceneParseError("'name' must be a string and 'metadata' an object")
    return Scene(dim, simplices, name, metadata)


def loads_scene(text: str) -> Scene:
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"invalid JSON: {exc}") from exc
    return scene_from_dict(data)


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene.to_dict(), indent=1, allow_nan=False) + "\n"


def load_scene(path: str | pathlib.Path) -> Scene:
    p = pathlib.Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneParseError(f"cannot read {p}: {exc}") from exc
    return loads_scene(text)


def save_scene(scene: Scene, path: str | pathlib.Path) -> None:
    pathlib.Path(path).write_text(dumps_scene(scene), encoding="utf-8")


# --- стандартные сцены -----------------------------------------------------


def segment() -> Scene:
    return Scene(2, [[[0.0, 0.0], [1.0, 1.0]]], "segment")


def hline() -> Scene:
    return Scene(2, [[[-1.0, 0.0], [1.0, 0.0]]], "hline")


def square() -> Scene:
    c = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return Scene(2, [[c[i], c[(i + 1) % 4]] for i in range(4)], "square")


def vgraph() -> Scene:
    return Scene(2, [[[-1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]], "vgraph")


def regular_polygon(sides: int = 8) -> Scene:
    """Граница правильного m-угольника, вписанного в единичную окружность."""
    if sides < 3:
        raise ContractViolation("a polygon needs at least 3 sides")
    pts = [[math.cos(2 * math.pi * i / sides), math.sin(2 * math.pi * i / sides)] for i in range(sides)]
    return Scene(
        2, [[pts[i], pts[(i + 1) % sides]] for i in range(sides)], f"polygon-{sides}", {"sides": sides}
    )


def interior() -> Scene:
    """Полноразмерный треугольник: отвергается при загрузке."""
    return Scene(2, [[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]], "interior")


def cube_face() -> Scene:
    """Открытая коробка: пять граней единичного куба без верхней, по два треугольника."""
    faces = [
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
        [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]],
        [[0, 1, 0], [1, 1, 0], [1, 1, 1], [0, 1, 1]],
        [[0, 0, 0], [0, 1, 0], [0, 1, 1], [0, 0, 1]],
        [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]],
    ]
    tris: list[list[Vertex]] = []
    for a, b, c, d in faces:
        tris.append([[float(t) for t in a], [float(t) for t in b], [float(t) for t in c]])
        tris.append([[float(t) for t in a], [float(t) for t in c], [float(t) for t in d]])
    return Scene(3, tris, "cube-face")


def vertical_triangle() -> Scene:
    return Scene(3, [[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]], "vertical-triangle")


GENERATORS: dict[str, Callable[..., Scene]] = {
    "segment": segment,
    "hline": hline,
    "square": square,
    "vgraph": vgraph,
    "polygon": regular_polygon,
    "interior": interior,
    "cube-face": cube_face,
    "vertical-triangle": vertical_triangle,
}


def generate(kind: str, **params: Any) -> Scene:
    try:
        factory = GENERATORS[kind]
    except KeyError:
        raise ContractViolation(f"unknown scene kind {kind!r}; choose from {sorted(GENERATORS)}") from None
    if kind != "polygon":
        params.pop("sides", None)
    return factory(**params)
