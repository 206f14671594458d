"""render: SVG (n = 2) или OBJ (n = 3) со слоями A, H_k и h(A)."""
from __future__ import annotations

import argparse
import json
import pathlib
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..core.config import Tolerances
from ..core.errors import SceneParseError
from ..core.regular_systems import build_system, default_box
from ..core.render import surface_polylines, write_figure
from ..core.scene import Scene, loads_scene, scene_from_dict
from ._common import Console, add_common_flags, config_from_args, guarded

__all__ = ["run", "main"]


@dataclass
class _Source:
    scene: Scene
    image: np.ndarray | None = None
    tolerances: dict[str, Any] | None = None


def _read_input(path: str) -> _Source:
    """Сцена; для отчёта flatten ещё облако h(A) и допуски, с которыми он построен."""
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"invalid JSON: {exc}") from exc
    if isinstance(data, dict) and "scene" in data:
        image = data.get("image", {}).get("points")
        return _Source(
            scene_from_dict(data["scene"]),
            None if image is None else np.asarray(image, dtype=float),
            data.get("tolerances"),
        )
    return _Source(loads_scene(text))


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Картинка сцены или отчёта: A, H_k и h(A)")
    parser.add_argument("source", help="JSON сцены или отчёта")
    parser.add_argument("--out", required=True, help="fig.svg или fig.obj")
    parser.add_argument("--no-surfaces", action="store_true", help="не рисовать H_k")
    add_common_flags(parser)
    args = parser.parse_args(argv)
    console = Console("render", args.quiet)

    def body() -> int:
        cfg = config_from_args(args)
        source = _read_input(args.source)
        A = source.scene.to_plset()
        surfaces = None
        if not args.no_surfaces and A.ambient_dim in (2, 3):
            # H_k не сериализуются: система строится заново с допусками отчёта
            tol = (
                Tolerances.from_mapping(source.tolerances)
                if source.tolerances is not None
                else cfg.tolerances()
            )
            box = default_box(A)
            S = build_system(A, tol=tol, box=box)
            console.info(f"Гиперповерхностей: {S.b}")
            surfaces = surface_polylines(S, box)
        kind = write_figure(
            args.out, A, image=source.image, surfaces=surfaces, samples=int(cfg.samples), seed=int(cfg.seed)
        )
        console.ok(f"{kind.upper()} записан в {args.out}")
        return 0

    return guarded(console, body)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
