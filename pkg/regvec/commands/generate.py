"""generate: записывает одну из стандартных сцен."""
from __future__ import annotations

import argparse

from ..core.scene import GENERATORS, generate, save_scene
from ._common import Console, guarded

__all__ = ["run", "main"]


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Стандартные сцены")
    parser.add_argument("kind", choices=sorted(GENERATORS))
    parser.add_argument("--sides", type=int, default=8, help="число сторон для polygon")
    parser.add_argument("--out", required=True, help="куда записать JSON сцены")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    console = Console("generate", args.quiet)

    def body() -> int:
        scene = generate(args.kind, sides=args.sides)
        save_scene(scene, args.out)
        console.ok(f"Сцена {scene.name} ({len(scene.simplices)} симплексов) записана в {args.out}")
        return 0

    return guarded(console, body)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
