"""Команды CLI regvec.

Каждая команда: модуль с ``run(argv) -> int``; ``regvec <команда> ...``
диспетчеризует по имени.
"""
from __future__ import annotations

import importlib
import sys
from typing import Final

__all__ = ["COMMANDS", "main"]

COMMANDS: Final[tuple[str, ...]] = ("analyze", "flatten", "render", "verify", "generate")


def main(argv: list[str] | None = None) -> None:
    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print("usage: regvec {" + ",".join(COMMANDS) + "} ...")
        raise SystemExit(0 if args else 2)
    name, rest = args[0], args[1:]
    if name not in COMMANDS:
        print(f"[regvec] ❌ Неизвестная команда: {name}", file=sys.stderr)
        raise SystemExit(2)
    module = importlib.import_module(f".{name}", package=__name__)
    raise SystemExit(module.run(rest))
