"""verify: повторная проверка отчёта flatten по встроенной сцене и допускам."""
from __future__ import annotations

import argparse
import json
import pathlib
from typing import Any

from packaging.version import InvalidVersion, Version

from .. import __version__
from ..core.config import Config
from ..core.errors import SceneParseError, VerificationFailure
from ..core.flattener import Certificate
from ..core.scene import scene_from_dict
from ._common import Console, guarded
from .flatten import build_report

__all__ = ["run", "main", "check_version", "reverify"]


def check_version(recorded: str, current: str = __version__) -> None:
    """Отчёт совместим, если совпадают major.minor."""
    try:
        old, new = Version(recorded), Version(current)
    except InvalidVersion as exc:
        raise SceneParseError(f"bad version string in report: {exc}") from exc
    if (old.major, old.minor) != (new.major, new.minor):
        raise VerificationFailure(f"report was produced by regvec {recorded}, this is {current}")


def load_report(path: str | pathlib.Path) -> dict[str, Any]:
    try:
        data = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneParseError(f"cannot read report {path}: {exc}") from exc
    for key in ("regvec_version", "scene", "tolerances", "config"):
        if key not in data:
            raise SceneParseError(f"report lacks '{key}'")
    return data


def reverify(stored: dict[str, Any], console: Console | None = None) -> dict[str, Any]:
    """Перестраивает конвейер из отчёта; VerificationFailure при расхождении."""
    check_version(str(stored["regvec_version"]))
    scene = scene_from_dict(stored["scene"])
    cfg = Config({**stored["tolerances"], **stored["config"]}, source="<report>")
    fresh = build_report(scene, cfg, console)
    if "certificate" in stored:
        if "certificate" not in fresh:
            raise VerificationFailure("rebuilt system failed validation")
        old = Certificate.from_dict(stored["certificate"])
        new = Certificate.from_dict(fresh["certificate"])
        if not old.agrees_with(new):
            raise VerificationFailure(
                f"certificate mismatch: stored {old.to_dict()} vs rebuilt {new.to_dict()}"
            )
    if not fresh["verified"]:
        raise VerificationFailure("; ".join(fresh.get("failures", [])) or "verification failed")
    return fresh


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Повторная проверка отчёта flatten")
    parser.add_argument("report", help="report.json, записанный командой flatten")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    console = Console("verify", args.quiet)

    def body() -> int:
        stored = load_report(args.report)
        console.info(f"Отчёт regvec {stored['regvec_version']}, seed {stored.get('seed')}")
        fresh = reverify(stored, console)
        console.ok(f"Сертификат подтверждён, α_reg = {fresh['alpha_reg']:.6g}")
        return 0

    return guarded(console, body)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
