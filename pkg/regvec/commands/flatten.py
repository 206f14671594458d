"""flatten: полный конвейер сцена -> регулярная система -> h -> проверки -> отчёт."""
from __future__ import annotations

import argparse
import time
from typing import Any

from .. import __version__
from ..core.config import Config
from ..core.errors import VerificationFailure
from ..core.flattener import build_flattening, flatten_set
from ..core.oracle_verify import verify_pipeline
from ..core.regular_systems import RegularSystem, build_system, default_box, validate
from ..core.scene import Scene, load_scene
from ._common import Console, add_common_flags, config_from_args, guarded, write_json

__all__ = ["run", "main", "build_report", "system_summary"]


def system_summary(S: RegularSystem) -> dict[str, Any]:
    return {
        "ambient_dim": S.ambient_dim,
        "hypersurfaces": S.b,
        "directions": S.directions.tolist(),
        "distinct_directions": len({tuple(d.round(12)) for d in S.directions}),
        "notes": S.notes,
    }


def build_report(scene: Scene, cfg: Config, console: Console | None = None) -> dict[str, Any]:
    """Строит h для сцены и возвращает самодостаточный отчёт."""
    console = console or Console("flatten", quiet=True)
    tol = cfg.tolerances()
    timings: dict[str, float] = {}

    def timed(stage: str, fn: Any, *args: Any, **kw: Any) -> Any:
        start = time.perf_counter()
        out = fn(*args, **kw)
        timings[stage] = time.perf_counter() - start
        return out

    A = scene.to_plset()
    box = default_box(A)
    console.info(f"Строим регулярную систему (n = {A.ambient_dim}, симплексов {len(A)})...")
    S = timed("build_system", build_system, A, tol=tol, box=box)
    console.info(f"Гиперповерхностей: {S.b}")
    validation = timed("validate", validate, S, A, tol.validate_samples, box=box, tol=tol)
    report: dict[str, Any] = {
        "regvec_version": __version__,
        "seed": tol.seed,
        "tolerances": tol.to_dict(),
        "config": {
            "samples": int(cfg.samples),
            "samples_per_simplex": int(cfg.samples_per_simplex),
            "threads": int(cfg.threads),
        },
        "scene": scene.to_dict(),
        "system": system_summary(S),
        "validation": validation.to_dict(),
        "timings": timings,
    }
    if not validation.valid:
        report["verified"] = False
        report["failures"] = ["regular system failed validation"]
        return report

    zmap = timed("build_flattening", build_flattening, S, check=False, tol=tol)
    image = timed("flatten_set", flatten_set, zmap, A, int(cfg.samples_per_simplex), seed=tol.seed)
    console.info(f"Образ: {len(image)} точек, прогонов {len(zmap.runs)}")
    check = timed(
        "verify", verify_pipeline, zmap, image, box,
        samples=int(cfg.samples), seed=tol.seed, threads=int(cfg.threads), tol=tol,
    )
    cert = zmap.certificate.to_dict()
    report.update(
        {
            "map": zmap.to_dict(),
            "certificate": cert,
            "alpha_reg": cert["alpha_reg"],
            "verification": check.to_dict(),
            "verified": check.verified,
            "failures": check.failures,
            "image": {
                "points": image.points.tolist(),
                "source": image.source.tolist(),
                "sheet": image.sheet.tolist(),
            },
        }
    )
    return report


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Выпрямление сцены: h, сертификат и проверки")
    parser.add_argument("scene", help="JSON-файл сцены")
    parser.add_argument("--out", help="куда записать описание h (map.json)")
    parser.add_argument("--report", help="куда записать отчёт (report.json)")
    add_common_flags(parser)
    args = parser.parse_args(argv)
    console = Console("flatten", args.quiet)

    def body() -> int:
        cfg = config_from_args(args)
        scene = load_scene(args.scene)
        report = build_report(scene, cfg, console)
        if args.out and "map" in report:
            write_json(args.out, {"regvec_version": __version__, **report["map"]})
            console.info(f"Отображение записано в {args.out}")
        if args.report:
            write_json(args.report, report)
            console.info(f"Отчёт записан в {args.report}")
        if not report["verified"]:
            raise VerificationFailure("; ".join(report.get("failures", [])) or "verification failed")
        console.ok(
            f"Проверено: L_fwd = {report['certificate']['L_fwd']:.6g}, "
            f"L_inv = {report['certificate']['L_inv']:.6g}, α_reg = {report['alpha_reg']:.6g}"
        )
        return 0

    return guarded(console, body)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
