"""analyze: касательные направления сцены, лучший регулярный вектор и α-плоские группы."""
from __future__ import annotations

import argparse
import json
from typing import Any

import numpy as np

from ..core.config import Tolerances
from ..core.geom_core import basis_vector, max_min_direction, min_distance
from ..core.pl_complex import PLSet, flat_partition
from ._common import Console, add_common_flags, config_from_args, guarded, load_scene_set

__all__ = ["run", "main", "analyze_set"]


def analyze_set(A: PLSet, tol: Tolerances, alpha: float) -> dict[str, Any]:
    n = A.ambient_dim
    tangents = A.tangents
    lam, margin = max_min_direction(tangents, ambient_dim=n, tol=tol)
    e_n = basis_vector(n)
    return {
        "dimension": n,
        "simplices": len(A),
        "tangents": [t.frame.T.tolist() for t in tangents],
        "regular_vector": np.asarray(lam).tolist(),
        "margin": float(margin),
        "e_n_margin": float(min_distance(e_n[None, :], tangents)[0]),
        "alpha": alpha,
        "flat_groups": len(flat_partition(A, alpha)),
    }


def run(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Анализ сцены: τ(A), регулярный вектор, α-плоские группы")
    parser.add_argument("scene", help="JSON-файл сцены")
    parser.add_argument("--json", action="store_true", help="напечатать результат как JSON")
    add_common_flags(parser)
    args = parser.parse_args(argv)
    console = Console("analyze", args.quiet or args.json)

    def body() -> int:
        cfg = config_from_args(args)
        tol = cfg.tolerances()
        scene, A = load_scene_set(args.scene)
        console.info(f"Сцена {scene.name or args.scene}: n = {A.ambient_dim}, симплексов {len(A)}")
        result = analyze_set(A, tol, float(cfg.alpha))
        if args.json:
            print(json.dumps(result, indent=1))
            return 0
        console.info(f"Касательных направлений в τ(A): {len(result['tangents'])}")
        for i, frame in enumerate(result["tangents"]):
            console.info(f"  T{i}: базис {np.round(frame, 6).tolist()}")
        lam = np.round(result["regular_vector"], 6).tolist()
        console.ok(f"Регулярный вектор λ = {lam}, запас {result['margin']:.6g}")
        console.info(f"Запас e_n: {result['e_n_margin']:.6g}")
        console.info(f"α-плоских групп при α = {result['alpha']}: {result['flat_groups']}")
        return 0

    return guarded(console, body)


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
