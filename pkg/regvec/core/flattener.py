"""Зигзагообразный гомеоморфизм h: выпрямление регулярной системы.

Соседние гиперповерхности с общим направлением образуют «прогон». На
нижнем прогоне h есть карта (π_μ q, q_μ); на каждом следующем h есть сдвиг вдоль
e_n над уже построенным отображением:

    h(q) = h(π_μ q + ξ_s(π_μ q)·μ) + (q_μ − ξ_s(π_μ q))·e_n,

где H_s: нижняя поверхность прогона. Образы F_k = h(H_k) являются графиками η_k
для e_n; η_k вычисляются трассировкой слоёв вверх от карты.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractViolation, NumericFailure
from .geom_core import FloatArray, householder_frame
from .lip_calculus import LipFn, Side
from .pl_complex import PLSet
from .regular_systems import RegularSystem, validate

__all__ = [
    "Run",
    "Certificate",
    "ZigzagMap",
    "FloorFn",
    "FlatImage",
    "build_flattening",
    "apply",
    "apply_inverse",
    "flatten_set",
]


@dataclass(frozen=True, eq=False)
class Run:
    """Записи start..stop−1 (с нуля) с общим направлением."""

    start: int
    stop: int
    direction: FloatArray
    frame: FloatArray


@dataclass(frozen=True)
class Certificate:
    L_fwd: float
    L_inv: float
    alpha_reg: float
    L_eta: float
    floor_lipschitz: tuple[float, ...] = ()
    runs: tuple[dict[str, Any], ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "L_fwd": self.L_fwd,
            "L_inv": self.L_inv,
            "alpha_reg": self.alpha_reg,
            "L_eta": self.L_eta,
            "floor_lipschitz": list(self.floor_lipschitz),
            "runs": [dict(r) for r in self.runs],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Certificate":
        return cls(
            float(data["L_fwd"]),
            float(data["L_inv"]),
            float(data["alpha_reg"]),
            float(data["L_eta"]),
            tuple(float(v) for v in data.get("floor_lipschitz", ())),
            tuple(dict(r) for r in data.get("runs", ())),
        )

    def agrees_with(self, other: "Certificate", rel: float = 1e-9) -> bool:
        pairs = [
            (self.L_fwd, other.L_fwd),
            (self.L_inv, other.L_inv),
            (self.alpha_reg, other.alpha_reg),
            (self.L_eta, other.L_eta),
        ]
        return all(math.isclose(a, b, rel_tol=rel, abs_tol=rel) for a, b in pairs)


def _runs(S: RegularSystem) -> tuple[Run, ...]:
    if S.b == 0:
        assert S.chart_direction is not None
        mu = S.chart_direction
        return (Run(0, 0, mu, householder_frame(mu)),)
    runs: list[Run] = []
    start = 0
    for i in range(1, S.b + 1):
        if i == S.b or not np.array_equal(S.surfaces[i].direction, S.surfaces[start].direction):
            mu = S.surfaces[start].direction
            runs.append(Run(start, i, mu, householder_frame(mu)))
            start = i
    return tuple(runs)


@dataclass(frozen=True, eq=False)
class _Trace:
    heights: FloatArray  # (b, m): η_k
    anchors: tuple[FloatArray, ...]  # опорная точка прогона в R^n, (m, n)
    levels: tuple[FloatArray, ...]  # η в опорной точке, (m,)


@dataclass(frozen=True, eq=False)
class ZigzagMap:
    system: RegularSystem
    runs: tuple[Run, ...]
    certificate: Certificate
    tol: Tolerances = DEFAULT_TOLERANCES
    _memo: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def ambient_dim(self) -> int:
        return self.system.ambient_dim

    @property
    def b(self) -> int:
        return self.system.b

    @property
    def floor_fns(self) -> list["FloorFn"]:
        return [FloorFn(self, k) for k in range(1, self.b + 1)]

    # --- forward ------------------------------------------------------

    def apply(self, q: ArrayLike) -> FloatArray:
        arr = np.asarray(q, dtype=float)
        pts = np.atleast_2d(arr).astype(float, copy=True)
        S = self.system
        run_of = np.zeros(pts.shape[0], dtype=np.int64)
        for r in range(1, len(self.runs)):
            above = S.surfaces[self.runs[r].start].residual(pts) > 0
            run_of[above] = r

        lift = np.zeros(pts.shape[0])
        for r in reversed(range(1, len(self.runs))):
            mask = run_of >= r
            if not mask.any():
                continue
            run = self.runs[r]
            cur = pts[mask]
            w = cur @ run.frame
            g = S.surfaces[run.start].height_fn.evaluate(w)
            lift[mask] += cur @ run.direction - g
            pts[mask] = w @ run.frame.T + g[:, None] * run.direction
        base = self.runs[0]
        out = np.hstack([pts @ base.frame, (pts @ base.direction + lift)[:, None]])
        return out[0] if arr.ndim == 1 else out

    # --- trace and inverse -------------------------------------------

    def _trace(self, x: FloatArray) -> _Trace:
        key = (x.shape, x.tobytes())
        hit = self._memo.get("trace")
        if hit is not None and hit[0] == key:
            return hit[1]
        S = self.system
        m = x.shape[0]
        heights = np.empty((S.b, m))
        anchors, levels = [], []
        base = self.runs[0]
        anchor = x @ base.frame.T
        level = np.zeros(m)
        for r, run in enumerate(self.runs):
            anchors.append(anchor)
            levels.append(level)
            w = anchor @ run.frame
            t0 = anchor @ run.direction
            for k in range(run.start, run.stop):
                heights[k] = level + S.surfaces[k].height_fn.evaluate(w) - t0
            if r + 1 < len(self.runs):
                g = S.upper_fn(run.stop).evaluate(w)
                level = level + g - t0
                anchor = w @ run.frame.T + g[:, None] * run.direction
        trace = _Trace(heights, tuple(anchors), tuple(levels))
        self._memo["trace"] = (key, trace)
        return trace

    def floor_heights(self, x: ArrayLike) -> FloatArray:
        """Все η_k(x) сразу: массив (b, m)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.ambient_dim - 1:
            raise ContractViolation(f"floor heights take points of R^{self.ambient_dim - 1}")
        return self._trace(pts).heights

    def apply_inverse(self, p: ArrayLike) -> FloatArray:
        arr = np.asarray(p, dtype=float)
        pts = np.atleast_2d(arr)
        x, s = pts[:, :-1], pts[:, -1]
        trace = self._trace(np.ascontiguousarray(x))
        run_of = np.zeros(pts.shape[0], dtype=np.int64)
        for r in range(1, len(self.runs)):
            run_of[s > trace.levels[r]] = r
        out = np.empty_like(pts)
        for r, run in enumerate(self.runs):
            mask = run_of == r
            if mask.any():
                out[mask] = trace.anchors[r][mask] + (s[mask] - trace.levels[r][mask])[:, None] * run.direction
        return out[0] if arr.ndim == 1 else out

    def image_side(self, k: int, p: ArrayLike) -> NDArray[np.int64]:
        """Положение образа относительно F_k (−1 ниже, 0 на, 1 выше)."""
        if not 1 <= k <= self.b:
            raise ContractViolation(f"floor index {k} outside 1..{self.b}")
        pts = np.atleast_2d(np.asarray(p, dtype=float))
        diff = pts[:, -1] - self.floor_heights(pts[:, :-1])[k - 1]
        eps = self.tol.eps_eval
        return np.where(diff < -eps, int(Side.BELOW), np.where(diff > eps, int(Side.ABOVE), int(Side.ON)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "ambient_dim": self.ambient_dim,
            "hypersurfaces": self.b,
            "runs": [
                {"start": r.start + 1, "stop": r.stop, "direction": r.direction.tolist()}
                for r in self.runs
            ],
            "certificate": self.certificate.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class FloorFn(LipFn):
    """η_k как функция на R^{n−1}."""

    owner: ZigzagMap
    index: int
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", self.owner.ambient_dim - 1)
        object.__setattr__(self, "lipschitz", self.owner.certificate.floor_lipschitz[self.index - 1])

    def evaluate(self, points: FloatArray) -> FloatArray:
        return self.owner.floor_heights(points)[self.index - 1]


def apply(zmap: ZigzagMap, q: ArrayLike) -> FloatArray:
    return zmap.apply(q)


def apply_inverse(zmap: ZigzagMap, p: ArrayLike) -> FloatArray:
    return zmap.apply_inverse(p)


# --- certificate -----------------------------------------------------------


def _certify(S: RegularSystem, runs: Sequence[Run]) -> Certificate:
    """Константы по цепочке прогонов.

    Φ, Ψ: константы Липшица карты опорной поверхности прогона и обратной
    к ней, D: константа дрейфа η_s − ξ_s вдоль этой поверхности.
    """
    phi = psi = 1.0
    drift = 0.0
    floors = [0.0] * S.b
    per_run = []
    for r, run in enumerate(runs):
        if r > 0:
            wall = S.surfaces[run.start]
            prev = runs[r - 1].direction
            there = wall.transfer_bound(run.direction, prev)
            back = wall.transfer_bound(prev, run.direction)
            drift = (drift + S.upper_fn(run.start).lipschitz) * there + wall.lipschitz
            phi *= there
            psi *= back
        for k in range(run.start, run.stop):
            floors[k] = (drift + S.surfaces[k].lipschitz) * psi
        per_run.append(
            {
                "start": run.start + 1,
                "stop": run.stop,
                "phi": phi,
                "psi": psi,
                "drift": drift,
                "forward": max(phi, 1.0) + drift,
                "inverse": max(psi, 1.0) + drift * psi,
            }
        )
    L_fwd = max(r["forward"] for r in per_run)
    L_inv = max(r["inverse"] for r in per_run)
    L_eta = max(floors, default=0.0)
    if not all(math.isfinite(v) for v in (L_fwd, L_inv, L_eta)):
        raise NumericFailure("certificate is unbounded", {"runs": per_run})
    return Certificate(
        L_fwd, L_inv, 1.0 / math.sqrt(1.0 + L_eta * L_eta), L_eta, tuple(floors), tuple(per_run)
    )


def build_flattening(
    S: RegularSystem, *, check: bool = True, tol: Tolerances = DEFAULT_TOLERANCES
) -> ZigzagMap:
    """h для регулярной системы; при ``check`` система сначала проверяется."""
    if check:
        report = validate(S, n_samples=tol.validate_samples, tol=tol)
        if not report.valid:
            raise ContractViolation(
                f"regular system failed validation: {len(report.monotonicity)} monotonicity and "
                f"{sum(report.agreement.values())} agreement violations"
            )
    runs = _runs(S)
    return ZigzagMap(S, runs, _certify(S, runs), tol)


# --- image of A ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlatImage:
    preimages: FloatArray
    points: FloatArray
    source: NDArray[np.int64]
    sheet: NDArray[np.int64]
    seed: int

    @property
    def branch(self) -> NDArray[np.int64]:
        """Номер ветви (симплекс, лист) одним целым."""
        return self.source * (int(self.sheet.max(initial=0)) + 1) + self.sheet

    def __len__(self) -> int:
        return int(self.points.shape[0])


def flatten_set(
    zmap: ZigzagMap,
    A: PLSet,
    samples_per_simplex: int = 64,
    *,
    seed: int | None = None,
) -> FlatImage:
    """Образ выборки Халтона каждого симплекса; лист: ближайшая H_k."""
    seed = zmap.tol.seed if seed is None else seed
    pts, source = A.sample_points(samples_per_simplex, seed)
    S = zmap.system
    if S.b and pts.shape[0]:
        resid = np.abs(np.vstack([H.residual(pts) for H in S.surfaces]))
        sheet = np.argmin(resid, axis=0).astype(np.int64) + 1
    else:
        sheet = np.zeros(pts.shape[0], dtype=np.int64)
    image = zmap.apply(pts) if pts.shape[0] else pts.copy()
    return FlatImage(pts, image, source, sheet, seed)
