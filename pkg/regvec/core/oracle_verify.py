"""Независимые оракулы и статистические проверки сертификатов.

Оракулы намеренно просты (полный перебор, случайные пары, union-find по
сетке) и не используют оптимизированные процедуры построителя; общими
остаются только примитивы geom_core.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import DEFAULT_TOLERANCES, Tolerances, default_threads
from .geom_core import FloatArray, Subspace, basis_vector, min_distance
from .flattener import FlatImage, ZigzagMap

__all__ = [
    "UnionFind",
    "BilipschitzEstimate",
    "CoverReport",
    "VerificationReport",
    "grid_sphere_argmax",
    "estimate_bilipschitz",
    "check_graph_cover",
    "component_count",
    "round_trip_error",
    "membership_transport",
    "verify_pipeline",
]

PointMap = Callable[[FloatArray], FloatArray]


# --- direction oracle ------------------------------------------------------


def _sphere_grid(n: int, resolution: int) -> FloatArray:
    """Гиперсферическая сетка на полусфере (λ и −λ равноправны)."""
    if n == 1:
        return np.array([[1.0]])
    polar = [np.linspace(0.0, math.pi, resolution) for _ in range(n - 2)]
    last = np.arange(resolution) * (math.pi / resolution)
    angles = np.meshgrid(*polar, last, indexing="ij")
    flat = [a.reshape(-1) for a in angles]
    pts = np.ones((flat[0].shape[0], n))
    sin_acc = np.ones(flat[0].shape[0])
    for j, phi in enumerate(flat):
        pts[:, j] = sin_acc * np.cos(phi)
        sin_acc = sin_acc * np.sin(phi)
    pts[:, n - 1] = sin_acc
    return pts


def grid_sphere_argmax(
    subspaces: Sequence[Subspace],
    resolution: int = 1000,
    *,
    ambient_dim: int | None = None,
    chunk: int = 200_000,
) -> tuple[FloatArray, float]:
    """Полный перебор min_i d(λ, P_i) по сетке; погрешность ≤ шаг сетки π/resolution."""
    subs = list(subspaces)
    if not subs:
        n = ambient_dim if ambient_dim is not None else 2
        return basis_vector(n), math.inf
    n = subs[0].ambient_dim
    grid = _sphere_grid(n, resolution)
    best_val, best_lam = -math.inf, grid[0]
    for lo in range(0, grid.shape[0], chunk):
        part = grid[lo : lo + chunk]
        vals = min_distance(part, subs)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_lam = float(vals[i]), part[i]
    return best_lam.copy(), best_val


# --- bi-Lipschitz sampling -------------------------------------------------


@dataclass
class BilipschitzEstimate:
    forward: float
    inverse: float
    forward_pair: tuple[list[float], list[float]] | None
    inverse_pair: tuple[list[float], list[float]] | None
    pairs: int
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _as_point_map(fn: ZigzagMap | PointMap) -> PointMap:
    if isinstance(fn, ZigzagMap):
        return fn.apply
    return fn


def estimate_bilipschitz(
    fn: ZigzagMap | PointMap,
    box: tuple[ArrayLike, ArrayLike],
    n_pairs: int = 10_000,
    *,
    seed: int | None = None,
    threads: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> BilipschitzEstimate:
    """max |h(p)−h(q)|/|p−q| и обратное отношение по случайным парам.

    Половина пар состоит из независимых точек коробки, половина из близких пар
    (сдвиг порядка 1e-3 размера коробки), лучше ловящие локальный максимум.
    """
    seed = tol.seed if seed is None else seed
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    rng = np.random.default_rng(seed)
    n = lo.shape[0]
    p = rng.uniform(lo, hi, size=(n_pairs, n))
    far = rng.uniform(lo, hi, size=(n_pairs, n))
    near = p + rng.normal(size=(n_pairs, n)) * (1e-3 * float(np.max(hi - lo)))
    q = np.where((np.arange(n_pairs) % 2 == 0)[:, None], far, near)

    h = _as_point_map(fn)
    workers = max(1, min(threads or default_threads(), 32))
    chunks = np.array_split(np.arange(n_pairs), workers)

    def images(idx: NDArray[np.int64]) -> tuple[FloatArray, FloatArray]:
        return np.atleast_2d(h(p[idx])), np.atleast_2d(h(q[idx]))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(images, [c for c in chunks if c.size]))
    hp = np.vstack([a for a, _ in parts])
    hq = np.vstack([b for _, b in parts])

    dx = np.linalg.norm(p - q, axis=1)
    dy = np.linalg.norm(hp - hq, axis=1)
    floor = 10 * tol.eps_geom
    ok = (dx >= floor) & (dy >= floor)
    fwd = np.where(ok, dy / np.where(ok, dx, 1.0), -np.inf)
    inv = np.where(ok, dx / np.where(ok, dy, 1.0), -np.inf)
    if not ok.any():
        return BilipschitzEstimate(1.0, 1.0, None, None, 0, seed)
    i, j = int(np.argmax(fwd)), int(np.argmax(inv))
    return BilipschitzEstimate(
        float(fwd[i]),
        float(inv[j]),
        (p[i].tolist(), q[i].tolist()),
        (p[j].tolist(), q[j].tolist()),
        int(np.count_nonzero(ok)),
        seed,
    )


# --- image cover -----------------------------------------------------------


@dataclass
class CoverReport:
    samples: int
    off_graph: list[dict[str, Any]] = field(default_factory=list)
    steep: list[dict[str, Any]] = field(default_factory=list)
    max_residual: float = 0.0
    max_slope: float = 0.0
    slope_bound: float = 0.0

    @property
    def violations(self) -> int:
        return len(self.off_graph) + len(self.steep)

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": self.samples,
            "violations": self.violations,
            "max_residual": self.max_residual,
            "max_slope": self.max_slope,
            "slope_bound": self.slope_bound,
            "off_graph": self.off_graph[:20],
            "steep": self.steep[:20],
        }


def check_graph_cover(
    zmap: ZigzagMap,
    image: FlatImage,
    *,
    slack: float = 1e-6,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CoverReport:
    """Каждый образ лежит на некотором F_k; секущие внутри ветви не круче L_η."""
    bound = zmap.certificate.L_eta + slack
    report = CoverReport(len(image), slope_bound=bound)
    if len(image) == 0:
        return report
    pts = image.points
    x, s = pts[:, :-1], pts[:, -1]
    if zmap.b:
        resid = np.min(np.abs(zmap.floor_heights(x) - s[None, :]), axis=0)
    else:
        resid = np.full(pts.shape[0], np.inf)
    report.max_residual = float(resid.max())
    for i in np.flatnonzero(resid > tol.eps_mem):
        report.off_graph.append(
            {"sample": int(i), "simplex": int(image.source[i]), "residual": float(resid[i])}
        )

    branch = image.branch
    for b in np.unique(branch):
        idx = np.flatnonzero(branch == b)
        if idx.size < 2:
            continue
        dx = np.linalg.norm(x[idx, None, :] - x[None, idx, :], axis=2)
        ds = np.abs(s[idx, None] - s[None, idx])
        ok = dx > 1e-9
        slopes = np.where(ok, ds / np.where(ok, dx, 1.0), 0.0)
        a, c = np.unravel_index(int(np.argmax(slopes)), slopes.shape)
        top = float(slopes[a, c])
        report.max_slope = max(report.max_slope, top)
        if top > bound:
            report.steep.append(
                {"samples": [int(idx[a]), int(idx[c])], "simplex": int(image.source[idx[a]]), "slope": top}
            )
    return report


# --- connectivity oracle ---------------------------------------------------


class UnionFind:
    """Система непересекающихся множеств со сжатием путей и счётчиком компонент."""

    def __init__(self, size: int) -> None:
        self.parents = list(range(size))
        self.rank = [0] * size
        self.components = size

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        while elem != root:
            self.parents[elem], elem = root, self.parents[elem]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.components -= 1
        return True


def component_count(
    tester: Callable[[FloatArray], NDArray[np.bool_]],
    box: tuple[ArrayLike, ArrayLike],
    pitch: float,
) -> int:
    """Число компонент узлов сетки, прошедших ``tester``, при 2n-смежности."""
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    axes = [lo[j] + pitch * np.arange(int(math.floor((hi[j] - lo[j]) / pitch)) + 1) for j in range(lo.shape[0])]
    shape = tuple(a.shape[0] for a in axes)
    pts = np.stack([m.reshape(-1) for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    mask = np.asarray(tester(pts), dtype=bool).reshape(shape)

    ids = np.arange(mask.size).reshape(shape)
    uf = UnionFind(mask.size)
    for axis in range(mask.ndim):
        head = [slice(None)] * mask.ndim
        tail = [slice(None)] * mask.ndim
        head[axis] = slice(None, -1)
        tail[axis] = slice(1, None)
        both = mask[tuple(head)] & mask[tuple(tail)]
        for a, b in zip(ids[tuple(head)][both], ids[tuple(tail)][both]):
            uf.union(int(a), int(b))
    return len({uf.find(int(i)) for i in ids[mask]})


# --- pipeline checks -------------------------------------------------------


def round_trip_error(
    zmap: ZigzagMap, box: tuple[ArrayLike, ArrayLike], samples: int = 10_000, *, seed: int = 0
) -> float:
    """max |h^{-1}(h(q)) − q| по случайным q из коробки."""
    rng = np.random.default_rng(seed)
    q = rng.uniform(np.asarray(box[0], float), np.asarray(box[1], float), size=(samples, zmap.ambient_dim))
    back = zmap.apply_inverse(zmap.apply(q))
    return float(np.max(np.linalg.norm(back - q, axis=1), initial=0.0))


def membership_transport(
    zmap: ZigzagMap,
    box: tuple[ArrayLike, ArrayLike],
    samples: int = 10_000,
    *,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> int:
    """Число расхождений «q под H_k» и «h(q) под F_k» вне полосы допуска."""
    rng = np.random.default_rng(seed)
    q = rng.uniform(np.asarray(box[0], float), np.asarray(box[1], float), size=(samples, zmap.ambient_dim))
    p = zmap.apply(q)
    if zmap.b == 0:
        return 0
    floors = zmap.floor_heights(p[:, :-1])
    band = 10 * tol.eps_eval
    mismatches = 0
    for k, H in enumerate(zmap.system.surfaces):
        src = H.residual(q)
        dst = p[:, -1] - floors[k]
        off = (np.abs(src) > band) & (np.abs(dst) > band)
        mismatches += int(np.count_nonzero(off & (np.sign(src) != np.sign(dst))))
    return mismatches


@dataclass
class VerificationReport:
    cover: CoverReport
    bilipschitz: BilipschitzEstimate
    round_trip: float
    transport_mismatches: int
    certificate: dict[str, float]
    eps_rt: float

    @property
    def failures(self) -> list[str]:
        out = []
        if self.cover.violations:
            out.append(f"{self.cover.violations} graph-cover violations")
        if self.bilipschitz.forward > self.certificate["L_fwd"] * 1.01:
            out.append("sampled forward constant exceeds the certificate")
        if self.bilipschitz.inverse > self.certificate["L_inv"] * 1.01:
            out.append("sampled inverse constant exceeds the certificate")
        if self.round_trip > self.eps_rt:
            out.append(f"round-trip error {self.round_trip:.3g}")
        if self.transport_mismatches:
            out.append(f"{self.transport_mismatches} membership-transport mismatches")
        return out

    @property
    def verified(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "verified": self.verified,
            "failures": self.failures,
            "cover": self.cover.to_dict(),
            "bilipschitz": self.bilipschitz.to_dict(),
            "round_trip": self.round_trip,
            "transport_mismatches": self.transport_mismatches,
        }


def verify_pipeline(
    zmap: ZigzagMap,
    image: FlatImage,
    box: tuple[ArrayLike, ArrayLike],
    *,
    samples: int = 10_000,
    seed: int | None = None,
    threads: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """Все проверки построенного h: покрытие, оценки Липшица, обратимость, перенос E."""
    seed = tol.seed if seed is None else seed
    cert = zmap.certificate
    return VerificationReport(
        cover=check_graph_cover(zmap, image, tol=tol),
        bilipschitz=estimate_bilipschitz(zmap, box, samples, seed=seed, threads=threads, tol=tol),
        round_trip=round_trip_error(zmap, box, samples, seed=seed + 1),
        transport_mismatches=membership_transport(zmap, box, samples, seed=seed + 2, tol=tol),
        certificate={"L_fwd": cert.L_fwd, "L_inv": cert.L_inv},
        eps_rt=tol.eps_rt,
    )
