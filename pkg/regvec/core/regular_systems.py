"""Регулярные системы гиперповерхностей.

Система: упорядоченный набор графиков H_1..H_b (H_k есть график для λ_k)
с неявными стражами H_0 = −∞ и H_{b+1} = +∞. Здесь же проверка системы,
слои G_k, области Λ_k, лемма о связности, лемма о продолжении и
рекурсивный построитель системы, совместимой с PL-множеством.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage, optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractViolation, NumericFailure
from .geom_core import (
    FloatArray,
    Subspace,
    basis_vector,
    fiber_direction_search,
    householder_frame,
    max_min_direction,
    min_distance,
    sphere_mesh,
    tilde_pi,
    unit_vector,
)
from .lip_calculus import (
    ClampedHypersurface,
    Glued,
    Hypersurface,
    LiftedHypersurface,
    LipFn,
    constant,
    fmax,
    fmin,
    mcshane_extend,
    order_statistics,
)
from .pl_complex import (
    PLSet,
    flat_groups,
    graph_decompose,
    lipschitz_bound,
    regularity_margin,
    shadow_boundary,
    tangent_set,
)

__all__ = [
    "Box",
    "RegularSystem",
    "ValidationReport",
    "LambdaRegion",
    "validate",
    "slab_membership",
    "slab_range",
    "lambda_region",
    "split_components",
    "extend_with",
    "build_system",
    "default_box",
]

Box = tuple[FloatArray, FloatArray]


def default_box(A: PLSet) -> Box:
    """Габариты A с запасом: четверть размера плюс 0.5."""
    lo, hi = A.bounding_box()
    pad = 0.25 * float(np.max(hi - lo, initial=0.0)) + 0.5
    return lo - pad, hi + pad


def _box_corners(box: Box) -> FloatArray:
    lo, hi = box
    n = lo.shape[0]
    grid = np.array(np.meshgrid(*[[0.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    return lo + grid * (hi - lo)


def _project_box(box: Box, frame: FloatArray) -> Box:
    proj = _box_corners(box) @ frame
    return proj.min(axis=0), proj.max(axis=0)


@dataclass(frozen=True, eq=False)
class RegularSystem:
    """H_1..H_b; ``chart_direction``: направление единственного слоя при b = 0."""

    ambient_dim: int
    surfaces: tuple[Hypersurface, ...] = ()
    chart_direction: FloatArray | None = None
    notes: dict[str, Any] = field(default_factory=dict, repr=False)
    _upper: dict[int, Hypersurface] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        surfaces = tuple(self.surfaces)
        for i, H in enumerate(surfaces):
            if H.ambient_dim != self.ambient_dim:
                raise ContractViolation(f"hypersurface {i + 1} lives in R^{H.ambient_dim}")
        object.__setattr__(self, "surfaces", surfaces)
        if self.chart_direction is None:
            chart = surfaces[0].direction if surfaces else basis_vector(self.ambient_dim)
        else:
            chart = unit_vector(self.chart_direction, self.ambient_dim)
        object.__setattr__(self, "chart_direction", chart)

    @classmethod
    def empty(cls, n: int, direction: ArrayLike | None = None, **notes: Any) -> "RegularSystem":
        chart = basis_vector(n) if direction is None else unit_vector(direction, n)
        return cls(n, (), chart, dict(notes))

    def replace(self, surfaces: Sequence[Hypersurface], **notes: Any) -> "RegularSystem":
        merged = {**self.notes, **notes}
        return RegularSystem(self.ambient_dim, tuple(surfaces), self.chart_direction, merged)

    @property
    def b(self) -> int:
        return len(self.surfaces)

    @property
    def entries(self) -> list[tuple[Hypersurface, FloatArray]]:
        return [(H, H.direction) for H in self.surfaces]

    @property
    def directions(self) -> FloatArray:
        if not self.surfaces:
            return np.zeros((0, self.ambient_dim))
        return np.vstack([H.direction for H in self.surfaces])

    def surface(self, k: int) -> Hypersurface:
        """H_k, 1 ≤ k ≤ b."""
        if not 1 <= k <= self.b:
            raise ContractViolation(f"hypersurface index {k} outside 1..{self.b}")
        return self.surfaces[k - 1]

    def direction(self, k: int) -> FloatArray:
        """λ_k со стражами λ_0 = λ_1, λ_{b+1} = λ_b."""
        if self.b == 0:
            assert self.chart_direction is not None
            return self.chart_direction
        return self.surfaces[min(max(k, 1), self.b) - 1].direction

    def lower_fn(self, k: int) -> LipFn:
        """ξ_k для слоя G_k (−∞ при k = 0)."""
        if k == 0:
            return constant(-math.inf, self.ambient_dim - 1)
        return self.surface(k).height_fn

    def upper(self, k: int) -> Hypersurface | None:
        """H_{k+1} как график для λ_k; None для k = b."""
        if k >= self.b:
            return None
        if k == 0:
            return self.surfaces[0]
        cached = self._upper.get(k)
        if cached is None:
            cached = self.surfaces[k].regraph(self.direction(k))
            self._upper[k] = cached
        return cached

    def upper_fn(self, k: int) -> LipFn:
        """ξ'_k (+∞ при k = b)."""
        H = self.upper(k)
        if H is None:
            return constant(math.inf, self.ambient_dim - 1)
        return H.height_fn

    @property
    def box(self) -> Box:
        box = self.notes.get("box")
        if box is not None:
            return np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
        n = self.ambient_dim
        return -2.0 * np.ones(n), 2.0 * np.ones(n)


# --- slabs -----------------------------------------------------------------


def _sides(S: RegularSystem, points: FloatArray, eps: float) -> NDArray[np.int64]:
    if S.b == 0:
        return np.zeros((0, points.shape[0]), dtype=np.int64)
    return np.vstack([H.side(points, eps) for H in S.surfaces])


def slab_membership(
    S: RegularSystem, q: ArrayLike, *, tol: Tolerances = DEFAULT_TOLERANCES
) -> NDArray[np.int64] | int:
    """Наименьшее k с q ∈ G_k: число гиперповерхностей строго ниже q ("on" уходит вниз)."""
    arr = np.asarray(q, dtype=float)
    pts = np.atleast_2d(arr)
    k = (_sides(S, pts, tol.eps_eval) > 0).sum(axis=0).astype(np.int64)
    return int(k[0]) if arr.ndim == 1 else k


def slab_range(
    S: RegularSystem, points: ArrayLike, *, tol: Tolerances = DEFAULT_TOLERANCES
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """(нижний, верхний) номер слоя с учётом точек на гиперповерхностях."""
    sides = _sides(S, np.atleast_2d(np.asarray(points, dtype=float)), tol.eps_eval)
    return (sides > 0).sum(axis=0), (sides >= 0).sum(axis=0)


# --- validation ------------------------------------------------------------


@dataclass
class ValidationReport:
    samples: int
    seed: int
    monotonicity: list[dict[str, Any]] = field(default_factory=list)
    agreement: dict[int, int] = field(default_factory=dict)
    membership: list[dict[str, Any]] = field(default_factory=list)
    membership_checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.monotonicity and not any(self.agreement.values()) and not self.membership

    def to_dict(self) -> dict[str, Any]:
        return {
            "valid": self.valid,
            "samples": self.samples,
            "seed": self.seed,
            "monotonicity": self.monotonicity,
            "agreement_mismatches": {str(k): v for k, v in self.agreement.items()},
            "membership_violations": self.membership[:20],
            "membership_violation_count": len(self.membership),
            "membership_checked": self.membership_checked,
        }


def validate(
    S: RegularSystem,
    A: PLSet | None = None,
    n_samples: int = 10_000,
    *,
    box: Box | None = None,
    seed: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ValidationReport:
    """Выборочная проверка условий (i), (ii) и совместимости с A."""
    seed = tol.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    lo, hi = box if box is not None else S.box
    report = ValidationReport(n_samples, seed)

    for k in range(1, S.b):
        lam = S.direction(k)
        pts = rng.uniform(lo, hi, size=(n_samples, S.ambient_dim))
        shadow = pts @ householder_frame(lam)
        gap = S.upper_fn(k).evaluate(shadow) - S.lower_fn(k).evaluate(shadow)
        i = int(np.argmin(gap))
        if gap[i] < -2 * tol.eps_eval:
            report.monotonicity.append({"k": k, "min_gap": float(gap[i]), "at": shadow[i].tolist()})

        upper = S.upper(k)
        assert upper is not None
        r_k = upper.residual(pts)
        r_next = S.surface(k + 1).residual(pts)
        band = 10 * tol.eps_eval
        off = (np.abs(r_k) > band) & (np.abs(r_next) > band)
        report.agreement[k] = int(np.count_nonzero(off & (np.sign(r_k) != np.sign(r_next))))

    if A is not None and not A.is_empty:
        per = max(4, n_samples // max(len(A), 1))
        pts, branch = A.sample_points(per, seed)
        report.membership_checked = int(pts.shape[0])
        if S.b == 0:
            resid = np.full(pts.shape[0], np.inf)
        else:
            resid = np.min(np.abs(np.vstack([H.residual(pts) for H in S.surfaces])), axis=0)
        for i in np.flatnonzero(resid > tol.eps_mem):
            report.membership.append(
                {"simplex": int(branch[i]), "sample": int(i), "residual": float(resid[i])}
            )
    return report


# --- Λ_k -------------------------------------------------------------------


def _sampled_normals(H: Hypersurface, box: Box, count: int, seed: int) -> FloatArray:
    """Нормали касательных гиперплоскостей графика в случайных точках (конечные разности)."""
    lo, hi = _project_box(box, H.frame)
    d = H.ambient_dim - 1
    rng = np.random.default_rng(seed)
    w = rng.uniform(lo, hi, size=(count, d))
    step = 1e-6 * (1.0 + float(np.max(np.abs(hi - lo), initial=1.0)))
    grad = np.zeros((count, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        grad[:, j] = (H.height_fn.evaluate(w + e) - H.height_fn.evaluate(w - e)) / (2 * step)
    normals = H.direction[None, :] - grad @ H.frame.T
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def _certified(H: Hypersurface) -> bool:
    if isinstance(H, ClampedHypersurface):
        return H.tangents is not None or all(_certified(part) for part in H.parts)
    return H.tangents is not None or isinstance(H, LiftedHypersurface)


@dataclass(frozen=True, eq=False)
class LambdaRegion:
    """Вершины сферической сетки из компоненты Λ_k, содержащей λ_k."""

    points: FloatArray
    edges: NDArray[np.int64]
    member: NDArray[np.bool_]
    margins: FloatArray
    direction: FloatArray
    threshold: float
    surfaces: tuple[Hypersurface, ...]
    normals: tuple[FloatArray | None, ...]

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.points)

    def margins_for(self, lams: ArrayLike) -> FloatArray:
        arr = np.atleast_2d(np.asarray(lams, dtype=float))
        out = np.full(arr.shape[0], np.inf)
        for H, nrm in zip(self.surfaces, self.normals):
            if nrm is None:
                vals = H.margins_for(arr)
            else:
                vals = np.clip((arr @ nrm.T).min(axis=1), 0.0, 1.0)
            np.minimum(out, vals, out=out)
        return out

    def contains(self, lams: ArrayLike) -> NDArray[np.bool_]:
        arr = np.atleast_2d(np.asarray(lams, dtype=float))
        _, idx = self._tree.query(arr)
        return self.member[idx] & (self.margins_for(arr) > self.threshold)

    @property
    def margin(self) -> float:
        return float(self.margins[self.member].min()) if self.member.any() else 0.0

    @property
    def own_margin(self) -> float:
        """Запас самого λ_k для стенок слоя."""
        return float(self.margins_for(self.direction)[0])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.member))


def lambda_region(
    S: RegularSystem,
    k: int,
    mesh_res: int | None = None,
    *,
    box: Box | None = None,
    normal_samples: int = 256,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LambdaRegion:
    """Связная компонента {λ : запас для H_k ∪ H_{k+1} > α_Λ}, содержащая λ_k.

    Для k = 0 учитывается только H_1, для k = b только H_b.
    """
    if not 0 <= k <= S.b:
        raise ContractViolation(f"slab index {k} outside 0..{S.b}")
    n = S.ambient_dim
    lam = S.direction(k)
    mesh = sphere_mesh(n, mesh_res or tol.mesh_vertices(n))
    box = box if box is not None else S.box
    surfaces = ([S.surface(k)] if k >= 1 else []) + ([S.surface(k + 1)] if k < S.b else [])
    normals = tuple(
        None if _certified(H) else _sampled_normals(H, box, normal_samples, tol.seed + i)
        for i, H in enumerate(surfaces)
    )
    scratch = LambdaRegion(
        mesh.points, mesh.edges(), np.ones(len(mesh), dtype=bool), np.zeros(len(mesh)),
        lam, tol.alpha_lambda, tuple(surfaces), normals,
    )
    own = scratch.own_margin
    if own <= tol.alpha_lambda:
        raise ContractViolation(
            f"λ_{k} has regularity margin {own:.3g} for H_{k} ∪ H_{k + 1}, below {tol.alpha_lambda}"
        )
    margins = scratch.margins_for(mesh.points)
    good = margins > tol.alpha_lambda
    edges = scratch.edges
    keep = good[edges[:, 0]] & good[edges[:, 1]]
    e = edges[keep]
    graph = coo_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])), shape=(len(mesh), len(mesh)))
    _, labels = connected_components(graph, directed=False)
    scores = np.where(good, mesh.points @ lam, -np.inf)
    seed_vertex = int(np.argmax(scores))
    member = good & (labels == labels[seed_vertex])
    return LambdaRegion(
        mesh.points, edges, member, margins, lam, tol.alpha_lambda, tuple(surfaces), normals
    )


# --- connectivity lemma ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class _GridSelector:
    """Принадлежность точки объединению компонент 1..upto по меткам сетки."""

    labels: NDArray[np.int64]
    origin: FloatArray
    pitch: float
    upto: int
    intervals: tuple[tuple[float, float], ...] | None = None

    def __call__(self, points: FloatArray) -> NDArray[np.bool_]:
        if self.intervals is not None:
            x = points[:, 0]
            mask = np.zeros(points.shape[0], dtype=bool)
            for a, b in self.intervals[: self.upto]:
                mask |= (x >= a) & (x <= b)
            return mask
        idx = np.rint((points - self.origin) / self.pitch).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.array(self.labels.shape)), axis=1)
        out = np.zeros(points.shape[0], dtype=bool)
        if inside.any():
            lab = self.labels[tuple(idx[inside].T)]
            out[inside] = (lab >= 1) & (lab <= self.upto)
        return out


def _label_slab(
    lower: LipFn, upper: LipFn, lo: FloatArray, hi: FloatArray, pitch: float, band: float
) -> tuple[NDArray[np.int64], int, list[FloatArray]]:
    axes = [lo[j] + pitch * np.arange(int(math.ceil((hi[j] - lo[j]) / pitch)) + 1) for j in range(lo.shape[0])]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    gap = upper.evaluate(pts) - lower.evaluate(pts)
    mask = (gap > band).reshape(mesh[0].shape)
    labels, count = ndimage.label(mask)
    return labels.astype(np.int64), int(count), axes


def split_components(
    S: RegularSystem,
    k: int,
    *,
    box: Box | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> RegularSystem:
    """Разрезает слой G_k с ν ≥ 2 компонентами внутренности вставкой ν−1 гиперповерхностей."""
    if not 1 <= k < S.b:
        return S
    d = S.ambient_dim - 1
    if d == 0:
        return S
    lam = S.direction(k)
    lower, upper = S.lower_fn(k), S.upper_fn(k)
    lo, hi = _project_box(box if box is not None else S.box, householder_frame(lam))
    extent = float(np.max(hi - lo))
    limit = {1: 4096, 2: 256}.get(d, 40)

    coarse = max(extent / 64.0, 1e-9)
    _, _, axes = _label_slab(lower, upper, lo, hi, coarse, math.inf)
    grid = np.stack([m.reshape(-1) for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    thickness = float(np.max(upper.evaluate(grid) - lower.evaluate(grid), initial=0.0))
    band = max(10 * tol.eps_eval, 1e-9 * (1.0 + extent))
    if thickness <= band:
        return S

    pitch = max(thickness / tol.grid_divisions, extent / limit)
    labels, count, axes = _label_slab(lower, upper, lo, hi, pitch, band)
    if count <= 1:
        return S
    _, recount, _ = _label_slab(lower, upper, lo, hi, pitch / 2, band)
    if recount != count:
        raise NumericFailure(
            "slab component detection is unstable at this resolution; refine the grid",
            {"slab": k, "components": count, "refined_components": recount, "pitch": pitch},
        )

    intervals = None
    if d == 1:
        intervals = _refine_intervals(lower, upper, labels, axes[0], count, band)
    new = [
        Hypersurface(lam, Glued(lower, upper, _GridSelector(labels, lo, pitch, i, intervals)))
        for i in range(1, count)
    ]
    surfaces = S.surfaces[:k] + tuple(new) + S.surfaces[k:]
    return S.replace(surfaces)


def _refine_intervals(
    lower: LipFn,
    upper: LipFn,
    labels: NDArray[np.int64],
    axis: FloatArray,
    count: int,
    band: float,
) -> tuple[tuple[float, float], ...]:
    """Точные концы интервалов {ξ' − ξ > band} на прямой (метод Брента)."""

    def gap(x: float) -> float:
        pt = np.array([[x]])
        return float(upper.evaluate(pt)[0] - lower.evaluate(pt)[0]) - band

    out = []
    for lab in range(1, count + 1):
        idx = np.flatnonzero(labels == lab)
        i0, i1 = int(idx[0]), int(idx[-1])
        a = optimize.brentq(gap, axis[i0 - 1], axis[i0]) if i0 > 0 else -math.inf
        b = optimize.brentq(gap, axis[i1], axis[i1 + 1]) if i1 + 1 < axis.shape[0] else math.inf
        out.append((a, b))
    return tuple(out)


# --- extension lemma -------------------------------------------------------


def extend_with(
    S: RegularSystem,
    k: int,
    X: PLSet,
    *,
    strict: bool = True,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> RegularSystem:
    """Вставляет между H_k и H_{k+1} графики, содержащие X ∩ G_k.

    При ``strict`` X обязано лежать в G_k; иначе покрывается только X ∩ G_k.
    """
    if X.is_empty:
        return S
    if not 0 <= k <= S.b:
        raise ContractViolation(f"slab index {k} outside 0..{S.b}")
    lam = S.direction(k)

    if strict and S.b:
        pts, branch = X.sample_points(8, tol.seed)
        lo, hi = slab_range(S, pts, tol=tol)
        bad = np.flatnonzero((lo > k) | (hi < k))
        if bad.size:
            raise ContractViolation(f"simplex {int(branch[bad[0]])} is not contained in slab G_{k}")

    alpha = regularity_margin(lam, X)
    if alpha <= tol.eps_geom:
        worst = int(np.argmin([min_distance(lam[None, :], [s.direction])[0] for s in X]))
        raise ContractViolation(f"λ_{k} is tangent to simplex {worst}")
    alpha = min(alpha, 1.0)
    L = lipschitz_bound(alpha)
    zetas = [mcshane_extend([piece], L, tol=tol) for piece in graph_decompose(X, lam, alpha, tol=tol)]
    floor, ceiling = S.lower_fn(k), S.upper_fn(k)
    new = [Hypersurface(lam, fmin(fmax(z, floor), ceiling)) for z in order_statistics(zetas)]
    surfaces = S.surfaces[:k] + tuple(new) + S.surfaces[k:]
    if len(surfaces) > tol.max_slabs:
        raise NumericFailure("hypersurface count exceeds the cap", {"count": len(surfaces)})
    return S.replace(surfaces)


# --- builder ---------------------------------------------------------------


def _build_line(A: PLSet, lam_t: FloatArray) -> RegularSystem:
    """n = 1: точки A по возрастанию вдоль λ = ±1."""
    sign = 1.0 if lam_t[0] >= 0 else -1.0
    heights = np.sort(sign * A.vertices()[:, 0])
    kept: list[float] = []
    for h in heights:
        if not kept or h - kept[-1] > 1e-12 * (1.0 + abs(h)):
            kept.append(float(h))
    surfaces = tuple(Hypersurface.flat([sign], h) for h in kept)
    return RegularSystem(1, surfaces, np.array([sign]), {"mode": "line"})


def _nearest_on_fiber(e: FloatArray, y: FloatArray, target: FloatArray) -> FloatArray:
    """Точка полуокружности cos θ·y + sin θ·e, ближайшая к target."""
    edge = math.pi / 2 - 1e-6
    theta = math.atan2(float(target @ e), float(target @ y))
    theta = min(max(theta, -edge), edge)
    return math.cos(theta) * y + math.sin(theta) * e


def _slab_groups(A: PLSet, S: RegularSystem, widen: int, tol: Tolerances) -> list[list[int]]:
    """X_p: симплексы, чьи точки вне стенок попадают в слой p.

    Точки на стенках не учитываются; симплексы целиком в стенках пропускаются.
    """
    groups: list[list[int]] = [[] for _ in range(S.b + 1)]
    for i, s in enumerate(A.simplices):
        if S.b == 0:
            groups[0].append(i)
            continue
        sides = _sides(S, s.sample(16, tol.seed + i), tol.eps_eval)
        free = np.all(sides != 0, axis=0)
        if not free.any():
            continue
        index = (sides[:, free] > 0).sum(axis=0)
        lo, hi = int(index.min()), int(index.max())
        for p in range(max(lo - widen, 0), min(hi + widen, S.b) + 1):
            groups[p].append(i)
    return groups


def _split_all(S: RegularSystem, box: Box, tol: Tolerances) -> RegularSystem:
    if S.ambient_dim < 2:
        return S
    for k in reversed(range(1, S.b)):
        S = split_components(S, k, box=box, tol=tol)
    return S


@dataclass
class _SlabPlan:
    """Итог шага 2 для слоя G_p: стенки Ĥ_1..Ĥ_b̂ и группы X_{p,0..b̂}."""

    slab: int
    members: list[int]
    direction: FloatArray
    refined: tuple[Hypersurface, ...] = ()
    groups: list[list[int]] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)


def build_system(
    A: PLSet,
    lam_target: ArrayLike | None = None,
    *,
    box: Box | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> RegularSystem:
    """Регулярная система, совместимая с A, все λ_k в B(λ_target, lambda_ball).

    Шаг 1: проекция вдоль e вне B(±λ_target, η), рекурсия на тени границ
    α-плоских кусков, подъём цилиндрами с λ_k ∈ B(λ_target, η/2).
    Шаг 2: в каждом слое свой μ и рекурсия в N_μ, λ̂_k на слоях π̃_μ^{-1}
    внутри B(λ_p, r) ∩ Λ_p. Шаг 3: зажим между стенками и перенумерация.
    Шаг 4: лемма о продолжении в каждом новом слое.
    """
    n = A.ambient_dim
    lam_t = basis_vector(n) if lam_target is None else unit_vector(lam_target, n)
    box = box if box is not None else default_box(A)
    return _build(A, lam_t, tol.eta, tol.lambda_ball, box, tol, depth=0, top_n=n)


def _build(
    A: PLSet,
    lam_t: FloatArray,
    eta: float,
    radius: float,
    box: Box,
    tol: Tolerances,
    *,
    depth: int,
    top_n: int,
) -> RegularSystem:
    n = A.ambient_dim
    box_note = (box[0].tolist(), box[1].tolist())
    if depth >= top_n:
        raise NumericFailure("recursion depth guard tripped", {"depth": depth, "dimension": top_n})
    if A.is_empty:
        return RegularSystem.empty(n, lam_t, mode="empty", box=box_note)
    if n == 1:
        line = _build_line(A, lam_t)
        return line.replace(line.surfaces, box=box_note)

    margin_t = regularity_margin(lam_t, A)
    if margin_t >= tol.direct_margin:
        start = RegularSystem.empty(n, lam_t, mode="direct", margin=margin_t, box=box_note)
        return extend_with(start, 0, A, strict=False, tol=tol)

    # шаг 1: проекция вдоль e, рекурсия на тени границ плоских кусков, подъём
    e, e_margin = max_min_direction(A.tangents, ambient_dim=n, tol=tol, avoid=lam_t, avoid_radius=eta)
    if e_margin < tol.alpha_min:
        raise NumericFailure(
            f"projection direction margin {e_margin:.3g} is below alpha_min",
            {"projection": e.tolist(), "margin": e_margin},
        )
    frame_e = householder_frame(e)
    box_bar = _project_box(box, frame_e)
    flat = flat_groups(A, tol.eta)
    lower = _build(
        shadow_boundary(A, e, flat),
        unit_vector(frame_e.T @ lam_t),
        eta / 2,
        eta / 2,
        box_bar,
        tol,
        depth=depth + 1,
        top_n=top_n,
    )
    lower = _split_all(lower, box_bar, tol)
    if lower.b == 0:
        raise NumericFailure("projected boundary produced no walls", {"projection": e.tolist()})

    lams = [_nearest_on_fiber(e, frame_e @ H.direction, lam_t) for H in lower.surfaces]
    far = max(float(np.linalg.norm(lam - lam_t)) for lam in lams)
    if far > eta / 2 + 1e-9:
        raise NumericFailure(
            f"lifted direction lies {far:.3g} from the target, outside the η/2 ball",
            {"eta": eta, "distance": far},
        )
    walls = RegularSystem(
        n,
        tuple(LiftedHypersurface.lift(H, e, lam) for H, lam in zip(lower.surfaces, lams)),
        None,
        {"box": box_note},
    )

    # шаг 2: план для каждого слоя на исходных стенках, сверху вниз
    slab_groups = _slab_groups(A, walls, 0 if n == 2 else 1, tol)
    plans: list[_SlabPlan] = []
    above: FloatArray | None = None
    for p in reversed(range(walls.b + 1)):
        if not slab_groups[p]:
            continue
        lam_p = walls.direction(p)
        if p == 0 and plans and plans[-1].slab == 1 and plans[-1].refined:
            # G_0 наследует направление перепредставленной H_1
            lam_p = plans[-1].refined[0].direction
        plan = _plan_slab(
            A, walls, p, slab_groups[p], lam_p, lam_t, eta, radius, box, above, tol, depth, top_n
        )
        plans.append(plan)
        above = plan.direction

    # шаги 3–4: сверху вниз, чтобы номера нижних слоёв не сдвигались
    system = walls
    for plan in plans:
        system = _merge_slab(system, walls, plan, tol)
        p = plan.slab
        if not plan.refined:
            system = extend_with(system, p, A.subset(plan.members), strict=False, tol=tol)
            continue
        for j in reversed(range(len(plan.groups))):
            system = extend_with(system, p + j, A.subset(plan.groups[j]), strict=False, tol=tol)

    return system.replace(
        system.surfaces,
        mode="zigzag",
        projection=e.tolist(),
        projection_margin=e_margin,
        flat_groups=len(flat),
        slab_margins=[m for plan in reversed(plans) for m in plan.info["margins"]],
        refinements=[plan.info for plan in reversed(plans) if plan.refined],
        box=box_note,
    )


def _plan_slab(
    A: PLSet,
    walls: RegularSystem,
    p: int,
    members: list[int],
    lam_p: FloatArray,
    lam_t: FloatArray,
    eta: float,
    radius: float,
    box: Box,
    above: FloatArray | None,
    tol: Tolerances,
    depth: int,
    top_n: int,
) -> _SlabPlan:
    """Шаг 2 для слоя G_p; ``above``: направление соседнего слоя сверху."""
    n = A.ambient_dim
    X = A.subset(members)
    direct = regularity_margin(lam_p, X)
    if direct >= tol.direct_margin:
        return _SlabPlan(p, members, lam_p, info={"slab": p, "margins": [direct]})

    region = lambda_region(walls, p, box=box, tol=tol)
    own = float(region.margins_for(lam_p)[0])
    r = min(own / 2, radius - float(np.linalg.norm(lam_p - lam_t)), 1.0)
    if r < tol.alpha_min:
        raise NumericFailure(
            f"slab {p}: direction ball radius {r:.3g} is below alpha_min; "
            "raise mesh or sample resolution",
            {"slab": p, "radius": r, "lambda_margin": own},
        )
    mu, mu_margin = max_min_direction(X.tangents, ambient_dim=n, tol=tol, avoid=lam_t, avoid_radius=eta)
    if mu_margin < tol.alpha_min:
        raise NumericFailure(
            f"slab {p}: no direction away from the target is regular for the slab (margin {mu_margin:.3g})",
            {"slab": p, "margin": mu_margin},
        )

    # рекурсия в N_μ на тени границ α-плоских кусков X_p
    frame_mu = householder_frame(mu)
    box_mu = _project_box(box, frame_mu)
    lower = _build(
        shadow_boundary(X, mu, flat_groups(X, tol.eta)),
        unit_vector(frame_mu.T @ lam_p),
        r / 2,
        r / 2,
        box_mu,
        tol,
        depth=depth + 1,
        top_n=top_n,
    )
    lower = _split_all(lower, box_mu, tol)
    if lower.b == 0:
        raise NumericFailure("projected slab boundary produced no walls", {"slab": p, "mu": mu.tolist()})

    # X_{p,j} относительно временных цилиндров
    scaffold = RegularSystem(
        n,
        tuple(
            LiftedHypersurface.lift(H, mu, _nearest_on_fiber(mu, frame_mu @ H.direction, lam_p))
            for H in lower.surfaces
        ),
    )
    sub = [[members[i] for i in group] for group in _slab_groups(X, scaffold, 0 if n == 2 else 1, tol)]

    axis = Subspace.span(mu[None, :])
    chosen: dict[int, FloatArray] = {}
    picked: dict[int, float] = {}
    for k in reversed(range(1, lower.b + 1)):
        H = lower.surfaces[k - 1]
        group = sorted(set(sub[k]) | (set(sub[0]) if k == 1 else set()))
        subs = tangent_set(A.subset(group)) + [axis]
        y = frame_mu @ H.direction
        best, best_margin = fiber_direction_search(
            mu, lam_p, r, subs, y=y, admissible=region.contains, tol=tol
        )
        pick, pick_margin = best, best_margin
        candidate = chosen.get(k + 1, above)
        if candidate is not None:
            on_fiber = np.linalg.norm(tilde_pi(mu, candidate, tol=tol) - y) <= 1e-9
            cand_margin = float(min_distance(candidate[None, :], subs)[0])
            if (
                on_fiber
                and float(np.linalg.norm(candidate - lam_p)) <= r
                and bool(region.contains(candidate)[0])
                and cand_margin >= max(tol.reuse_ratio * best_margin, tol.alpha_min)
            ):
                pick, pick_margin = candidate, cand_margin
        if pick_margin < tol.alpha_min:
            raise NumericFailure(
                f"slab {p}: best regular direction margin {pick_margin:.3g} is below alpha_min; "
                "raise mesh or sample resolution",
                {"slab": p, "margin": pick_margin},
            )
        chosen[k] = pick
        picked[k] = min(pick_margin, 1.0)

    directions = [chosen[k] for k in range(1, lower.b + 1)]
    margins = [picked[k] for k in range(1, lower.b + 1)]
    refined = tuple(LiftedHypersurface.lift(H, mu, lam) for H, lam in zip(lower.surfaces, directions))
    info = {
        "slab": p,
        "mu": mu.tolist(),
        "mu_margin": mu_margin,
        "radius": r,
        "walls": len(refined),
        "margins": margins,
    }
    return _SlabPlan(p, members, directions[0], refined, sub, info)


def _merge_slab(S: RegularSystem, walls: RegularSystem, plan: _SlabPlan, tol: Tolerances) -> RegularSystem:
    """Шаг 3: H_p перепредставлена для λ̂_1, между H_p и H_{p+1} встают min(max(Ĥ_k, H_p), H_{p+1})."""
    if not plan.refined:
        return S
    p = plan.slab
    floor = walls.surface(p) if p >= 1 else None
    ceiling = walls.surface(p + 1) if p < walls.b else None
    clamped = tuple(
        ClampedHypersurface.clamp(H, floor, ceiling, H.direction, tol=tol) for H in plan.refined
    )
    head: tuple[Hypersurface, ...] = ()
    if p >= 1:
        head = S.surfaces[: p - 1] + (S.surfaces[p - 1].regraph(plan.refined[0].direction, tol=tol),)
    surfaces = head + clamped + S.surfaces[p:]
    if len(surfaces) > tol.max_slabs:
        raise NumericFailure("hypersurface count exceeds the cap", {"count": len(surfaces)})
    return S.replace(surfaces)
