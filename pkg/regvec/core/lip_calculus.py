"""Алгебра вычислимых липшицевых функций на гиперплоскости.

Функция: неизменяемое дерево выражения с сертифицированной константой
Липшица ``lipschitz``. Вычисление векторизовано: ``evaluate`` принимает
массив точек (m, d) и возвращает (m,). Сюда же входят гиперповерхности
(графики для направления λ), их перепредставление для другого направления
и цилиндры π_e^{-1}(H̄).
"""
from __future__ import annotations

import abc
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractViolation, NumericFailure
from .geom_core import (
    FloatArray,
    Subspace,
    householder_frame,
    unit_vector,
)
from .pl_complex import BARY_TOL, GraphPiece, barycentric_sample, lipschitz_bound

__all__ = [
    "LipFn",
    "Constant",
    "Affine",
    "McShaneHull",
    "FMin",
    "FMax",
    "OrderStatistic",
    "Shift",
    "ComposeIsometry",
    "Glued",
    "Regraphed",
    "LiftedHeight",
    "Side",
    "Hypersurface",
    "LiftedHypersurface",
    "ClampedHypersurface",
    "constant",
    "mcshane_extend",
    "order_statistics",
    "fmin",
    "fmax",
    "shift",
    "compose_isometry",
    "below",
    "regraph",
]


class LipFn(abc.ABC):
    """Вычислимая функция R^d -> R с сертифицированной константой Липшица."""

    domain_dim: int
    lipschitz: float

    @abc.abstractmethod
    def evaluate(self, points: FloatArray) -> FloatArray:
        """Значения в строках массива (m, d)."""

    @property
    def is_sentinel(self) -> bool:
        return False

    def __call__(self, points: ArrayLike) -> FloatArray | float:
        arr = np.asarray(points, dtype=float)
        d = self.domain_dim
        if arr.ndim == 1 and (arr.size == d or (d == 0 and arr.size == 0)):
            return float(self.evaluate(arr.reshape(1, d))[0])
        if d == 0:
            return self.evaluate(np.zeros((arr.shape[0], 0)))
        return self.evaluate(arr.reshape(-1, d))


def _as_points(points: ArrayLike, d: int) -> FloatArray:
    arr = np.asarray(points, dtype=float)
    if d == 0:
        return np.zeros((arr.shape[0] if arr.ndim else 1, 0))
    return arr.reshape(-1, d)


# --- leaves ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Constant(LipFn):
    value: float
    domain_dim: int
    lipschitz: float = field(default=0.0, init=False)

    @property
    def is_sentinel(self) -> bool:
        return math.isinf(self.value)

    def evaluate(self, points: FloatArray) -> FloatArray:
        return np.full(points.shape[0], self.value)


def constant(value: float, domain_dim: int) -> Constant:
    return Constant(float(value), domain_dim)


@dataclass(frozen=True, eq=False)
class Affine(LipFn):
    gradient: FloatArray
    offset: float
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        g = np.asarray(self.gradient, dtype=float).reshape(-1)
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "domain_dim", int(g.shape[0]))
        object.__setattr__(self, "lipschitz", float(np.linalg.norm(g)))

    def evaluate(self, points: FloatArray) -> FloatArray:
        return points @ self.gradient + self.offset


# --- McShane ---------------------------------------------------------------


def _cone_min(vertices: FloatArray, values: FloatArray, q: FloatArray, L: float) -> FloatArray:
    """min_{p ∈ conv(vertices)} (a(p) + L|q − p|) для аффинной a с данными вершинными значениями.

    Внутренняя критическая точка находится в замкнутой форме; иначе минимум
    достигается на гранях, которые обрабатываются рекурсивно.
    """
    v0 = vertices[0]
    if vertices.shape[0] == 1:
        return values[0] + L * np.linalg.norm(q - v0, axis=1)

    edges = vertices[1:] - v0
    basis, _ = np.linalg.qr(edges.T)
    rel = q - v0
    local = rel @ basis
    r = np.linalg.norm(rel - local @ basis.T, axis=1)
    grad_local = np.linalg.pinv(edges @ basis) @ (values[1:] - values[0])
    g2 = float(grad_local @ grad_local)

    best = np.full(q.shape[0], np.inf)
    if g2 < L * L:
        step = grad_local / math.sqrt(L * L - g2)
        p_local = local - r[:, None] * step
        coef = np.linalg.solve((edges @ basis).T, p_local.T).T
        inside = np.all(coef >= -BARY_TOL, axis=1) & (coef.sum(axis=1) <= 1.0 + BARY_TOL)
        if inside.any():
            aff = values[0] + p_local[inside] @ grad_local
            dist = np.sqrt(np.sum((p_local[inside] - local[inside]) ** 2, axis=1) + r[inside] ** 2)
            best[inside] = aff + L * dist

    k = vertices.shape[0]
    for drop in range(k):
        keep = [i for i in range(k) if i != drop]
        np.minimum(best, _cone_min(vertices[keep], values[keep], q, L), out=best)
    return best


@dataclass(frozen=True, eq=False)
class McShaneHull(LipFn):
    """ξ̃(q) = min по кускам min_p (ξ(p) + L|q − p|)."""

    pieces: tuple[GraphPiece, ...]
    lipschitz: float
    domain_dim: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.pieces:
            raise ContractViolation("McShane extension of an empty partial function")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "domain_dim", int(self.pieces[0].shadow.shape[1]))

    def evaluate(self, points: FloatArray) -> FloatArray:
        out = np.full(points.shape[0], np.inf)
        for piece in self.pieces:
            np.minimum(out, _cone_min(piece.shadow, piece.heights, points, self.lipschitz), out=out)
        return out


def _as_piece(item: GraphPiece | tuple[ArrayLike, ArrayLike]) -> GraphPiece:
    if isinstance(item, GraphPiece):
        return item
    shadow, heights = item
    return GraphPiece.from_values(shadow, heights)


def mcshane_extend(
    pieces: Sequence[GraphPiece | tuple[ArrayLike, ArrayLike]],
    L: float,
    *,
    samples: int = 16,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> McShaneHull:
    """L-липшицево продолжение частичной кусочно-аффинной функции.

    Наклон внутри куска проверяется точно, а согласованность между
    кусками проверяется по выборке точек (вершины и ``samples`` точек Халтона на кусок).
    """
    items = [_as_piece(p) for p in pieces]
    if L < 0 or not math.isfinite(L):
        raise ContractViolation(f"Lipschitz bound must be finite and non-negative, got {L}")
    for i, piece in enumerate(items):
        if piece.slope > L * (1 + 1e-12) + tol.eps_eval:
            raise ContractViolation(
                f"piece {i}: slope {piece.slope:.6g} exceeds the extension bound {L:.6g}"
            )
    if len(items) > 1:
        clouds = []
        for i, piece in enumerate(items):
            d = piece.shadow.shape[0] - 1
            pts = np.vstack([piece.shadow, barycentric_sample(d, samples, tol.seed + i) @ piece.shadow])
            clouds.append((pts, piece.affine(pts)))
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (p, fp), (q, fq) = clouds[i], clouds[j]
                dist = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=2)
                gap = np.abs(fp[:, None] - fq[None, :])
                if np.any(gap > L * dist + tol.eps_eval * (1.0 + np.abs(fp[:, None]))):
                    raise ContractViolation(
                        f"pieces {i} and {j} are not {L:.6g}-Lipschitz compatible"
                    )
    return McShaneHull(tuple(items), float(L))


# --- lattice operations ----------------------------------------------------


def _same_domain(fns: Sequence[LipFn]) -> int:
    if not fns:
        raise ContractViolation("at least one function is required")
    d = fns[0].domain_dim
    for f in fns[1:]:
        if f.domain_dim != d:
            raise ContractViolation(f"domain mismatch: {f.domain_dim} vs {d}")
    return d


@dataclass(frozen=True, eq=False)
class FMin(LipFn):
    parts: tuple[LipFn, ...]
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", _same_domain(self.parts))
        object.__setattr__(self, "lipschitz", max(f.lipschitz for f in self.parts))

    def evaluate(self, points: FloatArray) -> FloatArray:
        out = self.parts[0].evaluate(points)
        for f in self.parts[1:]:
            out = np.minimum(out, f.evaluate(points))
        return out


@dataclass(frozen=True, eq=False)
class FMax(LipFn):
    parts: tuple[LipFn, ...]
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", _same_domain(self.parts))
        object.__setattr__(self, "lipschitz", max(f.lipschitz for f in self.parts))

    def evaluate(self, points: FloatArray) -> FloatArray:
        out = self.parts[0].evaluate(points)
        for f in self.parts[1:]:
            out = np.maximum(out, f.evaluate(points))
        return out


def fmin(*fns: LipFn) -> LipFn:
    """Поточечный минимум; нейтральный элемент +∞, поглощающий −∞."""
    _same_domain(fns)
    for f in fns:
        if isinstance(f, Constant) and f.value == -math.inf:
            return f
    parts = tuple(f for f in fns if not (isinstance(f, Constant) and f.value == math.inf))
    if not parts:
        return fns[0]
    return parts[0] if len(parts) == 1 else FMin(parts)


def fmax(*fns: LipFn) -> LipFn:
    """Поточечный максимум; нейтральный элемент −∞, поглощающий +∞."""
    _same_domain(fns)
    for f in fns:
        if isinstance(f, Constant) and f.value == math.inf:
            return f
    parts = tuple(f for f in fns if not (isinstance(f, Constant) and f.value == -math.inf))
    if not parts:
        return fns[0]
    return parts[0] if len(parts) == 1 else FMax(parts)


@dataclass(frozen=True, eq=False)
class OrderStatistic(LipFn):
    """j-е по величине (с нуля) значение среди parts."""

    parts: tuple[LipFn, ...]
    rank: int
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", _same_domain(self.parts))
        object.__setattr__(self, "lipschitz", max(f.lipschitz for f in self.parts))
        if not 0 <= self.rank < len(self.parts):
            raise ContractViolation(f"rank {self.rank} out of range for {len(self.parts)} functions")

    def evaluate(self, points: FloatArray) -> FloatArray:
        stack = np.vstack([f.evaluate(points) for f in self.parts])
        return np.sort(stack, axis=0)[self.rank]


def order_statistics(fns: Sequence[LipFn]) -> list[LipFn]:
    _same_domain(fns)
    if any(f.is_sentinel for f in fns):
        raise ContractViolation("order statistics are undefined for sentinel functions")
    if len(fns) == 1:
        return [fns[0]]
    parts = tuple(fns)
    return [OrderStatistic(parts, j) for j in range(len(parts))]


@dataclass(frozen=True, eq=False)
class Shift(LipFn):
    inner: LipFn
    amount: float
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", self.inner.domain_dim)
        object.__setattr__(self, "lipschitz", self.inner.lipschitz)

    def evaluate(self, points: FloatArray) -> FloatArray:
        return self.inner.evaluate(points) + self.amount


def shift(f: LipFn, c: float) -> LipFn:
    if f.is_sentinel:
        return f
    return Shift(f, float(c))


@dataclass(frozen=True, eq=False)
class ComposeIsometry(LipFn):
    """f(Q x + b) для ортогональной Q."""

    inner: LipFn
    matrix: FloatArray
    offset: FloatArray
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", self.inner.domain_dim)
        object.__setattr__(self, "lipschitz", self.inner.lipschitz)

    def evaluate(self, points: FloatArray) -> FloatArray:
        return self.inner.evaluate(points @ self.matrix.T + self.offset)


def compose_isometry(f: LipFn, matrix: ArrayLike, offset: ArrayLike | None = None) -> LipFn:
    q = np.asarray(matrix, dtype=float)
    d = f.domain_dim
    if q.shape != (d, d) or not np.allclose(q @ q.T, np.eye(d), atol=1e-9):
        raise ContractViolation("compose_isometry expects an orthogonal matrix of the domain")
    b = np.zeros(d) if offset is None else np.asarray(offset, dtype=float).reshape(d)
    return ComposeIsometry(f, q, b)


@dataclass(frozen=True, eq=False)
class Glued(LipFn):
    """upper на множестве selector, lower вне его (selector: объединение компонент {lower < upper})."""

    lower: LipFn
    upper: LipFn
    selector: Callable[[FloatArray], NDArray[np.bool_]]
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", _same_domain([self.lower, self.upper]))
        object.__setattr__(self, "lipschitz", max(self.lower.lipschitz, self.upper.lipschitz))

    def evaluate(self, points: FloatArray) -> FloatArray:
        mask = np.asarray(self.selector(points), dtype=bool)
        out = self.lower.evaluate(points)
        if mask.any():
            out[mask] = self.upper.evaluate(points[mask])
        return out


# --- hypersurfaces ---------------------------------------------------------


class Side(enum.IntEnum):
    BELOW = -1
    ON = 0
    ABOVE = 1


@dataclass(frozen=True, eq=False)
class Hypersurface:
    """Γ^λ_ξ = {q : q_λ = ξ(π_λ q)}.

    ``tangents``: точное конечное множество касательных гиперплоскостей,
    если оно известно (плоские стенки и их цилиндры); тогда запасы
    регулярности и константы переноса вычисляются точно.
    """

    direction: FloatArray
    height_fn: LipFn
    tangents: tuple[Subspace, ...] | None = None

    def __post_init__(self) -> None:
        lam = unit_vector(self.direction)
        lam.setflags(write=False)
        object.__setattr__(self, "direction", lam)
        if self.height_fn.domain_dim != lam.shape[0] - 1:
            raise ContractViolation(
                f"height function on R^{self.height_fn.domain_dim} cannot describe a hypersurface of R^{lam.shape[0]}"
            )
        if self.tangents is not None:
            object.__setattr__(self, "tangents", tuple(self.tangents))

    @classmethod
    def flat(cls, direction: ArrayLike, level: float) -> "Hypersurface":
        lam = unit_vector(direction)
        n = lam.shape[0]
        return cls(lam, constant(level, n - 1), (Subspace(n, householder_frame(lam)),))

    @property
    def ambient_dim(self) -> int:
        return int(self.direction.shape[0])

    @property
    def lipschitz(self) -> float:
        return self.height_fn.lipschitz

    @property
    def frame(self) -> FloatArray:
        return householder_frame(self.direction)

    def residual(self, points: ArrayLike) -> FloatArray:
        """q_λ − ξ(π_λ q) для строк (m, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.direction - self.height_fn.evaluate(pts @ self.frame)

    def side(self, points: ArrayLike, eps: float = DEFAULT_TOLERANCES.eps_eval) -> NDArray[np.int64]:
        diff = self.residual(points)
        return np.where(diff < -eps, -1, np.where(diff > eps, 1, 0)).astype(np.int64)

    def points(self, shadow: ArrayLike) -> FloatArray:
        """Точки графика над тенью (m, n−1)."""
        w = _as_points(shadow, self.ambient_dim - 1)
        return w @ self.frame.T + self.height_fn.evaluate(w)[:, None] * self.direction

    # --- regularity ---------------------------------------------------

    @cached_property
    def _normals(self) -> FloatArray:
        if not self.tangents:
            return np.zeros((0, self.ambient_dim))
        rows = []
        for t in self.tangents:
            if t.dim != self.ambient_dim - 1:
                continue
            nu = t.complement().frame[:, 0]
            rows.append(nu if nu @ self.direction >= 0 else -nu)
        return np.array(rows).reshape(-1, self.ambient_dim)

    def margins_for(self, lams: ArrayLike) -> FloatArray:
        """Нижние оценки запаса регулярности графика для строк-направлений.

        0 для направлений из другой компоненты регулярных направлений.
        """
        arr = np.atleast_2d(np.asarray(lams, dtype=float))
        if self.tangents is not None:
            if self._normals.shape[0] == 0:
                return np.where(arr @ self.direction > 0, 1.0, 0.0)
            dots = arr @ self._normals.T
            return np.clip(dots.min(axis=1), 0.0, 1.0)
        cos_t = np.clip(arr @ self.direction, -1.0, 1.0)
        theta = np.arccos(cos_t) + math.atan(self.lipschitz)
        return np.where(theta < math.pi / 2, np.cos(np.minimum(theta, math.pi / 2)), 0.0)

    def margin_for(self, lam: ArrayLike) -> float:
        return float(self.margins_for(np.asarray(lam, dtype=float)[None, :])[0])

    def regraph(
        self, lam: ArrayLike, margin: float | None = None, *, tol: Tolerances = DEFAULT_TOLERANCES
    ) -> "Hypersurface":
        lam_v = unit_vector(lam, self.ambient_dim)
        if np.linalg.norm(lam_v - self.direction) <= 10 * tol.eps_geom:
            return self
        m = self.margin_for(lam_v) if margin is None else float(margin)
        if m <= 0:
            raise ContractViolation("direction is not regular for this hypersurface")
        return Hypersurface(lam_v, Regraphed(self, lam_v, m, tol.eps_eval), self.tangents)

    def transfer_bound(self, src: ArrayLike, dst: ArrayLike) -> float:
        """Константа Липшица отображения N_src -> N_dst вдоль поверхности."""
        s = unit_vector(src, self.ambient_dim)
        d = unit_vector(dst, self.ambient_dim)
        if self.tangents is not None:
            worst = 1.0 if self.ambient_dim == 1 else 0.0
            for t in self.tangents:
                if t.dim == 0:
                    continue
                bs, bd = t.frame.T @ s, t.frame.T @ d
                m_src = np.eye(t.dim) - np.outer(bs, bs)
                m_dst = np.eye(t.dim) - np.outer(bd, bd)
                try:
                    top = float(linalg.eigvalsh(m_dst, m_src).max())
                except linalg.LinAlgError:
                    return math.inf
                worst = max(worst, math.sqrt(max(top, 0.0)))
            return worst
        m = self.margin_for(s)
        return math.inf if m <= 0 else 1.0 / m


def below(H: Hypersurface, q: ArrayLike, *, tol: Tolerances = DEFAULT_TOLERANCES) -> Side:
    return Side(int(H.side(np.asarray(q, dtype=float)[None, :], tol.eps_eval)[0]))


def regraph(
    H: Hypersurface, lam: ArrayLike, margin: float | None = None, *, tol: Tolerances = DEFAULT_TOLERANCES
) -> Hypersurface:
    return H.regraph(lam, margin, tol=tol)


@dataclass(frozen=True, eq=False)
class Regraphed(LipFn):
    """Высота той же поверхности для направления λ': корень t ↦ g(t) на каждом слое."""

    surface: Hypersurface
    direction: FloatArray
    margin: float
    eps: float = DEFAULT_TOLERANCES.eps_eval
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain_dim", self.surface.ambient_dim - 1)
        object.__setattr__(self, "lipschitz", lipschitz_bound(min(self.margin, 1.0)))

    def evaluate(self, points: FloatArray) -> FloatArray:
        lam2 = self.direction
        base = points @ householder_frame(lam2).T
        surf = self.surface

        def g(t: FloatArray) -> FloatArray:
            return surf.residual(base + t[:, None] * lam2)

        m = base.shape[0]
        g0 = g(np.zeros(m))
        cos = float(lam2 @ surf.direction)
        sin = float(np.linalg.norm(surf.frame.T @ lam2))
        growth = cos - surf.lipschitz * sin
        if growth > 0:
            reach = np.abs(g0) / growth * 1.01 + 1e-12
        else:
            reach = (np.abs(g0) + np.linalg.norm(base, axis=1)) * (1 + surf.lipschitz) / self.margin + 1.0
        lo = np.where(g0 < 0, 0.0, -reach)
        hi = np.where(g0 < 0, reach, 0.0)
        glo, ghi = g(lo), g(hi)
        for _ in range(60):
            bad = (glo > 0) | (ghi < 0)
            if not bad.any():
                break
            width = hi - lo
            lo = np.where(glo > 0, lo - width, lo)
            hi = np.where(ghi < 0, hi + width, hi)
            glo, ghi = g(lo), g(hi)
        else:
            i = int(np.flatnonzero((glo > 0) | (ghi < 0))[0])
            raise NumericFailure(
                "regraph bracket failure",
                {"fiber_base": base[i].tolist(), "direction": lam2.tolist()},
            )
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            neg = gm < 0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
            if float(np.max(hi - lo, initial=0.0)) <= 1e-3 * self.eps * (1.0 + float(np.max(np.abs(mid), initial=0.0))):
                break
        return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class LiftedHeight(LipFn):
    """Высота цилиндра π_e^{-1}(H̄) для направления λ над слоем π̃_e^{-1}(λ̄)."""

    base: Hypersurface
    axis: FloatArray
    direction: FloatArray
    domain_dim: int = field(init=False)
    lipschitz: float = field(init=False)
    cos: float = field(init=False)

    def __post_init__(self) -> None:
        proj = householder_frame(self.axis).T @ self.direction
        c = float(np.linalg.norm(proj))
        if c <= DEFAULT_TOLERANCES.eps_geom:
            raise ContractViolation("a cylinder along e is not a graph for ±e")
        if np.linalg.norm(proj / c - self.base.direction) > 1e-9:
            raise ContractViolation("lift direction does not lie on the fibre over the base direction")
        m = c * self.base.margin_for(self.base.direction)
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "domain_dim", self.base.ambient_dim)
        object.__setattr__(self, "lipschitz", lipschitz_bound(m) if m > 0 else math.inf)

    def evaluate(self, points: FloatArray) -> FloatArray:
        y = points @ householder_frame(self.direction).T
        z = y @ householder_frame(self.axis)
        b = self.base
        return (b.height_fn.evaluate(z @ b.frame) - z @ b.direction) / self.cos


@dataclass(frozen=True, eq=False)
class LiftedHypersurface(Hypersurface):
    """Цилиндр π_e^{-1}(H̄); H̄ задана в координатах N_e."""

    base: Hypersurface | None = None
    axis: FloatArray | None = None

    @classmethod
    def lift(cls, base: Hypersurface, axis: ArrayLike, direction: ArrayLike) -> "LiftedHypersurface":
        e = unit_vector(axis)
        lam = unit_vector(direction, e.shape[0])
        frame = householder_frame(e)
        tangents = None
        if base.tangents is not None:
            tangents = tuple(
                Subspace.span(np.vstack([e[None, :], (frame @ t.frame).T])) for t in base.tangents
            )
        return cls(lam, LiftedHeight(base, e, lam), tangents, base, e)

    def margins_for(self, lams: ArrayLike) -> FloatArray:
        if self.tangents is not None:
            return super().margins_for(lams)
        assert self.base is not None and self.axis is not None
        arr = np.atleast_2d(np.asarray(lams, dtype=float))
        proj = arr @ householder_frame(self.axis)
        c = np.linalg.norm(proj, axis=1)
        safe = np.where(c > DEFAULT_TOLERANCES.eps_geom, c, 1.0)
        return np.where(c > DEFAULT_TOLERANCES.eps_geom, self.base.margins_for(proj / safe[:, None]) * c, 0.0)

    def regraph(
        self, lam: ArrayLike, margin: float | None = None, *, tol: Tolerances = DEFAULT_TOLERANCES
    ) -> Hypersurface:
        assert self.base is not None and self.axis is not None
        lam_v = unit_vector(lam, self.ambient_dim)
        if np.linalg.norm(lam_v - self.direction) <= 10 * tol.eps_geom:
            return self
        proj = householder_frame(self.axis).T @ lam_v
        c = float(np.linalg.norm(proj))
        if c <= tol.eps_geom:
            raise ContractViolation("a cylinder along e is not a graph for ±e")
        return LiftedHypersurface.lift(self.base.regraph(proj / c, tol=tol), self.axis, lam_v)


@dataclass(frozen=True, eq=False)
class ClampedHypersurface(Hypersurface):
    """Граф min(max(ξ, ζ), ζ') для направления λ: ``inner`` зажата между ``floor`` и ``ceiling``.

    Все три поверхности должны быть графиками для λ. Множество точек не
    зависит от выбора такого λ, поэтому ``regraph`` перезажимает компоненты.
    """

    inner: Hypersurface | None = None
    floor: Hypersurface | None = None
    ceiling: Hypersurface | None = None

    @property
    def parts(self) -> tuple[Hypersurface, ...]:
        return tuple(h for h in (self.inner, self.floor, self.ceiling) if h is not None)

    @classmethod
    def clamp(
        cls,
        inner: Hypersurface,
        floor: Hypersurface | None,
        ceiling: Hypersurface | None,
        direction: ArrayLike,
        *,
        tol: Tolerances = DEFAULT_TOLERANCES,
    ) -> "ClampedHypersurface":
        lam = unit_vector(direction, inner.ambient_dim)
        inner_l = inner.regraph(lam, tol=tol)
        floor_l = floor.regraph(lam, tol=tol) if floor is not None else None
        ceiling_l = ceiling.regraph(lam, tol=tol) if ceiling is not None else None
        height = inner_l.height_fn
        if floor_l is not None:
            height = fmax(height, floor_l.height_fn)
        if ceiling_l is not None:
            height = fmin(height, ceiling_l.height_fn)
        comps = [h for h in (inner_l, floor_l, ceiling_l) if h is not None]
        tangents: tuple[Subspace, ...] | None = None
        if all(h.tangents is not None for h in comps):
            tangents = tuple(t for h in comps for t in h.tangents or ())
        return cls(lam, height, tangents, inner_l, floor_l, ceiling_l)

    def margins_for(self, lams: ArrayLike) -> FloatArray:
        if self.tangents is not None:
            return super().margins_for(lams)
        out = self.parts[0].margins_for(lams)
        for h in self.parts[1:]:
            out = np.minimum(out, h.margins_for(lams))
        return out

    def regraph(
        self, lam: ArrayLike, margin: float | None = None, *, tol: Tolerances = DEFAULT_TOLERANCES
    ) -> Hypersurface:
        assert self.inner is not None
        lam_v = unit_vector(lam, self.ambient_dim)
        if np.linalg.norm(lam_v - self.direction) <= 10 * tol.eps_geom:
            return self
        if self.margin_for(lam_v) <= 0:
            raise ContractViolation("direction is not regular for this hypersurface")
        return ClampedHypersurface.clamp(self.inner, self.floor, self.ceiling, lam_v, tol=tol)
