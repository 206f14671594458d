"""Кусочно-линейные множества с пустой внутренностью.

Симплексы, касательное множество τ(A), запас регулярности, α-плоские
разбиения и разложение A в объединение графиков аффинных функций.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg
from scipy.stats import qmc

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractViolation, DegenerateInput
from .geom_core import (
    FloatArray,
    Subspace,
    angle,
    householder_frame,
    min_distance,
)

__all__ = [
    "Simplex",
    "PLSet",
    "GraphPiece",
    "tangent_set",
    "regularity_margin",
    "flat_groups",
    "flat_partition",
    "graph_decompose",
    "lipschitz_bound",
    "shadow_boundary",
    "barycentric_sample",
]

# Допуск барицентрических проверок (вложенность, дедупликация)
BARY_TOL = 1e-9


def barycentric_sample(d: int, count: int, seed: int) -> FloatArray:
    """Барицентрические координаты (count, d+1) по скремблированной последовательности Халтона."""
    if count <= 0:
        return np.zeros((0, d + 1))
    if d == 0:
        return np.ones((count, 1))
    u = qmc.Halton(d=d, scramble=True, seed=seed).random(count)
    s = np.sort(u, axis=1)
    edges = np.hstack([np.zeros((count, 1)), s, np.ones((count, 1))])
    return np.diff(edges, axis=1)


@dataclass(frozen=True, eq=False)
class Simplex:
    """Невырожденный d-симплекс в R^n (вершины: строки массива)."""

    vertices: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.vertices, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[0] > arr.shape[1] + 1:
            raise ContractViolation(f"bad simplex vertex array of shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractViolation("simplex vertices must be finite")
        if arr.shape[0] > 1:
            sv = linalg.svdvals(arr[1:] - arr[0])
            if sv.min() <= DEFAULT_TOLERANCES.eps_geom * max(1.0, float(sv.max())):
                raise DegenerateInput("simplex vertices are affinely dependent")
        arr.setflags(write=False)
        object.__setattr__(self, "vertices", arr)

    @property
    def ambient_dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[0]) - 1

    @property
    def edges(self) -> FloatArray:
        return self.vertices[1:] - self.vertices[0]

    @cached_property
    def direction(self) -> Subspace:
        if self.dim == 0:
            return Subspace.zero(self.ambient_dim)
        return Subspace.span(self.edges)

    def barycentric(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """(барицентрические координаты, расстояние до аффинной оболочки)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - self.vertices[0]
        if self.dim == 0:
            return np.ones((pts.shape[0], 1)), np.linalg.norm(rel, axis=1)
        coef, *_ = np.linalg.lstsq(self.edges.T, rel.T, rcond=None)
        coef = coef.T
        resid = np.linalg.norm(rel - coef @ self.edges, axis=1)
        bary = np.hstack([1.0 - coef.sum(axis=1, keepdims=True), coef])
        return bary, resid

    def contains(self, points: ArrayLike, tol: float = BARY_TOL) -> NDArray[np.bool_]:
        bary, resid = self.barycentric(points)
        scale = max(1.0, float(np.abs(self.vertices).max()))
        return (resid <= tol * scale) & np.all(bary >= -tol, axis=1)

    def faces(self, k: int) -> Iterator["Simplex"]:
        for idx in itertools.combinations(range(self.dim + 1), k + 1):
            yield Simplex(self.vertices[list(idx)])

    def sample(self, count: int, seed: int = 0) -> FloatArray:
        """Сначала вершины, затем точки Халтона внутри."""
        head = self.vertices[: min(count, self.dim + 1)]
        rest = count - head.shape[0]
        if rest <= 0:
            return head.copy()
        return np.vstack([head, barycentric_sample(self.dim, rest, seed) @ self.vertices])

    def key(self) -> tuple[tuple[float, ...], ...]:
        return tuple(sorted(tuple(np.round(v, 12).tolist()) for v in self.vertices))

    def __repr__(self) -> str:  # noqa: D401
        return f"Simplex(dim={self.dim}, vertices={self.vertices.tolist()})"


@dataclass(frozen=True, eq=False)
class PLSet:
    """Конечное объединение симплексов размерности ≤ n−1 в R^n."""

    ambient_dim: int
    simplices: tuple[Simplex, ...] = ()

    def __post_init__(self) -> None:
        simplices = tuple(self.simplices)
        for i, s in enumerate(simplices):
            if s.ambient_dim != self.ambient_dim:
                raise ContractViolation(
                    f"simplex {i} lives in R^{s.ambient_dim}, set lives in R^{self.ambient_dim}"
                )
            if s.dim >= self.ambient_dim:
                raise ContractViolation(
                    f"empty-interior violation: simplex {i} has dimension {s.dim} in R^{self.ambient_dim}"
                )
        object.__setattr__(self, "simplices", simplices)

    @classmethod
    def from_vertex_lists(cls, n: int, lists: Sequence[ArrayLike]) -> "PLSet":
        return cls(n, tuple(Simplex(np.asarray(v, dtype=float).reshape(-1, n)) for v in lists))

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self) -> Iterator[Simplex]:
        return iter(self.simplices)

    @property
    def is_empty(self) -> bool:
        return not self.simplices

    @property
    def dimension(self) -> int:
        return max((s.dim for s in self.simplices), default=-1)

    def subset(self, indices: Sequence[int]) -> "PLSet":
        return PLSet(self.ambient_dim, tuple(self.simplices[i] for i in indices))

    def union(self, other: "PLSet") -> "PLSet":
        return PLSet(self.ambient_dim, self.simplices + other.simplices)

    def vertices(self) -> FloatArray:
        if self.is_empty:
            return np.zeros((0, self.ambient_dim))
        return np.vstack([s.vertices for s in self.simplices])

    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        pts = self.vertices()
        if pts.shape[0] == 0:
            return -np.ones(self.ambient_dim), np.ones(self.ambient_dim)
        return pts.min(axis=0), pts.max(axis=0)

    @cached_property
    def maximal_indices(self) -> tuple[int, ...]:
        """Симплексы, не лежащие ни в каком другом (совпадающие: по первому вхождению)."""
        keep: list[int] = []
        for i, s in enumerate(self.simplices):
            inside = False
            for j, other in enumerate(self.simplices):
                if i == j or other.dim < s.dim:
                    continue
                if not bool(other.contains(s.vertices).all()):
                    continue
                same = other.dim == s.dim and bool(s.contains(other.vertices).all())
                if not same or j < i:
                    inside = True
                    break
            if not inside:
                keep.append(i)
        return tuple(keep)

    def maximal_simplices(self) -> tuple[Simplex, ...]:
        return tuple(self.simplices[i] for i in self.maximal_indices)

    @cached_property
    def tangents(self) -> tuple[Subspace, ...]:
        out: list[Subspace] = []
        for s in self.maximal_simplices():
            d = s.direction
            if any(r.dim == d.dim and angle(d, r) < BARY_TOL for r in out):
                continue
            out.append(d)
        return tuple(out)

    def sample_points(self, per_simplex: int, seed: int = 0) -> tuple[FloatArray, NDArray[np.int64]]:
        """Выборка точек всех симплексов и номер исходного симплекса для каждой точки."""
        if self.is_empty:
            return np.zeros((0, self.ambient_dim)), np.zeros(0, dtype=np.int64)
        chunks = [s.sample(per_simplex, seed + i) for i, s in enumerate(self.simplices)]
        branch = np.concatenate([np.full(c.shape[0], i) for i, c in enumerate(chunks)])
        return np.vstack(chunks), branch.astype(np.int64)


def tangent_set(A: PLSet) -> list[Subspace]:
    """τ(A): направления максимальных симплексов без повторов."""
    return list(A.tangents)


def regularity_margin(lam: ArrayLike, A: PLSet) -> float:
    if A.is_empty:
        return math.inf
    return float(min_distance(np.asarray(lam, dtype=float)[None, :], A.tangents)[0])


def flat_groups(A: PLSet, alpha: float) -> list[list[int]]:
    """Номера симплексов α-плоских групп: жадно, шары радиуса α/2 вокруг представителей."""
    if alpha <= 0:
        raise ContractViolation(f"flatness threshold must be positive, got {alpha}")
    if A.is_empty:
        return []
    if alpha >= 1.0:
        return [list(range(len(A)))]
    groups: list[tuple[Subspace, list[int]]] = []
    for i, s in enumerate(A.simplices):
        d = s.direction
        for rep, members in groups:
            if rep.dim == d.dim and angle(d, rep) <= alpha / 2:
                members.append(i)
                break
        else:
            groups.append((d, [i]))
    return [members for _, members in groups]


def flat_partition(A: PLSet, alpha: float) -> list[PLSet]:
    """Разбиение A на α-плоские куски (см. flat_groups)."""
    return [A.subset(members) for members in flat_groups(A, alpha)]


def lipschitz_bound(alpha: float) -> float:
    """L(α) = √(1−α²)/α: наклон графика для направления с запасом α."""
    if alpha <= 0:
        raise ContractViolation(f"margin must be positive, got {alpha}")
    if alpha >= 1.0:
        return 0.0
    return math.sqrt(1.0 - alpha * alpha) / alpha


@dataclass(frozen=True, eq=False)
class GraphPiece:
    """Симплекс A как график аффинной функции над своей тенью в N_λ."""

    direction: FloatArray
    shadow: FloatArray
    heights: FloatArray
    gradient: FloatArray
    offset: float
    lipschitz: float
    source: int = -1

    @property
    def slope(self) -> float:
        return float(np.linalg.norm(self.gradient))

    def affine(self, shadow_points: ArrayLike) -> FloatArray:
        pts = np.atleast_2d(np.asarray(shadow_points, dtype=float))
        return pts @ self.gradient + self.offset

    @classmethod
    def from_values(
        cls, shadow: ArrayLike, heights: ArrayLike, *, lipschitz: float = math.inf, source: int = -1
    ) -> "GraphPiece":
        w = np.atleast_2d(np.asarray(shadow, dtype=float))
        h = np.asarray(heights, dtype=float).reshape(-1)
        if w.shape[0] != h.shape[0]:
            raise ContractViolation("one height per shadow vertex is required")
        if w.shape[0] > 1:
            grad = np.linalg.pinv(w[1:] - w[0]) @ (h[1:] - h[0])
        else:
            grad = np.zeros(w.shape[1])
        offset = float(h[0] - w[0] @ grad)
        lam = np.zeros(w.shape[1] + 1)
        lam[-1] = 1.0
        return cls(lam, w, h, grad, offset, lipschitz, source)


def graph_decompose(
    A: PLSet, lam: ArrayLike, alpha: float, *, tol: Tolerances = DEFAULT_TOLERANCES
) -> list[GraphPiece]:
    """Каждый симплекс: график аффинной функции для λ над проекцией в N_λ."""
    lam_v = np.asarray(lam, dtype=float)
    bound = lipschitz_bound(alpha)
    frame = householder_frame(lam_v)
    pieces: list[GraphPiece] = []
    for i, s in enumerate(A.simplices):
        margin = float(min_distance(lam_v[None, :], [s.direction])[0])
        if margin < alpha - BARY_TOL:
            raise ContractViolation(
                f"simplex {i}: direction margin {margin:.6g} is below the required {alpha:.6g}"
            )
        piece = GraphPiece.from_values(s.vertices @ frame, s.vertices @ lam_v, lipschitz=bound, source=i)
        pieces.append(
            GraphPiece(lam_v, piece.shadow, piece.heights, piece.gradient, piece.offset, bound, i)
        )
    return pieces


def _project_face(face: Simplex, frame: FloatArray, out: list[Simplex]) -> None:
    """Проекция грани; вырожденная проекция заменяется проекциями её граней."""
    try:
        out.append(Simplex(face.vertices @ frame))
    except DegenerateInput:
        if face.dim == 0:
            return
        for sub in face.faces(face.dim - 1):
            _project_face(sub, frame, out)


def _folds(face: Simplex, apexes: Sequence[FloatArray], frame: FloatArray) -> bool:
    """Лежат ли проекции двух вершин напротив грани по одну сторону её тени."""
    shadow = face.vertices @ frame
    if frame.shape[1] == 1:
        normal = np.ones(1)
    else:
        null = linalg.null_space(shadow[1:] - shadow[0])
        if null.shape[1] != 1:
            return True
        normal = null[:, 0]
    sides = [float((apex @ frame - shadow[0]) @ normal) for apex in apexes]
    return sides[0] * sides[1] >= 0.0


def shadow_boundary(A: PLSet, e: ArrayLike, groups: Sequence[Sequence[int]] | None = None) -> PLSet:
    """Тень вдоль e границ плоских кусков: грани размерности ≤ n−2 в N_e.

    ``groups`` задаёт куски (номера симплексов A). Общая (n−2)-грань двух
    (n−1)-симплексов одного куска внутренняя, если проекция в ней не
    складывается; такие грани пропускаются. Без ``groups`` каждый симплекс
    считается отдельным куском.
    """
    n = A.ambient_dim
    frame = householder_frame(e)
    label = list(range(len(A)))
    for g, members in enumerate(groups or ()):
        for i in members:
            label[i] = len(A) + g

    # (n−2)-грани (n−1)-симплексов: ключ -> [(номер симплекса, противолежащая вершина)]
    shared: dict[tuple[tuple[float, ...], ...], list[tuple[int, FloatArray]]] = {}
    for i, s in enumerate(A.simplices):
        if s.dim != n - 1:
            continue
        for j in range(s.dim + 1):
            face = Simplex(np.delete(s.vertices, j, axis=0))
            shared.setdefault(face.key(), []).append((i, s.vertices[j]))

    seen: set[tuple[tuple[float, ...], ...]] = set()
    out: list[Simplex] = []
    for i, s in enumerate(A.simplices):
        k = min(s.dim, n - 2)
        for face in s.faces(k):
            if s.dim == n - 1:
                owners = shared.get(face.key(), [])
                if (
                    len(owners) == 2
                    and label[owners[0][0]] == label[owners[1][0]]
                    and not _folds(face, [owners[0][1], owners[1][1]], frame)
                ):
                    continue
            projected: list[Simplex] = []
            _project_face(face, frame, projected)
            for proj in projected:
                key = proj.key()
                if key in seen:
                    continue
                seen.add(key)
                out.append(proj)
    return PLSet(n - 1, tuple(out))
