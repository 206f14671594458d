"""Примитивы линейной алгебры и грассманиана.

Подпространства задаются ортонормальным репером (столбцы матрицы n×k).
Все функции чистые, массивы в возвращаемых объектах только для чтения.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, optimize
from scipy.spatial import cKDTree

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ContractViolation, DegenerateInput, NumericFailure

__all__ = [
    "FloatArray",
    "Subspace",
    "SphereCover",
    "as_vector",
    "basis_vector",
    "unit_vector",
    "householder_frame",
    "dist_to_subspace",
    "distances",
    "min_distance",
    "angle",
    "project_along",
    "coords_along",
    "embed_along",
    "tilde_pi",
    "fiber_point",
    "fiber_tangent",
    "sphere_cover",
    "sphere_mesh",
    "max_min_direction",
    "fiber_direction_search",
]

FloatArray = NDArray[np.float64]
Admissible = Callable[[FloatArray], NDArray[np.bool_]]

# Нормализуем молча, если отклонение нормы от 1 не больше этого значения.
_UNIT_SLACK = 1e-6


def _readonly(arr: NDArray) -> NDArray:
    arr.setflags(write=False)
    return arr


def as_vector(v: ArrayLike, n: int | None = None) -> FloatArray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ContractViolation(f"expected a vector of R^{n}, got length {arr.shape[0]}")
    return arr


def basis_vector(n: int, i: int = -1) -> FloatArray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def unit_vector(v: ArrayLike, n: int | None = None, *, tol: Tolerances = DEFAULT_TOLERANCES) -> FloatArray:
    """Нормирует v; нулевой вектор: вырожденный вход."""
    arr = as_vector(v, n)
    norm = float(np.linalg.norm(arr))
    if norm <= tol.eps_geom:
        raise DegenerateInput("cannot normalise a zero vector")
    return arr / norm


def _require_unit(v: ArrayLike, n: int | None = None) -> FloatArray:
    arr = as_vector(v, n)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > _UNIT_SLACK:
        raise ContractViolation(f"expected a unit vector, got norm {norm:.6g}")
    return arr / norm


# --- subspaces -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subspace:
    """Линейное подпространство R^n, заданное ортонормальным репером (n×k)."""

    ambient_dim: int
    frame: FloatArray

    def __post_init__(self) -> None:
        frame = np.array(self.frame, dtype=float).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "frame", _readonly(frame))

    @property
    def dim(self) -> int:
        return int(self.frame.shape[1])

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def span(
        cls,
        vectors: ArrayLike,
        ambient_dim: int | None = None,
        *,
        tol: Tolerances = DEFAULT_TOLERANCES,
    ) -> "Subspace":
        """Ортонормализация с выбором ведущего столбца; почти зависимые векторы отбрасываются."""
        vecs = np.asarray(vectors, dtype=float)
        if vecs.size == 0:
            if ambient_dim is None:
                raise ContractViolation("ambient dimension required for an empty span")
            return cls.zero(ambient_dim)
        vecs = np.atleast_2d(vecs)
        n = vecs.shape[1]
        if ambient_dim is not None and ambient_dim != n:
            raise ContractViolation(f"vectors live in R^{n}, expected R^{ambient_dim}")
        q, r, _ = linalg.qr(vecs.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        scale = max(1.0, float(diag[0])) if diag.size else 1.0
        rank = int(np.count_nonzero(diag > tol.eps_geom * scale))
        return cls(n, q[:, :rank])

    def project(self, points: ArrayLike) -> FloatArray:
        pts = np.asarray(points, dtype=float)
        return (pts @ self.frame) @ self.frame.T

    def complement(self) -> "Subspace":
        if self.dim == 0:
            return Subspace(self.ambient_dim, np.eye(self.ambient_dim))
        return Subspace(self.ambient_dim, linalg.null_space(self.frame.T))

    def __repr__(self) -> str:  # noqa: D401
        return f"Subspace(n={self.ambient_dim}, dim={self.dim})"


def _check_same_dim(n: int, *subspaces: Subspace) -> None:
    for sub in subspaces:
        if sub.ambient_dim != n:
            raise ContractViolation(
                f"dimension mismatch: subspace of R^{sub.ambient_dim} used in R^{n}"
            )


def dist_to_subspace(lam: ArrayLike, T: Subspace) -> float:
    """|λ − proj_T λ| для единичного λ."""
    lam_v = _require_unit(lam)
    _check_same_dim(lam_v.shape[0], T)
    return float(distances(lam_v[None, :], T)[0])


def distances(lams: ArrayLike, T: Subspace) -> FloatArray:
    """Построчные расстояния единичных векторов до T."""
    arr = np.atleast_2d(np.asarray(lams, dtype=float))
    if T.dim == 0:
        res = np.linalg.norm(arr, axis=1)
    else:
        res = np.linalg.norm(arr - (arr @ T.frame) @ T.frame.T, axis=1)
    return np.clip(res, 0.0, 1.0)


def min_distance(lams: ArrayLike, subspaces: Sequence[Subspace]) -> FloatArray:
    """min_i d(λ, P_i) для каждой строки; +inf для пустого списка."""
    arr = np.atleast_2d(np.asarray(lams, dtype=float))
    out = np.full(arr.shape[0], np.inf)
    for sub in subspaces:
        np.minimum(out, distances(arr, sub), out=out)
    return out


def angle(P: Subspace, Q: Subspace) -> float:
    """∠(P, Q) = sup d(λ, Q) по единичным λ ∈ P."""
    _check_same_dim(P.ambient_dim, Q)
    if P.dim == 0:
        return 0.0
    if P.dim > Q.dim:
        return 1.0
    resid = P.frame - Q.frame @ (Q.frame.T @ P.frame) if Q.dim else P.frame
    return float(np.clip(linalg.svdvals(resid).max(), 0.0, 1.0))


# --- frames and projections ----------------------------------------------


@lru_cache(maxsize=8192)
def _householder_cached(key: tuple[float, ...]) -> FloatArray:
    lam = np.array(key)
    n = lam.shape[0]
    v = -lam.copy()
    tail = float(lam[:-1] @ lam[:-1])
    # 1 − λ_n без вычитания близких чисел
    v[-1] = tail / (1.0 + lam[-1]) if lam[-1] > 0 else 1.0 - lam[-1]
    vv = float(v @ v)
    if vv <= DEFAULT_TOLERANCES.eps_geom**2:
        h = np.eye(n)
    else:
        h = np.eye(n) - 2.0 * np.outer(v, v) / vv
    return _readonly(np.ascontiguousarray(h[:, : n - 1]))


def householder_frame(lam: ArrayLike) -> FloatArray:
    """Ортонормальный репер N_λ (n×(n−1)): первые столбцы отражения e_n -> λ."""
    lam_v = _require_unit(lam)
    return _householder_cached(tuple(float(x) for x in lam_v))


def project_along(lam: ArrayLike, q: ArrayLike) -> tuple[FloatArray, float]:
    """(π_λ q в координатах N_λ, q_λ)."""
    lam_v = _require_unit(lam)
    q_v = as_vector(q, lam_v.shape[0])
    frame = householder_frame(lam_v)
    return frame.T @ q_v, float(q_v @ lam_v)


def coords_along(lam: ArrayLike, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Пакетная версия project_along для массива точек (m, n)."""
    lam_v = _require_unit(lam)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return pts @ householder_frame(lam_v), pts @ lam_v


def embed_along(lam: ArrayLike, shadow: ArrayLike, height: ArrayLike) -> FloatArray:
    """Обратное к coords_along: shadow·Fᵀ + height·λ."""
    lam_v = _require_unit(lam)
    frame = householder_frame(lam_v)
    w = np.asarray(shadow, dtype=float)
    t = np.asarray(height, dtype=float)
    if w.ndim == 1 and t.ndim == 0:
        return frame @ w + float(t) * lam_v
    w = w.reshape(-1, frame.shape[1])
    return w @ frame.T + t.reshape(-1)[:, None] * lam_v


def tilde_pi(e: ArrayLike, u: ArrayLike, *, tol: Tolerances = DEFAULT_TOLERANCES) -> FloatArray:
    """π̃_e(u) = π_e(u)/|π_e(u)|."""
    e_v = _require_unit(e)
    u_v = _require_unit(u, e_v.shape[0])
    p = u_v - float(u_v @ e_v) * e_v
    norm = float(np.linalg.norm(p))
    if norm <= tol.eps_geom:
        raise DegenerateInput("tilde_pi is undefined at ±e")
    return p / norm


def fiber_point(mu: FloatArray, y: FloatArray, theta: ArrayLike) -> FloatArray:
    """Точки полуокружности π̃_μ^{-1}(y): cos θ·y + sin θ·μ."""
    th = np.asarray(theta, dtype=float)
    return np.cos(th)[..., None] * y + np.sin(th)[..., None] * mu


def fiber_tangent(mu: ArrayLike, x: ArrayLike, *, tol: Tolerances = DEFAULT_TOLERANCES) -> FloatArray:
    """Единичная касательная к кривой π̃_μ^{-1}(π̃_μ(x)) в точке x."""
    mu_v = _require_unit(mu)
    x_v = _require_unit(x, mu_v.shape[0])
    y = tilde_pi(mu_v, x_v, tol=tol)
    theta = math.atan2(float(x_v @ mu_v), float(x_v @ y))
    return -math.sin(theta) * y + math.cos(theta) * mu_v


# --- sphere covers ---------------------------------------------------------


@lru_cache(maxsize=256)
def _l1_lattice(n: int, level: int) -> tuple[tuple[int, ...], ...]:
    """Целые точки v ∈ Z^n с |v|_1 = level (граница подразбитого кросс-политопа)."""
    if n == 1:
        return ((level,), (-level,))
    out: list[tuple[int, ...]] = []
    for first in range(-level, level + 1):
        rest = level - abs(first)
        if rest == 0:
            out.append((first,) + (0,) * (n - 1))
        else:
            out.extend((first,) + tail for tail in _l1_lattice(n - 1, rest))
    return tuple(out)


def _l1_count(n: int, level: int) -> int:
    return sum(
        2**k * math.comb(n, k) * math.comb(level - 1, k - 1) for k in range(1, min(n, level) + 1)
    )


@dataclass(frozen=True, eq=False)
class SphereCover:
    """Конечный набор единичных векторов, покрывающий S^{n−1} шарами радиуса t/2."""

    radius: float
    points: FloatArray
    lattice: NDArray[np.int64]

    @property
    def ambient_dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def edges(self) -> NDArray[np.int64]:
        """Рёбра подразбиения: пары решёточных точек на L1-расстоянии 2."""
        if len(self) < 2:
            return np.zeros((0, 2), dtype=np.int64)
        tree = cKDTree(self.lattice)
        pairs = tree.query_pairs(r=2.5, p=1, output_type="ndarray")
        return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def _cover_at_level(n: int, level: int, radius: float) -> SphereCover:
    lattice = np.array(_l1_lattice(n, level), dtype=np.int64)
    pts = lattice.astype(float)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return SphereCover(radius, _readonly(pts), _readonly(lattice))


def sphere_cover(n: int, t: float) -> SphereCover:
    """Покрытие S^{n−1}: нормированные точки подразбиения границы кросс-политопа.

    Уровень подразбиения N = ⌈2n/t⌉ гарантирует покрытие шарами радиуса n/N ≤ t/2.
    """
    if n < 1:
        raise ContractViolation("sphere dimension must be at least 0")
    if not 0.0 < t <= 2.0:
        raise ContractViolation(f"cover radius must lie in (0, 2], got {t}")
    return _cover_at_level(n, max(1, math.ceil(2 * n / t)), t)


def sphere_mesh(n: int, vertices: int) -> SphereCover:
    """Наименьшее подразбиение с не менее чем ``vertices`` вершинами."""
    level = 1
    while _l1_count(n, level) < vertices:
        level += 1
    return _cover_at_level(n, level, 2.0 * n / level)


# --- direction search ------------------------------------------------------


def _refine_on_sphere(
    objective: Callable[[FloatArray], float], start: FloatArray, maxiter: int
) -> FloatArray:
    """Nelder–Mead в карте λ(w) = (start + F w)/|…| вокруг start."""
    n = start.shape[0]
    frame = householder_frame(start)

    def chart(w: FloatArray) -> FloatArray:
        p = start + frame @ w
        return p / np.linalg.norm(p)

    simplex = np.vstack([np.zeros(n - 1), 0.05 * np.eye(n - 1)])
    res = optimize.minimize(
        lambda w: -objective(chart(w)),
        np.zeros(n - 1),
        method="Nelder-Mead",
        options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-12, "initial_simplex": simplex},
    )
    return chart(np.asarray(res.x, dtype=float))


def max_min_direction(
    subspaces: Iterable[Subspace],
    *,
    ambient_dim: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    candidates: int = 3,
    avoid: ArrayLike | None = None,
    avoid_radius: float = 0.0,
) -> tuple[FloatArray, float]:
    """argmax_λ min_i d(λ, P_i): перебор по покрытию, затем Nelder–Mead (200 итераций).

    При заданном ``avoid`` ищется только вне шаров B(±avoid, avoid_radius).
    """
    subs = list(subspaces)
    if not subs:
        if ambient_dim is None:
            raise ContractViolation("ambient_dim is required for an empty subspace list")
        return basis_vector(ambient_dim), math.inf
    n = subs[0].ambient_dim
    _check_same_dim(n, *subs)
    for sub in subs:
        if sub.dim >= n:
            raise ContractViolation("a full-dimensional tangent space admits no regular vector")

    cover = sphere_cover(n, tol.cover_radius)
    if avoid is not None:
        bad = _require_unit(avoid, n)

        def allowed(lams: FloatArray) -> NDArray[np.bool_]:
            near = np.minimum(np.linalg.norm(lams - bad, axis=1), np.linalg.norm(lams + bad, axis=1))
            return near >= avoid_radius

    else:

        def allowed(lams: FloatArray) -> NDArray[np.bool_]:
            return np.ones(lams.shape[0], dtype=bool)

    ok = allowed(cover.points)
    if not ok.any():
        raise DegenerateInput(f"no direction stays {avoid_radius} away from ±avoid")
    scores = np.where(ok, min_distance(cover.points, subs), -1.0)
    if n == 1:
        i = int(np.argmax(scores))
        return cover.points[i].copy(), float(scores[i])

    def objective(lam: FloatArray) -> float:
        if not bool(allowed(lam[None, :])[0]):
            return -1.0
        return float(min_distance(lam[None, :], subs)[0])

    best_i = int(np.argmax(scores))
    best_lam, best_val = cover.points[best_i].copy(), float(scores[best_i])
    for i in np.argsort(-scores, kind="stable")[:candidates]:
        if not ok[i]:
            continue
        lam = _refine_on_sphere(objective, cover.points[i], maxiter=200)
        val = objective(lam)
        if val > best_val:
            best_lam, best_val = lam, val
    return best_lam, best_val


def fiber_direction_search(
    mu: ArrayLike,
    l: ArrayLike,
    r: float,
    subspaces: Sequence[Subspace],
    *,
    y: ArrayLike | None = None,
    admissible: Admissible | None = None,
    scan: int = 1000,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[FloatArray, float]:
    """Лучшее λ̂ на дуге π̃_μ^{-1}(y) ∩ B(l, r), 0 < r ≤ 1.

    По умолчанию y = π̃_μ(l). Дуга параметризуется углом θ:
    λ(θ) = cos θ·y + sin θ·μ, |θ| < π/2; условие |λ(θ) − l| ≤ r равносильно
    ρ·cos(θ − φ) ≥ 1 − r²/2, где ρ, φ: полярные координаты (y·l, μ·l).
    Равномерный перебор (``scan`` + 1 точек) уточняется методом Брента на
    соседнем отрезке. ``admissible`` отсекает точки вне допустимой области.
    """
    mu_v = _require_unit(mu)
    l_v = _require_unit(l, mu_v.shape[0])
    subs = list(subspaces)
    _check_same_dim(mu_v.shape[0], *subs)
    if not 0.0 < r <= 1.0:
        raise DegenerateInput(f"search radius must lie in (0, 1], got {r}")

    if y is None:
        y_v = tilde_pi(mu_v, l_v, tol=tol)
    else:
        y_v = _require_unit(y, mu_v.shape[0])
        if abs(float(y_v @ mu_v)) > _UNIT_SLACK:
            raise ContractViolation("fibre base must be orthogonal to mu")
    a, c = float(l_v @ y_v), float(l_v @ mu_v)
    rho, phi = math.hypot(a, c), math.atan2(c, a)
    need = 1.0 - r * r / 2.0
    if rho <= tol.eps_geom or need > rho:
        raise DegenerateInput("fibre arc is empty at this radius")
    half = math.acos(min(1.0, need / rho))
    edge = math.pi / 2 - 1e-9
    lo, hi = max(phi - half, -edge), min(phi + half, edge)
    if hi - lo <= 10 * tol.eps_geom:
        raise DegenerateInput("fibre arc is empty at this radius")

    def admitted(lams: FloatArray) -> NDArray[np.bool_]:
        if admissible is None:
            return np.ones(lams.shape[0], dtype=bool)
        return np.asarray(admissible(lams), dtype=bool)

    if not subs and y is None and bool(admitted(l_v[None, :])[0]):
        return l_v.copy(), math.inf

    thetas = np.linspace(lo, hi, scan + 1)
    lams = fiber_point(mu_v, y_v, thetas)
    ok = admitted(lams)
    if not ok.any():
        raise NumericFailure(
            "no admissible direction on the fibre arc",
            {"mu": mu_v.tolist(), "l": l_v.tolist(), "radius": r},
        )
    if not subs:
        # ближайшая к l допустимая точка
        i = int(np.argmin(np.where(ok, np.abs(thetas - phi), np.inf)))
        return lams[i] / np.linalg.norm(lams[i]), math.inf

    scores = np.where(ok, min_distance(lams, subs), -1.0)
    i = int(np.argmax(scores))
    best_lam, best_val = lams[i], float(scores[i])
    lo_i, hi_i = thetas[max(i - 1, 0)], thetas[min(i + 1, scan)]
    if hi_i > lo_i:
        res = optimize.minimize_scalar(
            lambda th: -float(min_distance(fiber_point(mu_v, y_v, th)[None, :], subs)[0]),
            bounds=(lo_i, hi_i),
            method="bounded",
            options={"xatol": 1e-12},
        )
        cand = fiber_point(mu_v, y_v, float(res.x))
        val = float(min_distance(cand[None, :], subs)[0])
        if val > best_val and bool(admitted(cand[None, :])[0]):
            best_lam, best_val = cand, val
    return best_lam / np.linalg.norm(best_lam), best_val
