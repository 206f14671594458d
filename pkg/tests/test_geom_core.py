from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import cKDTree

from regvec.core.errors import ContractViolation, DegenerateInput
from regvec.core.geom_core import (
    Subspace,
    angle,
    basis_vector,
    coords_along,
    dist_to_subspace,
    embed_along,
    fiber_direction_search,
    fiber_tangent,
    householder_frame,
    max_min_direction,
    min_distance,
    project_along,
    sphere_cover,
    sphere_mesh,
    tilde_pi,
    unit_vector,
)
from regvec.core.oracle_verify import grid_sphere_argmax

SQ2 = 1.0 / math.sqrt(2.0)


def unit_vectors(n: int):
    return (
        st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n)
        .map(np.array)
        .filter(lambda v: np.linalg.norm(v) > 0.1)
        .map(lambda v: v / np.linalg.norm(v))
    )


# --- distances and angles ------------------------------------------------


def test_distance_examples():
    e1 = Subspace.span([[1.0, 0.0]])
    assert dist_to_subspace([0.0, 1.0], e1) == pytest.approx(1.0)
    assert dist_to_subspace([1.0, 0.0], e1) == pytest.approx(0.0)
    assert dist_to_subspace([SQ2, SQ2], e1) == pytest.approx(SQ2)


def test_distance_to_zero_subspace_is_one():
    assert dist_to_subspace([0.6, 0.8], Subspace.zero(2)) == pytest.approx(1.0)


def test_dimension_mismatch_raises():
    with pytest.raises(ContractViolation):
        dist_to_subspace([0.0, 0.0, 1.0], Subspace.span([[1.0, 0.0]]))


def test_non_unit_vector_rejected():
    with pytest.raises(ContractViolation):
        dist_to_subspace([2.0, 0.0], Subspace.span([[1.0, 0.0]]))


def test_min_distance_of_empty_list_is_inf():
    assert np.isinf(min_distance([[1.0, 0.0]], [])[0])


def test_angle_examples():
    x = Subspace.span([[1.0, 0.0, 0.0]])
    y = Subspace.span([[0.0, 1.0, 0.0]])
    xy = Subspace.span([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert angle(x, xy) == pytest.approx(0.0, abs=1e-12)
    assert angle(x, y) == pytest.approx(1.0)
    assert angle(xy, x) == 1.0
    assert angle(Subspace.zero(3), y) == 0.0


@given(unit_vectors(3), unit_vectors(3))
def test_angle_is_symmetric_for_lines(u, v):
    P, Q = Subspace.span([u]), Subspace.span([v])
    assert angle(P, Q) == pytest.approx(angle(Q, P), abs=1e-9)


# --- projections ---------------------------------------------------------


def test_project_along_e2():
    shadow, height = project_along(basis_vector(2), [3.0, 5.0])
    assert height == pytest.approx(5.0)
    assert abs(shadow[0]) == pytest.approx(3.0)


@given(unit_vectors(3))
def test_householder_frame_is_orthonormal_complement(lam):
    frame = householder_frame(lam)
    assert frame.shape == (3, 2)
    np.testing.assert_allclose(frame.T @ frame, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(frame.T @ lam, 0.0, atol=1e-12)


@given(unit_vectors(3), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_coords_embed_are_inverse(lam, q):
    pts = np.array([q])
    w, t = coords_along(lam, pts)
    np.testing.assert_allclose(embed_along(lam, w, t), pts, atol=1e-9)


def test_tilde_pi_examples():
    e = basis_vector(2)
    np.testing.assert_allclose(tilde_pi(e, [SQ2, SQ2]), [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(tilde_pi(e, [-SQ2, -SQ2]), [-1.0, 0.0], atol=1e-12)


def test_tilde_pi_undefined_at_poles():
    e = basis_vector(3)
    with pytest.raises(DegenerateInput):
        tilde_pi(e, e)
    with pytest.raises(DegenerateInput):
        tilde_pi(e, -e)


def test_unit_vector_of_zero():
    with pytest.raises(DegenerateInput):
        unit_vector([0.0, 0.0])


@settings(max_examples=60)
@given(unit_vectors(3), unit_vectors(3), unit_vectors(3))
def test_fiber_tangent_is_at_least_as_regular(mu, x, w):
    """Для T ∋ x касательная к слою π̃_μ через x не ближе к T, чем μ."""
    if abs(float(x @ mu)) > 0.99:
        return
    tangent = fiber_tangent(mu, x)
    assert np.linalg.norm(tangent) == pytest.approx(1.0)
    assert float(tangent @ x) == pytest.approx(0.0, abs=1e-9)
    T = Subspace.span([x, w])
    assert dist_to_subspace(tangent, T) >= dist_to_subspace(mu, T) - 1e-9


# --- sphere covers -------------------------------------------------------


def test_cover_of_s0():
    cover = sphere_cover(1, 0.2)
    assert sorted(cover.points[:, 0].tolist()) == [-1.0, 1.0]


@pytest.mark.parametrize("n", [2, 3])
def test_cover_property(n, rng):
    t = 0.3
    cover = sphere_cover(n, t)
    # 10^5 случайных точек сферы, ближайшая точка покрытия через k-d дерево
    sample = rng.normal(size=(100_000, n))
    sample /= np.linalg.norm(sample, axis=1, keepdims=True)
    gaps, _ = cKDTree(cover.points).query(sample)
    assert gaps.max() <= t / 2 + 1e-12
    np.testing.assert_allclose(np.linalg.norm(cover.points, axis=1), 1.0)


def test_cover_radius_checked():
    with pytest.raises(ContractViolation):
        sphere_cover(2, 0.0)


def test_mesh_reaches_requested_size():
    mesh = sphere_mesh(3, 500)
    assert len(mesh) >= 500
    assert mesh.edges().shape[1] == 2


# --- direction search ----------------------------------------------------


def test_max_min_single_line():
    lam, margin = max_min_direction([Subspace.span([[1.0, 0.0]])])
    assert margin == pytest.approx(1.0, abs=1e-6)
    assert abs(lam[0]) < 1e-3


def test_max_min_two_lines():
    subs = [Subspace.span([[1.0, 0.0]]), Subspace.span([[0.0, 1.0]])]
    _, margin = max_min_direction(subs)
    assert margin == pytest.approx(SQ2, abs=1e-4)


def test_max_min_empty_list():
    lam, margin = max_min_direction([], ambient_dim=3)
    assert math.isinf(margin)
    np.testing.assert_array_equal(lam, basis_vector(3))


def test_max_min_full_dimensional_raises():
    with pytest.raises(ContractViolation):
        max_min_direction([Subspace.span(np.eye(2))])


def test_fiber_search_finds_regular_direction():
    mu, l = basis_vector(3), basis_vector(3, 0)
    lam, margin = fiber_direction_search(mu, l, 1.0, [Subspace.span([[1.0, 0.0, 0.0]])])
    assert margin > 0.3
    assert np.linalg.norm(lam - l) <= 1.0 + 1e-9
    # λ остаётся на слое над π̃_μ(l)
    np.testing.assert_allclose(tilde_pi(mu, lam), tilde_pi(mu, l), atol=1e-9)


def test_fiber_search_tiny_radius():
    with pytest.raises(DegenerateInput):
        fiber_direction_search(basis_vector(3), basis_vector(3, 0), 1e-15, [])


def test_fiber_search_without_subspaces_returns_start():
    l = basis_vector(3, 0)
    lam, margin = fiber_direction_search(basis_vector(3), l, 0.5, [])
    np.testing.assert_array_equal(lam, l)
    assert math.isinf(margin)


def test_fiber_search_radius_above_one():
    with pytest.raises(DegenerateInput):
        fiber_direction_search(basis_vector(3), basis_vector(3, 0), 1.5, [])


def test_fiber_search_explicit_base():
    mu, y = basis_vector(3), basis_vector(3, 0)
    l = np.array([math.cos(0.3), 0.0, math.sin(0.3)])
    lam, margin = fiber_direction_search(mu, l, 0.5, [Subspace.span([[0.0, 1.0, 0.0]])], y=y)
    # λ = cos θ·y + sin θ·μ
    assert abs(lam[1]) < 1e-12
    assert np.linalg.norm(lam - l) <= 0.5 + 1e-9
    assert margin > 0.99


def test_fiber_search_base_must_be_orthogonal():
    mu = basis_vector(3)
    with pytest.raises(ContractViolation):
        fiber_direction_search(mu, basis_vector(3, 0), 0.5, [], y=unit_vector([1.0, 0.0, 1.0]))


def test_max_min_avoids_ball():
    subs = [Subspace.span([[1.0, 0.0]]), Subspace.span([[0.0, 1.0]])]
    bad = np.array([SQ2, SQ2])
    lam, margin = max_min_direction(subs, avoid=bad, avoid_radius=0.3)
    assert min(np.linalg.norm(lam - bad), np.linalg.norm(lam + bad)) >= 0.3
    assert margin == pytest.approx(SQ2, abs=1e-4)
    assert lam[0] * lam[1] < 0


def test_max_min_avoid_everything():
    with pytest.raises(DegenerateInput):
        max_min_direction(
            [Subspace.span([[1.0, 0.0]])], avoid=basis_vector(2), avoid_radius=3.0
        )


def _random_subspace(rng, n: int, dims: tuple[int, ...]) -> Subspace:
    k = int(rng.choice(dims))
    return Subspace.span(rng.normal(size=(k, n)))


def test_angle_triangle_inequality(rng):
    for _ in range(1000):
        P, Q, R = (_random_subspace(rng, 3, (1, 2)) for _ in range(3))
        assert angle(P, R) <= angle(P, Q) + angle(Q, R) + 1e-9


@pytest.mark.parametrize("n, resolution", [(2, 2000), (3, 200)])
def test_cover_contains_near_optimal_direction(n, resolution, rng):
    """Среди точек t-покрытия есть направление с запасом ≥ оптимум − t."""
    t = 0.2
    cover = sphere_cover(n, t)
    for _ in range(10):
        subs = [_random_subspace(rng, n, tuple(range(1, n))) for _ in range(int(rng.integers(1, 5)))]
        _, best = grid_sphere_argmax(subs, resolution)
        assert min_distance(cover.points, subs).max() >= best - t
