from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regvec.core.config import DEFAULT_TOLERANCES
from regvec.core.errors import ContractViolation
from regvec.core.geom_core import Subspace, basis_vector
from regvec.core.lip_calculus import (
    Affine,
    ClampedHypersurface,
    Hypersurface,
    LiftedHypersurface,
    Side,
    below,
    compose_isometry,
    constant,
    fmax,
    fmin,
    mcshane_extend,
    order_statistics,
    shift,
)
from regvec.core.pl_complex import GraphPiece

from .conftest import Bumps


def test_mcshane_two_points():
    xi = mcshane_extend([(((0.0,),), (0.0,)), (((1.0,),), (1.0,))], 1.0)
    q = np.linspace(-3, 4, 1001)[:, None]
    expected = np.minimum(np.abs(q[:, 0]), 1.0 + np.abs(q[:, 0] - 1.0))
    np.testing.assert_allclose(xi(q), expected, atol=1e-9)


def test_mcshane_rejects_steep_piece():
    with pytest.raises(ContractViolation, match="slope"):
        mcshane_extend([([[0.0], [1.0]], [0.0, 2.0])], 1.0)


def test_mcshane_rejects_incompatible_pieces():
    with pytest.raises(ContractViolation, match="compatible"):
        mcshane_extend([([[0.0]], [0.0]), ([[0.1]], [1.0])], 1.0)


@settings(max_examples=40)
@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=8, unique=True),
    st.floats(-1, 1),
    st.floats(0.1, 2.0),
)
def test_mcshane_extends_interpolant(nodes, amp, L):
    """Куски: отрезки кусочно-линейной интерполяции L-липшицевой функции."""
    xs = np.sort(np.array(nodes))
    if np.min(np.diff(xs)) < 1e-3:
        return
    ys = amp * L * np.sin(xs)
    pieces = [([[xs[i]], [xs[i + 1]]], [ys[i], ys[i + 1]]) for i in range(0, len(xs) - 1, 2)]
    xi = mcshane_extend(pieces, L)
    for shadow, heights in pieces:
        grid = np.linspace(shadow[0][0], shadow[1][0], 7)[:, None]
        exact = np.interp(grid[:, 0], xs, ys)
        np.testing.assert_allclose(xi(grid), exact, atol=1e-9)
    q = np.linspace(-5, 5, 201)[:, None]
    vals = xi(q)
    assert np.all(np.abs(np.diff(vals)) <= L * np.diff(q[:, 0]) + 1e-9)


def test_mcshane_in_the_plane_agrees_with_affine(rng):
    g = np.array([0.3, -0.4])
    f = Affine(g, 1.0)
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    seg = np.array([[2.0, 2.0], [3.0, 1.0]])
    xi = mcshane_extend([(tri, f(tri)), (seg, f(seg))], 0.5)
    inside = rng.dirichlet(np.ones(3), size=50) @ tri
    np.testing.assert_allclose(xi(inside), f(inside), atol=1e-9)
    p, q = rng.uniform(-4, 4, size=(2, 300, 2))
    gap = np.abs(xi(p) - xi(q))
    assert np.all(gap <= 0.5 * np.linalg.norm(p - q, axis=1) + 1e-9)


def test_mcshane_random_functions_are_lipschitz(rng):
    """100 случайных частичных функций, по 10^4 пар точек на каждую."""
    slack = 2 * DEFAULT_TOLERANCES.eps_eval
    for _ in range(100):
        d = int(rng.integers(1, 4))
        L = float(rng.uniform(0.1, 3.0))
        w = rng.normal(size=d)
        w /= np.linalg.norm(w)
        phase = float(rng.uniform(0.0, 2 * math.pi))
        nodes = rng.uniform(-2.0, 2.0, size=(int(rng.integers(2, 9)), d))
        heights = L * np.sin(nodes @ w + phase)
        xi = mcshane_extend([(node[None, :], [h]) for node, h in zip(nodes, heights)], L)
        np.testing.assert_allclose(xi(nodes), heights, atol=1e-9)
        x, y = rng.uniform(-4.0, 4.0, size=(2, 10_000, d))
        gap = np.abs(xi(x) - xi(y))
        assert np.all(gap <= L * np.linalg.norm(x - y, axis=1) + slack)


def test_sentinel_rules():
    f = Affine(np.array([1.0]), 0.0)
    top, bottom = constant(math.inf, 1), constant(-math.inf, 1)
    assert fmin(f, top) is f
    assert fmin(f, bottom) is bottom
    assert fmax(f, bottom) is f
    assert fmax(f, top) is top
    assert shift(top, 3.0) is top
    with pytest.raises(ContractViolation):
        order_statistics([f, top])


def test_order_statistics_sorted(rng):
    fns = [Affine(rng.normal(size=2), float(c)) for c in rng.normal(size=4)]
    stats = order_statistics(fns)
    pts = rng.normal(size=(100, 2))
    vals = np.vstack([s(pts) for s in stats])
    assert np.all(np.diff(vals, axis=0) >= 0)
    np.testing.assert_allclose(np.sort(vals, axis=0), np.sort(np.vstack([f(pts) for f in fns]), axis=0))
    assert stats[0].lipschitz == pytest.approx(max(f.lipschitz for f in fns))


def test_compose_isometry_checks_matrix():
    f = Affine(np.array([1.0, 0.0]), 0.0)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    g = compose_isometry(f, rot)
    assert g([1.0, 0.0]) == pytest.approx(0.0)
    assert g([0.0, 1.0]) == pytest.approx(-1.0)
    with pytest.raises(ContractViolation):
        compose_isometry(f, 2 * np.eye(2))


# --- hypersurfaces -------------------------------------------------------


def test_flat_residual_and_side(flat_e2):
    H = flat_e2(1.0)
    pts = np.array([[0.0, 0.0], [5.0, 1.0], [-2.0, 3.0]])
    np.testing.assert_allclose(H.residual(pts), [-1.0, 0.0, 2.0])
    assert H.side(pts).tolist() == [-1, 0, 1]
    assert below(H, [0.0, 0.0]) is Side.BELOW


def test_dimension_mismatch_rejected():
    with pytest.raises(ContractViolation):
        Hypersurface(basis_vector(3), constant(0.0, 1))


def test_flat_margins(flat_e2, tilted):
    H = flat_e2(0.0)
    assert H.margin_for(basis_vector(2)) == pytest.approx(1.0)
    assert H.margin_for(tilted) == pytest.approx(math.cos(math.radians(20)))
    assert H.margin_for(-basis_vector(2)) == 0.0


def test_regraph_describes_the_same_set(tilted, rng):
    H = Hypersurface([0.0, 1.0], Bumps())
    H2 = H.regraph(tilted)
    w = np.linspace(-3, 3, 121)[:, None]
    np.testing.assert_allclose(H.residual(H2.points(w)), 0.0, atol=1e-7)
    pts = rng.uniform(-3, 3, size=(400, 2))
    r1, r2 = H.residual(pts), H2.residual(pts)
    far = np.abs(r1) > 1e-3
    assert np.array_equal(np.sign(r1[far]), np.sign(r2[far]))


def test_regraph_to_irregular_direction_fails(flat_e2):
    with pytest.raises(ContractViolation):
        flat_e2(0.0).regraph(basis_vector(2, 0))


def test_transfer_bound_for_flat_wall(flat_e2, tilted):
    H = flat_e2(0.0)
    assert H.transfer_bound(basis_vector(2), basis_vector(2)) == pytest.approx(1.0)
    assert H.transfer_bound(tilted, basis_vector(2)) >= 1.0


def test_lifted_wall_contains_base(tilted):
    base = Hypersurface.flat([1.0], 0.5)
    e = np.array([1.0, 0.0])
    wall = LiftedHypersurface.lift(base, e, tilted)
    assert wall.tangents is not None and wall.tangents[0].dim == 1
    ts = np.linspace(-2, 2, 9)[:, None]
    # цилиндр над точкой 0.5 ∈ N_e: прямая, параллельная e
    pts = wall.points(ts)
    shadow = pts @ np.array([0.0, 1.0])
    assert np.ptp(np.abs(shadow)) == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(wall.residual(pts), 0.0, atol=1e-9)
    assert wall.margin_for(tilted) > 0


def test_lift_along_axis_is_rejected():
    base = Hypersurface.flat([1.0], 0.0)
    e = np.array([1.0, 0.0])
    with pytest.raises(ContractViolation):
        LiftedHypersurface.lift(base, e, e)


def test_graph_piece_from_single_vertex():
    piece = GraphPiece.from_values([[1.0, 2.0]], [3.0])
    assert piece.slope == 0.0
    assert piece.affine([[5.0, 5.0]])[0] == pytest.approx(3.0)
    assert Subspace.zero(2).dim == 0


def test_clamped_surface_stays_between_walls(flat_e2, tilted):
    lo, hi = flat_e2(0.1), flat_e2(0.3)
    up = basis_vector(2)
    C = ClampedHypersurface.clamp(Hypersurface(up, Bumps()), lo, hi, up)
    assert len(C.parts) == 3
    w = np.linspace(-3, 3, 241)[:, None]
    heights = C.points(w)[:, 1]
    assert heights.min() >= 0.1 - 1e-12
    assert heights.max() <= 0.3 + 1e-12
    # над горбами поверхность упирается в потолок, между ними в пол
    assert C.height_fn([[1.0]])[0] == pytest.approx(0.3)
    assert C.height_fn([[0.0]])[0] == pytest.approx(0.1)


def test_clamped_regraph_describes_the_same_set(flat_e2, tilted):
    up = basis_vector(2)
    C = ClampedHypersurface.clamp(Hypersurface(up, Bumps()), flat_e2(0.1), None, up)
    C2 = C.regraph(tilted)
    assert isinstance(C2, ClampedHypersurface)
    assert C2.ceiling is None
    w = np.linspace(-3, 3, 121)[:, None]
    np.testing.assert_allclose(C.residual(C2.points(w)), 0.0, atol=1e-7)
    assert C.margin_for(tilted) > 0
    with pytest.raises(ContractViolation):
        C.regraph(basis_vector(2, 0))
