from __future__ import annotations

import math

import numpy as np
import pytest

from regvec.core.config import DEFAULT_TOLERANCES
from regvec.core.flattener import build_flattening, flatten_set
from regvec.core.geom_core import Subspace, max_min_direction
from regvec.core.oracle_verify import (
    UnionFind,
    check_graph_cover,
    component_count,
    estimate_bilipschitz,
    grid_sphere_argmax,
    verify_pipeline,
)
from regvec.core.pl_complex import PLSet
from regvec.core.regular_systems import RegularSystem, build_system, default_box

from .conftest import Bumps

GOLDEN = (1 + math.sqrt(5)) / 2
BOX = (np.array([-2.0, -2.0]), np.array([2.0, 2.0]))


# --- direction oracle ----------------------------------------------------


def test_grid_single_line():
    _, val = grid_sphere_argmax([Subspace.span([[1.0, 0.0]])], 10_000)
    assert val >= 1 - 1e-3


def test_grid_two_lines():
    subs = [Subspace.span([[1.0, 0.0]]), Subspace.span([[0.0, 1.0]])]
    _, val = grid_sphere_argmax(subs, 10_000)
    assert val == pytest.approx(1 / math.sqrt(2), abs=1e-3)


def test_grid_empty_list():
    _, val = grid_sphere_argmax([], ambient_dim=3)
    assert math.isinf(val)


@pytest.mark.parametrize("n", [2, 3])
def test_search_matches_grid_oracle(n):
    rng = np.random.default_rng(100 + n)
    resolution = 2000 if n == 2 else 200
    for _ in range(50):
        subs = []
        for _ in range(int(rng.integers(1, 7))):
            k = int(rng.integers(1, n))
            subs.append(Subspace.span(rng.normal(size=(k, n))))
        _, fast = max_min_direction(subs)
        _, slow = grid_sphere_argmax(subs, resolution)
        assert fast <= slow + 0.02
        # точка покрытия лежит в t/2-окрестности оптимума
        assert fast >= slow - DEFAULT_TOLERANCES.cover_radius / 2 - 1e-9


# --- bi-Lipschitz sampling -----------------------------------------------


def test_identity_estimate():
    est = estimate_bilipschitz(lambda q: q, BOX, 2000, seed=1, threads=2)
    assert est.forward == pytest.approx(1.0, abs=1e-9)
    assert est.inverse == pytest.approx(1.0, abs=1e-9)
    assert est.pairs == 2000


def test_shear_estimate():
    shear = np.array([[1.0, 0.0], [1.0, 1.0]])
    est = estimate_bilipschitz(lambda q: q @ shear.T, BOX, 10_000, seed=2, threads=4)
    assert 1.61 <= est.forward <= GOLDEN + 1e-9
    assert 1.61 <= est.inverse <= GOLDEN + 1e-9


# --- connectivity oracle -------------------------------------------------


def test_union_find():
    uf = UnionFind(5)
    assert uf.union(0, 1)
    assert uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.components == 3
    assert uf.find(0) == uf.find(1)
    assert uf.find(2) != uf.find(3)


def test_parallel_slab_is_connected():
    assert component_count(lambda p: (p[:, 1] > 0) & (p[:, 1] < 1), BOX, 0.05) == 1


def test_two_bumps_give_two_components():
    bumps = Bumps()
    assert component_count(lambda p: (p[:, 1] > 0) & (p[:, 1] < bumps(p[:, :1])), BOX, 0.02) == 2


def test_empty_region():
    assert component_count(lambda p: np.zeros(p.shape[0], dtype=bool), BOX, 0.1) == 0


def test_pitch_must_be_positive():
    with pytest.raises(ValueError):
        component_count(lambda p: p[:, 0] > 0, BOX, 0.0)


# --- image cover ---------------------------------------------------------


def test_cover_negative_control(flat_e2):
    zmap = build_flattening(RegularSystem(2, (flat_e2(0.0),)))
    off = PLSet.from_vertex_lists(2, [[[-1.0, 0.5], [1.0, 0.5]]])
    report = check_graph_cover(zmap, flatten_set(zmap, off, 8))
    assert report.violations == 8
    assert report.max_residual == pytest.approx(0.5)


def test_cover_of_vgraph(vgraph):
    zmap = build_flattening(build_system(vgraph))
    report = check_graph_cover(zmap, flatten_set(zmap, vgraph, 32))
    assert report.violations == 0
    assert report.max_slope <= report.slope_bound


def test_pipeline_on_vgraph(vgraph):
    box = default_box(vgraph)
    zmap = build_flattening(build_system(vgraph, box=box))
    check = verify_pipeline(zmap, flatten_set(zmap, vgraph, 32), box, samples=2000, threads=2)
    assert check.verified, check.failures
    assert check.to_dict()["transport_mismatches"] == 0
