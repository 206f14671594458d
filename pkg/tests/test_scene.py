from __future__ import annotations

import math

import pytest

from regvec.core.errors import ContractViolation, SceneParseError
from regvec.core.render import obj_document, svg_document
from regvec.core.scene import Scene, dumps_scene, generate, load_scene, loads_scene, save_scene


@pytest.mark.parametrize("kind", ["segment", "square", "vgraph", "polygon", "cube-face"])
def test_round_trip_is_exact(kind, tmp_path):
    scene = generate(kind, sides=7)
    path = tmp_path / "scene.json"
    save_scene(scene, path)
    again = load_scene(path)
    assert again.simplices == scene.simplices
    assert dumps_scene(again) == dumps_scene(scene)


def test_polygon_vertices_on_unit_circle():
    scene = generate("polygon", sides=12)
    assert scene.name == "polygon-12"
    assert len(scene.simplices) == 12
    for a, _ in scene.simplices:
        assert math.hypot(*a) == pytest.approx(1.0)


def test_unknown_kind_and_small_polygon():
    with pytest.raises(ContractViolation):
        generate("torus")
    with pytest.raises(ContractViolation):
        generate("polygon", sides=2)


def test_interior_rejected_on_load():
    scene = loads_scene(dumps_scene(generate("interior")))
    with pytest.raises(ContractViolation, match="empty-interior"):
        scene.to_plset()


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        "[]",
        '{"dimension": 0, "simplices": []}',
        '{"dimension": 2, "simplices": [[[0, 0, 0]]]}',
        '{"dimension": 2, "simplices": [[[0, 0], [1, 0], [0, 1], [1, 1]]]}',
        '{"dimension": 2, "simplices": [[[0, "x"]]]}',
        '{"dimension": 2, "simplices": [[[0, NaN]]]}',
        '{"dimension": 2, "simplices": [[[0, Infinity]]]}',
        '{"dimension": true, "simplices": []}',
    ],
)
def test_parse_errors(text):
    with pytest.raises(SceneParseError):
        loads_scene(text)


def test_missing_file(tmp_path):
    with pytest.raises(SceneParseError):
        load_scene(tmp_path / "missing.json")


def test_metadata_survives():
    scene = Scene(2, [[[0.0, 0.0]]], "dot", {"author": "me"})
    assert loads_scene(dumps_scene(scene)).metadata == {"author": "me"}


# --- figures -------------------------------------------------------------


def test_svg_layers(square):
    text = svg_document(square)
    assert text.startswith("<?xml")
    assert '<g id="A"' in text
    assert "hypersurfaces" not in text
    assert text.count("<line ") == 4


def test_svg_needs_plane():
    A = generate("vertical-triangle").to_plset()
    with pytest.raises(ContractViolation):
        svg_document(A)


def test_obj_vertex_count():
    A = generate("cube-face").to_plset()
    text = obj_document(A, samples=101)
    lines = text.splitlines()
    assert lines[:2] == ["# regvec point cloud", "o A"]
    assert sum(1 for line in lines if line.startswith("v ")) == 101
    assert any(line.startswith("l ") for line in lines)


def test_obj_edges_stay_inside_their_simplex():
    # 15 точек на 10 треугольников: по две вершины у первых семи, одна у восьмого
    A = generate("cube-face").to_plset()
    lines = obj_document(A, samples=15).splitlines()
    assert sum(1 for line in lines if line.startswith("v ")) == 15
    edges = [tuple(int(t) for t in line.split()[1:]) for line in lines if line.startswith("l ")]
    assert edges == [(2 * i + 1, 2 * i + 2) for i in range(7)]


def test_obj_hypersurface_layer_shares_the_budget():
    A = generate("vertical-triangle").to_plset()
    line = [[0.1 * t, 0.5, 0.0] for t in range(10)]
    lines = obj_document(A, samples=12, surfaces=[line]).splitlines()
    assert sum(1 for row in lines if row.startswith("v ")) == 12
    assert "o hypersurfaces" in lines
    # 6 точек A и 6 точек линии, соединённых одной полилинией
    assert lines[-1] == "l " + " ".join(str(i) for i in range(7, 13))
