from __future__ import annotations

import json
import math

import pytest

from regvec import commands
from regvec.commands import analyze, flatten, generate, render, verify
from regvec.core.scene import Scene, save_scene

FAST = ["--samples", "2000", "--quiet"]


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def make(kind: str, **params: object) -> str:
    argv = [kind, "--out", f"{kind}.json", "--quiet"]
    if "sides" in params:
        argv += ["--sides", str(params["sides"])]
    assert generate.run(argv) == 0
    return f"{kind}.json"


def test_generate_and_analyze(capsys):
    path = make("square")
    assert analyze.run([path, "--json"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["dimension"] == 2
    assert len(result["tangents"]) == 2
    assert result["margin"] == pytest.approx(2**-0.5, abs=1e-4)
    assert result["e_n_margin"] == pytest.approx(0.0, abs=1e-12)
    assert result["flat_groups"] == 2


def test_analyze_prints_progress(capsys):
    assert analyze.run([make("segment")]) == 0
    out = capsys.readouterr().out
    assert "[analyze]" in out and "✅" in out


def test_interior_exit_code(capsys):
    assert analyze.run([make("interior")]) == 3
    assert "empty-interior" in capsys.readouterr().err


def test_bad_json_exit_code(tmp_path):
    (tmp_path / "bad.json").write_text("{oops", encoding="utf-8")
    assert analyze.run(["bad.json"]) == 2
    assert flatten.run(["bad.json", "--quiet"]) == 2


def test_flatten_hline():
    assert flatten.run([make("hline"), "--report", "report.json", "--out", "map.json", *FAST]) == 0
    report = json.loads(open("report.json", encoding="utf-8").read())
    assert report["verified"] is True
    assert report["certificate"]["L_fwd"] == 1.0
    assert report["alpha_reg"] == 1.0
    assert report["seed"] == 1729
    assert json.loads(open("map.json", encoding="utf-8").read())["hypersurfaces"] == 1


def test_flatten_square_and_verify():
    assert flatten.run([make("square"), "--report", "report.json", *FAST]) == 0
    report = json.loads(open("report.json", encoding="utf-8").read())
    assert report["verified"] is True
    assert report["alpha_reg"] > 0.05
    assert report["validation"]["valid"] is True
    assert verify.run(["report.json", "--quiet"]) == 0


def test_verify_detects_tampering():
    assert flatten.run([make("vgraph"), "--report", "report.json", *FAST]) == 0
    report = json.loads(open("report.json", encoding="utf-8").read())
    report["certificate"]["L_fwd"] *= 2
    with open("tampered.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh)
    assert verify.run(["tampered.json", "--quiet"]) == 5


def test_verify_rejects_other_minor_version():
    assert flatten.run([make("hline"), "--report", "report.json", *FAST]) == 0
    report = json.loads(open("report.json", encoding="utf-8").read())
    report["regvec_version"] = "99.0.0"
    with open("old.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh)
    assert verify.run(["old.json", "--quiet"]) == 5


def test_verify_bad_report():
    with open("report.json", "w", encoding="utf-8") as fh:
        json.dump({"scene": {}}, fh)
    assert verify.run(["report.json", "--quiet"]) == 2


def test_render_scene_and_report():
    path = make("square")
    assert render.run([path, "--out", "scene.svg", "--quiet"]) == 0
    assert '<g id="A"' in open("scene.svg", encoding="utf-8").read()
    assert flatten.run([path, "--report", "report.json", *FAST]) == 0
    assert render.run(["report.json", "--out", "fig.svg", "--quiet"]) == 0
    svg = open("fig.svg", encoding="utf-8").read()
    for layer in ("A", "hypersurfaces", "image"):
        assert f'<g id="{layer}"' in svg


def test_render_obj_sample_count():
    path = make("vertical-triangle")
    assert render.run([path, "--out", "fig.obj", "--samples", "300", "--quiet"]) == 0
    lines = open("fig.obj", encoding="utf-8").read().splitlines()
    assert sum(1 for line in lines if line.startswith("v ")) == 300


def test_render_rejects_four_dimensions(capsys):
    save_scene(Scene(4, [[[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]]], "stick"), "stick.json")
    assert render.run(["stick.json", "--out", "fig.svg", "--quiet"]) == 3
    assert "n = 2" in capsys.readouterr().err


def test_dispatcher():
    with pytest.raises(SystemExit) as exc:
        commands.main(["generate", "hline", "--out", "h.json", "--quiet"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        commands.main(["frobnicate"])
    assert exc.value.code == 2


# --- end-to-end sweeps ---------------------------------------------------


POLYGON_SIDES = [3, 4, 5, 6, 8, 12, 16, 32, 64]


@pytest.mark.slow
def test_polygon_family(capsys):
    """Запас A падает с числом сторон, а запас построенной системы нет."""
    margins, alphas = {}, {}
    for sides in POLYGON_SIDES:
        path = make("polygon", sides=sides)
        capsys.readouterr()
        assert analyze.run([path, "--json"]) == 0
        margins[sides] = json.loads(capsys.readouterr().out)["margin"]
        assert flatten.run([path, "--report", "report.json", *FAST]) == 0
        report = json.loads(open("report.json", encoding="utf-8").read())
        assert report["verified"] is True
        alphas[sides] = report["alpha_reg"]

    # у чётного m-угольника m/2 различных направлений сторон, у нечётного m
    for sides, margin in margins.items():
        lines = sides // 2 if sides % 2 == 0 else sides
        assert margin == pytest.approx(math.sin(math.pi / (2 * lines)), abs=2e-3)
    even = [margins[s] for s in POLYGON_SIDES if s % 2 == 0]
    assert all(a >= b for a, b in zip(even, even[1:]))
    assert margins[64] == pytest.approx(0.049, abs=2e-3)
    assert min(alphas.values()) >= 0.01


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["vertical-triangle", "cube-face"])
def test_three_dimensional_scenes(kind):
    path = make(kind)
    assert flatten.run([path, "--report", "report.json", "--samples-per-simplex", "16", *FAST]) == 0
    report = json.loads(open("report.json", encoding="utf-8").read())
    assert report["verified"] is True
    assert render.run(["report.json", "--out", "fig.obj", "--samples", "400", "--quiet"]) == 0
    lines = open("fig.obj", encoding="utf-8").read().splitlines()
    assert sum(1 for line in lines if line.startswith("v ")) == 400
    for layer in ("A", "hypersurfaces", "image"):
        assert f"o {layer}" in lines
