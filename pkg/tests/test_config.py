from __future__ import annotations

import pytest

from regvec.core.config import DEFAULT_TOLERANCES, Config, Tolerances, default_threads, load_config


def test_defaults_without_files(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = Config()
    assert cfg.eps_eval == 1e-9
    assert cfg.seed == 1729
    assert cfg.samples == 10_000
    assert cfg["_config_source"] == "<default>"


def test_local_regvec_toml_wins(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "regvec.toml").write_text("[tool.regvec]\neta = 0.3\nseed = 7\n", encoding="utf-8")
    cfg = load_config()
    assert cfg.eta == 0.3
    assert cfg.seed == 7
    assert cfg["_config_source"].endswith("regvec.toml")


def test_pyproject_section(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "pyproject.toml").write_text(
        "[project]\nname = 'x'\n\n[tool.regvec]\nalpha_min = 0.01\n", encoding="utf-8"
    )
    assert load_config().alpha_min == 0.01


def test_pyproject_without_section_falls_through(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "pyproject.toml").write_text("[project]\nname = 'x'\n", encoding="utf-8")
    cfg = load_config()
    # packaged regvec.toml carries the defaults
    assert cfg.eps_mem == DEFAULT_TOLERANCES.eps_mem


def test_missing_explicit_path_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        load_config(tmp_path / "nope.toml")
    assert exc.value.code == 2
    assert "❌" in capsys.readouterr().err


def test_with_overrides_ignores_none():
    cfg = Config().with_overrides(eta=0.4, seed=None)
    assert cfg.eta == 0.4
    assert cfg.seed == 1729


def test_tolerances_from_config():
    tol = Config({"eps_eval": "1e-8", "mesh_res": 64.0}).tolerances()
    assert isinstance(tol, Tolerances)
    assert tol.eps_eval == 1e-8
    assert tol.mesh_res == 64 and isinstance(tol.mesh_res, int)


def test_mesh_vertices_defaults():
    assert DEFAULT_TOLERANCES.mesh_vertices(2) == 512
    assert DEFAULT_TOLERANCES.mesh_vertices(3) == 10_000
    assert Tolerances(mesh_res=100).mesh_vertices(3) == 100


def test_threads_env(monkeypatch):
    monkeypatch.setenv("REGVEC_THREADS", "3")
    assert default_threads() == 3
    assert Config().threads == 3
    monkeypatch.setenv("REGVEC_THREADS", "lots")
    assert default_threads() >= 1
