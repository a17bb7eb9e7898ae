"""Tests for run configuration discovery, loading and merging."""

from __future__ import annotations

from pathlib import Path

import pytest

from closed_r3bp.config_file import (
    find_config_file,
    load_config,
    merge_config_with_cli,
    resolve_run_config,
)
from closed_r3bp.exceptions import ConfigurationError
from closed_r3bp.models import ExponentMode

# ── discovery ────────────────────────────────────────────────────


class TestFindConfigFile:
    def test_in_start_dir(self, tmp_path: Path):
        path = tmp_path / ".closed-r3bp.yml"
        path.write_text("a_star: 30\n")
        assert find_config_file(tmp_path) == path.resolve()

    def test_in_parent(self, tmp_path: Path):
        path = tmp_path / ".closed-r3bp.yaml"
        path.write_text("a_star: 30\n")
        child = tmp_path / "runs" / "deep"
        child.mkdir(parents=True)
        assert find_config_file(child) == path.resolve()

    def test_yml_wins_over_yaml(self, tmp_path: Path):
        (tmp_path / ".closed-r3bp.yml").write_text("a_star: 30\n")
        (tmp_path / ".closed-r3bp.yaml").write_text("a_star: 40\n")
        assert find_config_file(tmp_path).name == ".closed-r3bp.yml"


# ── loading ──────────────────────────────────────────────────────


class TestLoadConfig:
    def test_mapping(self, toy_config_file):
        config = load_config(toy_config_file)
        assert config["a_star"] == 20.0
        assert config["k_mp"] == 2

    def test_missing_file(self, tmp_path: Path):
        assert load_config(tmp_path / "nope.yml") == {}

    def test_empty_file(self, tmp_path: Path):
        path = tmp_path / "empty.yml"
        path.write_text("")
        assert load_config(path) == {}

    def test_invalid_yaml(self, tmp_path: Path, caplog):
        path = tmp_path / "bad.yml"
        path.write_text("a_star: [30\n")
        assert load_config(path) == {}
        assert "Failed to parse" in caplog.text

    def test_not_a_mapping(self, tmp_path: Path, caplog):
        path = tmp_path / "list.yml"
        path.write_text("- 1\n- 2\n")
        assert load_config(path) == {}
        assert "mapping" in caplog.text


def test_cli_values_win():
    merged = merge_config_with_cli({"a_star": 20.0, "k_mu": 2}, {"a_star": 30.0, "k_mu": None})
    assert merged == {"a_star": 30.0, "k_mu": 2}


# ── resolution ───────────────────────────────────────────────────


class TestResolveRunConfig:
    def test_defaults(self, tmp_path: Path):
        cfg = resolve_run_config(tmp_path / "nope.yml")
        assert cfg.a_star == 50.0
        assert cfg.e_star == 0.1
        assert cfg.inclination_deg == 10.0
        assert (cfg.a_min, cfg.a_max, cfg.a_count) == (6.0, 20.0, 20)
        assert cfg.exponent_mode is ExponentMode.ceiling
        assert cfg.j_max is None

    def test_file_then_cli(self, toy_config_file):
        cfg = resolve_run_config(toy_config_file, {"e_star": 0.2, "exponent_mode": "nearest"})
        assert cfg.a_star == 20.0
        assert cfg.e_star == 0.2
        assert cfg.nu == 2
        assert cfg.exponent_mode is ExponentMode.nearest

    def test_unknown_key(self, tmp_path: Path):
        with pytest.raises(ConfigurationError, match="a_sta"):
            resolve_run_config(tmp_path / "nope.yml", {"a_sta": 30.0})

    @pytest.mark.parametrize("key,value", [("samples", 0), ("workers", -1), ("j_max", -1)])
    def test_invalid_value(self, tmp_path: Path, key, value):
        with pytest.raises(ConfigurationError, match=key):
            resolve_run_config(tmp_path / "nope.yml", {key: value})

    def test_system_inputs(self, toy_config_file):
        inputs = resolve_run_config(toy_config_file, {"circular": True}).system_inputs()
        assert inputs["e1"] == 0.0
        assert inputs["nu1"] == 1
        assert inputs["mode"] is ExponentMode.ceiling
