"""Tests for Pydantic data models."""

import math

import pytest
from pydantic import ValidationError

from closed_r3bp.models import (
    AnomalyKind,
    CartesianState,
    CellStatus,
    ElementState,
    ExponentMode,
    FrameKind,
    GridCell,
    GridMap,
    RunConfig,
)


class TestEnums:
    def test_values(self):
        assert ExponentMode.ceiling.value == "ceiling"
        assert [k.value for k in AnomalyKind] == ["mean", "true", "eccentric"]
        assert FrameKind("mean") is FrameKind.mean
        assert {s.value for s in CellStatus} == {"ok", "resonance", "aborted", "encounter"}


class TestSystemParams:
    def test_frozen(self, toy_params):
        with pytest.raises(ValidationError):
            toy_params.nu = 3

    def test_nbk_must_match(self, toy_params):
        data = toy_params.model_dump()
        data["nbk"] = 5
        with pytest.raises(ValidationError, match="nbk"):
            type(toy_params).model_validate(data)

    def test_circular_needs_zero_e1(self, planar_params):
        data = planar_params.model_dump()
        data["e1"] = 0.05
        with pytest.raises(ValidationError, match="circular"):
            type(planar_params).model_validate(data)

    def test_derived(self, toy_params):
        assert toy_params.eta1 == pytest.approx(math.sqrt(1 - toy_params.e1**2))
        assert toy_params.has_secondary_eccentricity
        assert toy_params.period1 == pytest.approx(2 * math.pi / toy_params.n1)
        assert toy_params.hill_radius == pytest.approx(0.355, abs=0.001)

    def test_json_round_trip(self, toy_params):
        again = type(toy_params).model_validate_json(toy_params.model_dump_json())
        assert again == toy_params


class TestElementState:
    def test_angles_reduced(self):
        z = ElementState(a=20.0, e=0.1, anomaly=-0.5, g=7.0, h=2 * math.pi, M1=13.0)
        assert z.anomaly == pytest.approx(2 * math.pi - 0.5)
        assert z.g == pytest.approx(7.0 - 2 * math.pi)
        assert z.h == pytest.approx(0.0)
        assert z.M1 == pytest.approx(13.0 - 4 * math.pi)

    def test_defaults(self):
        z = ElementState(a=20.0, e=0.0)
        assert z.anomaly_kind is AnomalyKind.true
        assert z.frame is FrameKind.osculating
        assert z.i == 0.0

    @pytest.mark.parametrize(
        "fields", [{"a": 0.0, "e": 0.1}, {"a": 20.0, "e": 1.0}, {"a": 20.0, "e": 0.1, "i": 4.0}]
    )
    def test_invalid(self, fields):
        with pytest.raises(ValidationError):
            ElementState(**fields)


def test_cartesian_state_needs_distance():
    with pytest.raises(ValidationError, match="primary"):
        CartesianState(R=(0.0, 0.0, 0.0), P=(1.0, 0.0, 0.0))


class TestGridMap:
    def test_shape(self):
        with pytest.raises(ValidationError, match="shape"):
            GridMap(a_values=[1.0, 2.0], e_values=[0.1], cells=[[GridCell()]])

    def test_increasing_axes(self):
        with pytest.raises(ValidationError, match="increasing"):
            GridMap(a_values=[2.0, 1.0], e_values=[0.1], cells=[[GridCell(), GridCell()]])

    def test_default_cell(self):
        cell = GridCell()
        assert math.isnan(cell.value)
        assert cell.status is CellStatus.ok
        assert cell.j_opt == 0


class TestRunConfig:
    def test_forbids_unknown_keys(self):
        with pytest.raises(ValidationError):
            RunConfig(a_sta=30.0)

    def test_no_seed_field(self):
        # every computation is deterministic
        assert "seed" not in RunConfig.model_fields
        with pytest.raises(ValidationError):
            RunConfig(seed=1)

    def test_circular_system_inputs(self):
        inputs = RunConfig(circular=True).system_inputs()
        assert inputs["e1"] == 0.0
        assert inputs["circular"] is True
        assert inputs["mode"] is ExponentMode.ceiling

    def test_map_defaults(self):
        cfg = RunConfig()
        assert (cfg.e_min, cfg.e_max, cfg.e_count) == (0.05, 0.8, 10)
        assert cfg.workers == 0
        assert cfg.fli_periods == 50.0
