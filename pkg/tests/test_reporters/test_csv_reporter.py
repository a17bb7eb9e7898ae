"""Tests for CSV reporters."""

import csv
import io
import math

import pytest

from closed_r3bp.models import (
    AnomalyKind,
    BoundaryPoint,
    CellStatus,
    CurvePoint,
    GridCell,
    GridMap,
)
from closed_r3bp.propagator import initial_state, mean_to_true
from closed_r3bp.reporters.csv_reporter import (
    BoundaryCSVReporter,
    CurvesCSVReporter,
    GridCSVReporter,
    TimeSeriesCSVReporter,
)


def parse(output):
    return list(csv.reader(io.StringIO(output)))


@pytest.fixture
def small_grid():
    cells = [
        [GridCell(value=-3.5, j_opt=2), GridCell(status=CellStatus.resonance)],
        [GridCell(value=-1.0, j_opt=1), GridCell(status=CellStatus.encounter, message="close")],
    ]
    return GridMap(a_values=[10.0, 20.0], e_values=[0.1, 0.2], cells=cells)


class TestTimeSeriesCSVReporter:
    def test_headers(self):
        rows = parse(TimeSeriesCSVReporter().render([initial_state(20.0, 0.1)]))
        assert rows[0] == ["t", "a", "e", "i", "f", "g", "h"]
        assert len(rows) == 2

    def test_anomaly_written_as_true(self):
        z = initial_state(20.0, 0.3, anomaly=1.0).model_copy(
            update={"anomaly_kind": AnomalyKind.mean, "t": 2.5}
        )
        [row] = parse(TimeSeriesCSVReporter().render([z]))[1:]
        assert float(row[0]) == 2.5
        assert float(row[4]) == pytest.approx(mean_to_true(1.0, 0.3))

    def test_empty(self):
        assert parse(TimeSeriesCSVReporter().render([])) == [["t", "a", "e", "i", "f", "g", "h"]]


class TestGridCSVReporter:
    def test_values(self, small_grid):
        rows = parse(GridCSVReporter().render(small_grid))
        assert rows[0] == ["e\\a", "10", "20"]
        assert rows[1][0] == "0.10000000000000001"
        assert float(rows[1][1]) == -3.5
        assert rows[1][2] == "nan"

    def test_status(self, small_grid):
        rows = parse(GridCSVReporter().render_status(small_grid))
        assert rows[1][1:] == ["ok", "resonance"]
        assert rows[2][1:] == ["ok", "encounter"]

    def test_write_adds_status_file(self, tmp_path, small_grid):
        target = GridCSVReporter().write(small_grid, tmp_path / "remainder_map.csv")
        status = tmp_path / "remainder_map_status.csv"
        assert target.is_file()
        assert status == GridCSVReporter.status_path(target)
        assert parse(status.read_text(encoding="utf-8"))[2][2] == "encounter"


def test_boundary_csv():
    points = [BoundaryPoint(a=10.0, e=0.25), BoundaryPoint(a=20.0)]
    rows = parse(BoundaryCSVReporter().render(points))
    assert rows == [["a", "e"], ["10", "0.25"], ["20", ""]]


def test_curves_csv():
    points = [CurvePoint(a=8.0, e_crossing=0.35, e_hill=math.nan)]
    rows = parse(CurvesCSVReporter().render(points))
    assert rows[0] == ["a", "e_crossing", "e_hill"]
    assert rows[1][:2] == ["8", "0.34999999999999998"]
    assert rows[1][2] == "nan"
