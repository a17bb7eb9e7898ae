"""CSV reporters for time series, grid maps and curves."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from pathlib import Path

from closed_r3bp.models import BoundaryPoint, CurvePoint, ElementState, GridMap
from closed_r3bp.propagator import element_columns
from closed_r3bp.reporters.base import BaseReporter, format_float

TIME_SERIES_COLUMNS = ("t", "a", "e", "i", "f", "g", "h")


def _optional(value: float | None) -> str:
    return "" if value is None else format_float(value)


class TimeSeriesCSVReporter(BaseReporter):
    """Element time series with columns ``t,a,e,i,f,g,h``; angles in radians, f true."""

    def render(self, data: Sequence[ElementState]) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(TIME_SERIES_COLUMNS)
        if data:
            columns = element_columns(data)
            for row in zip(*(columns[name] for name in TIME_SERIES_COLUMNS)):
                writer.writerow([format_float(float(v)) for v in row])
        return output.getvalue()


class GridCSVReporter(BaseReporter):
    """Grid map as a header row of a-values and one row per e-value.

    :meth:`write` also writes the companion status CSV next to the values file, with the
    same layout and the cell status in place of the value.
    """

    def _table(self, grid: GridMap, field: str) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["e\\a"] + [format_float(a) for a in grid.a_values])
        for e, row in zip(grid.e_values, grid.cells):
            if field == "status":
                cells = [cell.status.value for cell in row]
            else:
                cells = [format_float(cell.value) for cell in row]
            writer.writerow([format_float(e), *cells])
        return output.getvalue()

    def render(self, data: GridMap) -> str:
        return self._table(data, "value")

    def render_status(self, data: GridMap) -> str:
        return self._table(data, "status")

    @staticmethod
    def status_path(path: str | Path) -> Path:
        target = Path(path)
        return target.with_name(f"{target.stem}_status{target.suffix}")

    def write(self, data: GridMap, path: str | Path) -> Path:
        target = super().write(data, path)
        self.status_path(target).write_text(self.render_status(data), encoding="utf-8")
        return target


class BoundaryCSVReporter(BaseReporter):
    """Secular-boundary polyline ``a,e``; columns without a crossing have an empty e."""

    def render(self, data: Sequence[BoundaryPoint]) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["a", "e"])
        for point in data:
            writer.writerow([format_float(point.a), _optional(point.e)])
        return output.getvalue()


class CurvesCSVReporter(BaseReporter):
    """Perihelion-crossing and Hill curves ``a,e_crossing,e_hill``."""

    def render(self, data: Sequence[CurvePoint]) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["a", "e_crossing", "e_hill"])
        for point in data:
            writer.writerow(
                [format_float(point.a), format_float(point.e_crossing), format_float(point.e_hill)]
            )
        return output.getvalue()
