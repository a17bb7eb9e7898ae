"""Reporter modules for closed-r3bp output files."""

from closed_r3bp.reporters.base import BaseReporter
from closed_r3bp.reporters.csv_reporter import (
    BoundaryCSVReporter,
    CurvesCSVReporter,
    GridCSVReporter,
    TimeSeriesCSVReporter,
)
from closed_r3bp.reporters.series_reporter import SeriesTextReporter

REPORTERS: dict[str, type[BaseReporter]] = {
    "series": SeriesTextReporter,
    "timeseries": TimeSeriesCSVReporter,
    "grid": GridCSVReporter,
    "boundary": BoundaryCSVReporter,
    "curves": CurvesCSVReporter,
}


def get_reporter(format_name: str) -> BaseReporter:
    """Get reporter instance by format name.

    Raises:
        KeyError: Unknown format name.
    """
    try:
        cls = REPORTERS[format_name]
    except KeyError:
        raise KeyError(
            f"unknown reporter {format_name!r}; choose from {', '.join(sorted(REPORTERS))}"
        ) from None
    return cls()


__all__ = [
    "REPORTERS",
    "BaseReporter",
    "BoundaryCSVReporter",
    "CurvesCSVReporter",
    "GridCSVReporter",
    "SeriesTextReporter",
    "TimeSeriesCSVReporter",
    "get_reporter",
]
