"""Text reporter for Poisson series."""

from __future__ import annotations

from closed_r3bp.reporters.base import BaseReporter
from closed_r3bp.series import PoissonSeries, dumps


class SeriesTextReporter(BaseReporter):
    """One monomial per line, in the format read back by :func:`closed_r3bp.series.loads`."""

    def render(self, data: PoissonSeries) -> str:
        return dumps(data)
