"""Base reporter abstract class."""

from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from closed_r3bp.config import OUTPUT_DIGITS


def format_float(value: float) -> str:
    """Round-trip exact text form of a float; non-finite values as ``nan``/``inf``."""
    return f"{value:.{OUTPUT_DIGITS}g}"


class BaseReporter(ABC):
    """Abstract base class for all reporters."""

    @abstractmethod
    def render(self, data: Any) -> str:
        """Render a computed artifact to its text format."""
        ...

    def write(self, data: Any, path: str | Path) -> Path:
        """Write the rendered artifact to a file and return its path."""
        target = Path(path)
        target.write_text(self.render(data), encoding="utf-8")
        return target
