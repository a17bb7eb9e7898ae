"""On-disk cache of normalization results.

A normalization of high order takes minutes; reruns with identical parameters load the
stored series instead. Entries are keyed by a SHA-256 of the canonical parameter JSON,
the step count and the divisor threshold.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from pathlib import Path

from jsonschema import ValidationError

from closed_r3bp.exceptions import ConfigurationError, EvaluationError
from closed_r3bp.models import SystemParams
from closed_r3bp.normalizer import (
    NormalizationResult,
    result_from_files,
    result_manifest,
    result_to_files,
)
from closed_r3bp.utils.validator import validate_manifest

logger = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = ".closed-r3bp-cache"
MANIFEST_NAME = "manifest.json"


class NormalizationCache:
    """Directory of stored normalization results, one sub-directory per key."""

    def __init__(self, cache_dir: str | Path = DEFAULT_CACHE_DIR) -> None:
        self.cache_dir = Path(cache_dir)

    @staticmethod
    def key(params: SystemParams, j_max: int, threshold_factor: float) -> str:
        payload = json.dumps(
            {
                "params": params.model_dump(mode="json"),
                "j_max": j_max,
                "threshold_factor": threshold_factor,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _entry(self, key: str) -> Path:
        return self.cache_dir / key[:16]

    def get(
        self, params: SystemParams, j_max: int, threshold_factor: float
    ) -> NormalizationResult | None:
        """Stored result for these inputs, or None on a miss or an unreadable entry."""
        entry = self._entry(self.key(params, j_max, threshold_factor))
        manifest_path = entry / MANIFEST_NAME
        if not manifest_path.is_file():
            return None
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            validate_manifest(manifest)
            files = {name: (entry / name).read_text(encoding="utf-8") for name in manifest["files"]}
            result = result_from_files(manifest, files)
        except (
            json.JSONDecodeError,
            OSError,
            KeyError,
            TypeError,
            ValidationError,
            ConfigurationError,
            EvaluationError,
        ) as e:
            logger.warning("Ignoring unreadable cache entry %s: %s", entry, e)
            return None
        logger.debug("Cache hit %s (%d steps)", entry.name, result.steps_completed)
        return result

    def put(self, result: NormalizationResult, j_max: int, threshold_factor: float) -> Path:
        """Store a result; aborted runs are stored too, their manifest says so."""
        entry = self._entry(self.key(result.params, j_max, threshold_factor))
        entry.mkdir(parents=True, exist_ok=True)
        for name, text in result_to_files(result).items():
            (entry / name).write_text(text, encoding="utf-8")
        (entry / MANIFEST_NAME).write_text(
            json.dumps(result_manifest(result), indent=2), encoding="utf-8"
        )
        logger.debug("Cached normalization in %s", entry)
        return entry

    def clear(self) -> None:
        """Remove every stored result."""
        if self.cache_dir.is_dir():
            shutil.rmtree(self.cache_dir)
