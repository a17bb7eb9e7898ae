"""JSON Schema validation for normalization manifests."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from jsonschema import validate


def get_schema() -> dict[str, Any]:
    """Load the normalization manifest JSON schema."""
    schema_path = Path(__file__).parent.parent / "schema" / "manifest-schema.json"
    with open(schema_path, encoding="utf-8") as f:
        result: dict[str, Any] = json.load(f)
        return result


def validate_manifest(data: dict[str, Any]) -> None:
    """Validate a manifest produced by :func:`closed_r3bp.normalizer.result_manifest`.

    Raises:
        jsonschema.ValidationError: If validation fails.
    """
    validate(instance=data, schema=get_schema())
