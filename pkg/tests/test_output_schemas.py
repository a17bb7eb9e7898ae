"""Tests for validating normalization manifests against their JSON schema.

Manifests are written next to every normalization on disk and in the cache; the
schema guards both against drift in :func:`result_manifest`.
"""

import copy
import json

import pytest
from jsonschema import Draft7Validator, ValidationError

from closed_r3bp.hamiltonian import build_prepared
from closed_r3bp.normalizer import normalize, result_manifest
from closed_r3bp.utils.validator import get_schema, validate_manifest


@pytest.fixture(scope="module")
def manifest(toy_result):
    return result_manifest(toy_result)


def test_schema_is_valid_draft7():
    Draft7Validator.check_schema(get_schema())


def test_manifest_validates(manifest):
    validate_manifest(manifest)


def test_manifest_is_json(manifest):
    assert json.loads(json.dumps(manifest)) == manifest


def test_aborted_manifest_validates(toy_prepared):
    result = normalize(toy_prepared, 2, threshold_factor=1e6)
    data = result_manifest(result)
    validate_manifest(data)
    assert data["resonance"] is True
    assert data["divisors"][0]["step"] == 1


def test_unit_exponent_labels(make_params):
    params = make_params(
        a_star=30.0, e_star=0.05, e1=0.0, planar=True, circular=True, nu=1, k_mu=3
    )
    data = result_manifest(normalize(build_prepared(params)))
    validate_manifest(data)
    assert "II" in data["labels"]


@pytest.mark.parametrize(
    "path,value",
    [
        (("labels",), ["1", "three"]),
        (("params", "exponent_mode"), "floor"),
        (("params", "k_mp"), 1),
        (("files",), ["z0.json"]),
        (("aborted",), "no"),
    ],
)
def test_rejects_bad_field(manifest, path, value):
    data = copy.deepcopy(manifest)
    target = data
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    with pytest.raises(ValidationError):
        validate_manifest(data)


def test_rejects_missing_field(manifest):
    data = copy.deepcopy(manifest)
    del data["steps"]
    with pytest.raises(ValidationError):
        validate_manifest(data)
