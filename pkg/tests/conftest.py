"""Shared test fixtures for the closed-r3bp test suite."""

from __future__ import annotations

import pytest

from closed_r3bp.config import GM0, JUPITER_A, JUPITER_E, JUPITER_PERIOD, SUN_JUPITER_MU
from closed_r3bp.hamiltonian import build_prepared, system_params
from closed_r3bp.normalizer import normalize
from closed_r3bp.propagator import DelaunayState


def sun_jupiter(**overrides):
    """Sun-Jupiter system parameters with keyword overrides."""
    inputs = {
        "mu": SUN_JUPITER_MU,
        "gm0": GM0,
        "a1": JUPITER_A,
        "e1": JUPITER_E,
        "period1": JUPITER_PERIOD,
        "a_star": 20.0,
        "e_star": 0.1,
        "k_mu": 2,
        "k_mp": 2,
    }
    inputs.update(overrides)
    return system_params(**inputs)


@pytest.fixture(scope="session")
def make_params():
    """Factory for Sun-Jupiter parameters with keyword overrides."""
    return sun_jupiter


@pytest.fixture(scope="session")
def toy_params():
    """Spatial elliptic toy model: k_mu = k_mp = nu = 2, nu1 = 1."""
    return sun_jupiter(nu=2, nu1=1)


@pytest.fixture(scope="session")
def toy_prepared(toy_params):
    return build_prepared(toy_params)


@pytest.fixture(scope="session")
def toy_result(toy_prepared):
    """Two normalization steps of the toy model."""
    return normalize(toy_prepared, 2)


@pytest.fixture(scope="session")
def planar_params():
    """Planar circular problem with a short schedule (nu = 3 at e* = 0.05)."""
    return sun_jupiter(a_star=30.0, e_star=0.05, e1=0.0, planar=True, circular=True)


@pytest.fixture(scope="session")
def planar_result(planar_params):
    return normalize(build_prepared(planar_params))


@pytest.fixture
def delaunay_state(toy_params):
    """A generic spatial Delaunay state near the toy reference orbit."""
    L = toy_params.L_star + 0.01
    G = 0.97 * L
    return DelaunayState(l=0.7, g=0.4, h=1.1, dL=0.01, G=G, H=0.9 * G, M1=0.3)


@pytest.fixture
def toy_config_file(tmp_path):
    """YAML run configuration of the toy model."""
    path = tmp_path / "toy.yml"
    path.write_text(
        "a_star: 20.0\n"
        "e_star: 0.1\n"
        "k_mu: 2\n"
        "k_mp: 2\n"
        "nu: 2\n"
        "nu1: 1\n"
        "span_periods: 0.2\n"
        "samples: 5\n",
        encoding="utf-8",
    )
    return path
