"""Pydantic v2 models for closed-r3bp."""

from __future__ import annotations

import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from closed_r3bp.config import (
    BOUNDARY_THRESHOLD,
    DIVISOR_THRESHOLD_FACTOR,
    GM0,
    INTEGRATOR_ATOL,
    INTEGRATOR_RTOL,
    JUPITER_A,
    JUPITER_E,
    JUPITER_PERIOD,
    MAP_STEP_CAP,
    SUN_JUPITER_MU,
)


class ExponentMode(str, Enum):
    """Rounding rule turning log10(mu)/log10(e*) into the book-keeping exponent."""

    ceiling = "ceiling"
    nearest = "nearest"


class AnomalyKind(str, Enum):
    """Which anomaly an element state carries."""

    mean = "mean"
    true = "true"
    eccentric = "eccentric"


class FrameKind(str, Enum):
    """Whether elements are osculating or mean (normalized) elements."""

    osculating = "osculating"
    mean = "mean"


class CellStatus(str, Enum):
    """Outcome of one grid cell."""

    ok = "ok"
    resonance = "resonance"
    aborted = "aborted"
    encounter = "encounter"


class SystemParams(BaseModel):
    """Physical and truncation parameters of one normalization.

    Build instances with :func:`closed_r3bp.hamiltonian.system_params`, which derives
    ``L_star``, ``n_star``, the book-keeping exponents and ``nbk`` from the inputs and
    checks the exterior-regime domain.
    """

    model_config = ConfigDict(frozen=True)

    mu: float = Field(ge=0.0, le=0.5)
    gm0: float = Field(default=GM0, gt=0.0)
    a1: float = Field(default=JUPITER_A, gt=0.0)
    e1: float = Field(default=JUPITER_E, ge=0.0, lt=1.0)
    n1: float = Field(gt=0.0)
    a_star: float = Field(gt=0.0)
    e_star: float = Field(gt=0.0, lt=1.0)
    L_star: float = Field(gt=0.0)
    n_star: float = Field(gt=0.0)
    nu: int = Field(ge=1)
    nu1: int = Field(ge=1)
    k_mu: int = Field(ge=1)
    k_mp: int = Field(ge=2)
    nbk: int = Field(ge=1)
    planar: bool = False
    circular: bool = False
    exponent_mode: ExponentMode = ExponentMode.ceiling

    @model_validator(mode="after")
    def _check_nbk(self) -> SystemParams:
        if self.nbk != self.nu * self.k_mu:
            raise ValueError(f"nbk must equal nu * k_mu ({self.nu} * {self.k_mu})")
        if self.circular and self.e1 != 0.0:
            raise ValueError("circular systems must have e1 = 0")
        return self

    @property
    def eta1(self) -> float:
        return math.sqrt(1.0 - self.e1**2)

    @property
    def has_secondary_eccentricity(self) -> bool:
        return self.e1 > 0.0

    @property
    def period1(self) -> float:
        return 2.0 * math.pi / self.n1

    @property
    def hill_radius(self) -> float:
        return self.a1 * (self.mu / 3.0) ** (1.0 / 3.0)


class ElementState(BaseModel):
    """Keplerian elements of the particle about the primary."""

    a: float = Field(gt=0.0)
    e: float = Field(ge=0.0, lt=1.0)
    i: float = Field(default=0.0, ge=0.0, lt=math.pi)
    anomaly: float = 0.0
    anomaly_kind: AnomalyKind = AnomalyKind.true
    g: float = 0.0
    h: float = 0.0
    frame: FrameKind = FrameKind.osculating
    t: float = 0.0
    M1: float = 0.0

    @model_validator(mode="after")
    def _reduce_angles(self) -> ElementState:
        two_pi = 2.0 * math.pi
        for name in ("anomaly", "g", "h", "M1"):
            object.__setattr__(self, name, math.fmod(getattr(self, name), two_pi) % two_pi)
        return self


class CartesianState(BaseModel):
    """Heliocentric position and conjugate momentum of the particle."""

    R: tuple[float, float, float]
    P: tuple[float, float, float]
    t: float = 0.0
    M1: float = 0.0

    @model_validator(mode="after")
    def _check_origin(self) -> CartesianState:
        if math.hypot(*self.R) <= 0.0:
            raise ValueError("position must be away from the primary")
        return self


class GridCell(BaseModel):
    """One (a*, e*) cell of a map."""

    value: float = math.nan
    j_opt: int = 0
    status: CellStatus = CellStatus.ok
    message: str = ""


class GridMap(BaseModel):
    """Values sampled on an (a*, e*) grid; ``cells[row][col]`` is (e_values[row], a_values[col])."""

    a_values: list[float]
    e_values: list[float]
    cells: list[list[GridCell]]
    quantity: str = "log10_remainder"

    @model_validator(mode="after")
    def _check_shape(self) -> GridMap:
        for name, axis in (("a_values", self.a_values), ("e_values", self.e_values)):
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if len(self.cells) != len(self.e_values) or any(
            len(row) != len(self.a_values) for row in self.cells
        ):
            raise ValueError("cells must have shape (len(e_values), len(a_values))")
        return self


class BoundaryPoint(BaseModel):
    """Lowest threshold crossing of one a* column; ``e`` is None when the column never crosses."""

    a: float
    e: float | None = None


class CurvePoint(BaseModel):
    """Perihelion-crossing and Hill-limit eccentricities at one semi-major axis."""

    a: float
    e_crossing: float
    e_hill: float


class DivisorRecord(BaseModel):
    """A divisor s1 n* + s4 n1 met while solving a homological equation."""

    step: int
    s1: int
    s4: int
    value: float


class StepDiagnostics(BaseModel):
    """Per-step bookkeeping of a normalization run."""

    label: str
    target_order: int
    chi_terms: int
    z_terms: int
    remainder_terms: int
    remainder_min_order: int | None = None
    remainder_bound: float = 0.0
    seconds: float = 0.0


class RunConfig(BaseModel):
    """Fully resolved configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    # system
    mu: float = SUN_JUPITER_MU
    gm0: float = GM0
    a1: float = JUPITER_A
    e1: float = JUPITER_E
    period1: float = JUPITER_PERIOD
    a_star: float = 50.0
    e_star: float = 0.1
    inclination_deg: float = Field(default=10.0, ge=0.0, lt=180.0)
    k_mu: int = Field(default=2, ge=1)
    k_mp: int = 2
    exponent_mode: ExponentMode = ExponentMode.ceiling
    nu: int | None = Field(default=None, ge=1)
    nu1: int | None = Field(default=None, ge=1)
    planar: bool = False
    circular: bool = False

    # normalization
    j_max: int | None = Field(default=None, ge=0)
    divisor_threshold: float = Field(default=DIVISOR_THRESHOLD_FACTOR, gt=0.0)
    delta_l_bound: float | None = Field(default=None, ge=0.0)

    # propagation
    span_periods: float = Field(default=5.0, ge=0.0)
    samples: int = Field(default=200, ge=1)
    rtol: float = Field(default=INTEGRATOR_RTOL, gt=0.0)
    atol: float = Field(default=INTEGRATOR_ATOL, gt=0.0)
    anomaly_deg: float = 0.0
    g_deg: float = 0.0
    h_deg: float = 0.0

    # grids
    a_min: float = 6.0
    a_max: float = 20.0
    a_count: int = Field(default=20, ge=1)
    e_min: float = 0.05
    e_max: float = 0.8
    e_count: int = Field(default=10, ge=1)
    step_cap: int = Field(default=MAP_STEP_CAP, ge=1)
    threshold: float = Field(default=BOUNDARY_THRESHOLD, gt=0.0)
    fli_periods: float = Field(default=50.0, gt=0.0)

    # execution
    workers: int = Field(default=0, ge=0)
    cell_timeout: float | None = Field(default=None, gt=0.0)

    def system_inputs(self) -> dict[str, Any]:
        """Keyword arguments for :func:`closed_r3bp.hamiltonian.system_params`."""
        return {
            "mu": self.mu,
            "gm0": self.gm0,
            "a1": self.a1,
            "e1": 0.0 if self.circular else self.e1,
            "period1": self.period1,
            "a_star": self.a_star,
            "e_star": self.e_star,
            "k_mu": self.k_mu,
            "k_mp": self.k_mp,
            "mode": self.exponent_mode,
            "nu": self.nu,
            "nu1": self.nu1,
            "planar": self.planar,
            "circular": self.circular,
        }
