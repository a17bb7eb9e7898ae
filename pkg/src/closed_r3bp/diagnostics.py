"""Remainder bounds, optimal orders, (a*, e*) maps, FLI and comparison curves."""

from __future__ import annotations

import logging
import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from closed_r3bp.config import (
    BOUNDARY_THRESHOLD,
    ENCOUNTER_HILL_RADII,
    INTEGRATOR_ATOL,
    INTEGRATOR_METHOD,
    INTEGRATOR_RTOL,
    OCTUPOLE_HARMONICS,
)
from closed_r3bp.exceptions import DomainError, EncounterError, EvaluationError
from closed_r3bp.hamiltonian import build_prepared, system_params
from closed_r3bp.models import (
    BoundaryPoint,
    CartesianState,
    CellStatus,
    CurvePoint,
    GridCell,
    GridMap,
    RunConfig,
    SystemParams,
)
from closed_r3bp.normalizer import NormalizationResult, max_steps, normalize
from closed_r3bp.propagator import (
    acceleration,
    acceleration_jacobian,
    elements_to_cartesian,
    encounter_event,
    encounter_radius,
    initial_state,
    potential,
    secondary_position,
)
from closed_r3bp.series import SYMBOLS, PoissonSeries

logger = logging.getLogger(__name__)

CellCallback = Callable[[int, int, GridCell], None]

# ----------------------------------------------------------------------
# Remainder bound and optimal order
# ----------------------------------------------------------------------


def symbol_bounds(
    params: SystemParams, delta_l: float | None = None
) -> dict[str, tuple[float, float]]:
    """Admissible ``(max for positive powers, min for negative powers)`` of every symbol.

    ``dL`` defaults to ``mu L*``, the size of the action offset away from resonances.
    """
    e = params.e_star
    eta = math.sqrt(1.0 - e**2)
    dl = params.mu * params.L_star if delta_l is None else delta_l
    e1 = params.e1
    return {
        "dL": (dl, dl),
        "e": (e, e),
        "eta": (eta, eta),
        "ic": (1.0, 1.0),
        "is": (1.0, 1.0),
        "phi1": (e1, e1),
        "r1": (params.a1 * (1.0 + e1), params.a1 * (1.0 - e1)),
        "J1": (0.0, 0.0),
    }


def remainder_bound(
    series: PoissonSeries,
    params: SystemParams,
    min_order: int | None = None,
    *,
    delta_l: float | None = None,
) -> float:
    """Sum of ``|coefficient|`` times the bounding symbol magnitudes.

    With ``|cos|, |sin| <= 1`` this bounds the sup norm of ``series`` (sigma := 1) over
    the admissible domain around ``(a*, e*)``.

    Args:
        series: Remainder (or any series) to bound.
        params: Reference values ``e*``, ``a1``, ``e1``, ``L*``, ``mu``.
        min_order: Only terms at or above this sigma order are counted.
        delta_l: Bound of ``|dL|``; defaults to ``mu L*``.
    """
    items = [
        (coeff, exps)
        for (sigma, _, _, exps), coeff in series.items()
        if min_order is None or sigma >= min_order
    ]
    if not items:
        return 0.0
    bounds = symbol_bounds(params, delta_l)
    upper = np.array([bounds[name][0] for name in SYMBOLS])
    lower = np.array([bounds[name][1] for name in SYMBOLS])
    coeffs = np.array([abs(c) for c, _ in items])
    exps = np.array([e for _, e in items], dtype=np.int64)
    with np.errstate(divide="ignore"):
        factors = np.where(
            exps >= 0,
            upper[np.newaxis, :] ** np.maximum(exps, 0),
            lower[np.newaxis, :] ** np.minimum(exps, 0).astype(float),
        )
    return float(np.sum(coeffs * np.prod(factors, axis=1)))


def remainder_bounds(
    result: NormalizationResult, *, delta_l: float | None = None
) -> list[float]:
    """Remainder bound after ``j = 0, 1, ...`` numbered steps."""
    return [
        remainder_bound(result.remainder_after(j), result.params, delta_l=delta_l)
        for j in range(result.steps_completed + 1)
    ]


def optimal_order(
    bounds: Sequence[float] | NormalizationResult, *, delta_l: float | None = None
) -> int:
    """Step count with the smallest remainder bound; ties go to the smaller count.

    Non-finite bounds are ignored; an all-non-finite sequence gives 0.
    """
    if isinstance(bounds, NormalizationResult):
        bounds = remainder_bounds(bounds, delta_l=delta_l)
    best = 0
    best_value = math.inf
    for j, value in enumerate(bounds):
        if math.isfinite(value) and value < best_value:
            best, best_value = j, value
    return best


# ----------------------------------------------------------------------
# Grid scheduling
# ----------------------------------------------------------------------


def _check_axis(name: str, values: Sequence[float]) -> list[float]:
    axis = [float(v) for v in values]
    if not axis:
        raise DomainError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(axis, axis[1:])):
        raise DomainError(f"{name} must be strictly increasing")
    return axis


def run_grid(
    a_values: Sequence[float],
    e_values: Sequence[float],
    cell: Callable[[float, float], GridCell],
    *,
    workers: int | None = None,
    quantity: str,
    on_cell: CellCallback | None = None,
) -> GridMap:
    """Evaluate ``cell(a, e)`` on every grid node in a thread pool.

    Cells are independent; a cell raising an unexpected exception is logged and recorded
    as aborted without stopping the others. ``on_cell(row, col, cell)`` is called from
    the calling thread as cells finish.
    """
    a_axis = _check_axis("a_values", a_values)
    e_axis = _check_axis("e_values", e_values)
    cells = [[GridCell() for _ in a_axis] for _ in e_axis]
    jobs = [(row, col) for row in range(len(e_axis)) for col in range(len(a_axis))]
    max_workers = workers or os.cpu_count() or 1

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_cell = {
            executor.submit(cell, a_axis[col], e_axis[row]): (row, col) for row, col in jobs
        }
        for future in as_completed(future_to_cell):
            row, col = future_to_cell[future]
            try:
                result = future.result()
            except Exception as exc:
                logger.exception("cell a=%g e=%g failed", a_axis[col], e_axis[row])
                result = GridCell(status=CellStatus.aborted, message=str(exc))
            cells[row][col] = result
            if on_cell is not None:
                on_cell(row, col, result)
    return GridMap(a_values=a_axis, e_values=e_axis, cells=cells, quantity=quantity)


# ----------------------------------------------------------------------
# Remainder map and secular boundary
# ----------------------------------------------------------------------


def map_params(config: RunConfig, a_star: float, e_star: float) -> SystemParams:
    """Planar circular system for one map cell; book-keeping exponents recomputed."""
    inputs = config.system_inputs()
    inputs.update(
        a_star=a_star, e_star=e_star, e1=0.0, planar=True, circular=True, nu=None, nu1=None
    )
    return system_params(**inputs)


def remainder_cell(config: RunConfig, a_star: float, e_star: float) -> GridCell:
    """``log10`` of the remainder bound after ``min(nu (k_mu - 1), step_cap)`` steps.

    A run stopped by a small divisor or by the time budget records the bound of its last
    completed step with status ``resonance`` or ``aborted``.
    """
    try:
        params = map_params(config, a_star, e_star)
    except DomainError as exc:
        return GridCell(status=CellStatus.aborted, message=str(exc))
    steps = min(max_steps(params), config.step_cap)
    result = normalize(
        build_prepared(params),
        steps,
        threshold_factor=config.divisor_threshold,
        delta_l=config.delta_l_bound,
        time_budget=config.cell_timeout,
    )
    bounds = remainder_bounds(result, delta_l=config.delta_l_bound)
    last = bounds[-1]
    value = math.log10(last) if last > 0.0 else -math.inf
    if result.resonance:
        status = CellStatus.resonance
    elif result.aborted:
        status = CellStatus.aborted
    else:
        status = CellStatus.ok
    logger.debug(
        "cell a*=%g e*=%g: nu=%d, %d/%d steps, log10 bound %.3f",
        a_star,
        e_star,
        params.nu,
        result.steps_completed,
        steps,
        value,
    )
    return GridCell(
        value=value, j_opt=optimal_order(bounds), status=status, message=result.abort_reason
    )


def remainder_map(
    a_values: Sequence[float],
    e_values: Sequence[float],
    config: RunConfig,
    *,
    on_cell: CellCallback | None = None,
) -> GridMap:
    """Remainder-bound map of the planar circular problem over an (a*, e*) grid."""
    return run_grid(
        a_values,
        e_values,
        lambda a, e: remainder_cell(config, a, e),
        workers=config.workers or None,
        quantity="log10_remainder",
        on_cell=on_cell,
    )


def secular_boundary(grid: GridMap, threshold: float = BOUNDARY_THRESHOLD) -> list[BoundaryPoint]:
    """Lowest crossing of ``threshold`` in every ``a*`` column, linearly interpolated in ``e``.

    Log-valued maps are compared against ``log10(threshold)``. ``-inf`` (a vanishing
    remainder) lies below the threshold; ``+inf`` and NaN cells count as above it. A column
    already above at its lowest ``e`` is placed there; a column that never crosses gets
    ``e = None``.
    """
    level = math.log10(threshold) if grid.quantity.startswith("log10") else threshold
    out: list[BoundaryPoint] = []
    for col, a in enumerate(grid.a_values):
        values = [row[col].value for row in grid.cells]
        crossing: float | None = None
        for k, value in enumerate(values):
            if value < level:
                continue
            if k == 0:
                crossing = grid.e_values[0]
            else:
                v0, v1 = values[k - 1], value
                e0, e1 = grid.e_values[k - 1], grid.e_values[k]
                if math.isfinite(v0) and math.isfinite(v1):
                    crossing = e0 + (level - v0) * (e1 - e0) / (v1 - v0)
                else:
                    crossing = e1
            break
        out.append(BoundaryPoint(a=a, e=crossing))
    return out



# ----------------------------------------------------------------------
# Fast Lyapunov indicator
# ----------------------------------------------------------------------


def fli_history(
    state: CartesianState,
    span: float,
    params: SystemParams,
    *,
    samples: int = 500,
    rtol: float = INTEGRATOR_RTOL,
    atol: float = INTEGRATOR_ATOL,
    hill_radii: float = ENCOUNTER_HILL_RADII,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample times and the running ``sup log10 |v|`` of a tangent vector.

    The tangent vector starts as ``(1, ..., 1) / sqrt(6)`` and follows the variational
    equations of the full model with exact second derivatives of the potential.

    Raises:
        EncounterError: The trajectory reached the encounter radius.
    """
    t0 = state.t
    v0 = np.ones(6) / math.sqrt(6.0)
    y0 = np.concatenate([np.asarray(state.R, float), np.asarray(state.P, float), v0])
    times = np.linspace(t0, t0 + span, max(samples, 2)) if span > 0.0 else np.array([t0])
    if span == 0.0:
        return times, np.zeros(1)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r1 = secondary_position(state.M1 + params.n1 * (t - t0), params)
        R = y[:3]
        jac = acceleration_jacobian(R, r1, params)
        return np.concatenate([y[3:6], acceleration(R, r1, params), y[9:12], jac @ y[6:9]])

    radius = encounter_radius(params, hill_radii)
    events = [encounter_event(params, state.M1, t0, radius)] if radius > 0.0 else None
    sol = solve_ivp(
        rhs,
        (t0, t0 + span),
        y0,
        method=INTEGRATOR_METHOD,
        t_eval=times,
        rtol=rtol,
        atol=atol,
        events=events,
    )
    if events is not None and sol.t_events[0].size:
        t_hit = float(sol.t_events[0][0])
        y_hit = sol.y_events[0][0]
        r1 = secondary_position(state.M1 + params.n1 * (t_hit - t0), params)
        distance = float(np.linalg.norm(y_hit[:3] - (1.0 - params.mu) * r1))
        raise EncounterError(t_hit, distance, radius)
    if not sol.success:
        raise EvaluationError(f"variational integration failed: {sol.message}")
    norms = np.linalg.norm(sol.y[6:], axis=0)
    return sol.t, np.maximum.accumulate(np.log10(norms))


def fli(
    state: CartesianState,
    span: float,
    params: SystemParams,
    *,
    samples: int = 500,
    rtol: float = INTEGRATOR_RTOL,
    atol: float = INTEGRATOR_ATOL,
) -> float:
    """Fast Lyapunov indicator ``sup_{t <= span} log10 |v(t)|``."""
    _, history = fli_history(state, span, params, samples=samples, rtol=rtol, atol=atol)
    return float(history[-1])


def fli_cell(config: RunConfig, params: SystemParams, a: float, e: float) -> GridCell:
    """FLI of the orbit starting at pericenter with ``g = h = M1 = 0``."""
    inclination = 0.0 if config.planar else math.radians(config.inclination_deg)
    state = elements_to_cartesian(initial_state(a, e, inclination=inclination), params.gm0)
    span = config.fli_periods * params.period1
    try:
        value = fli(state, span, params, rtol=config.rtol, atol=config.atol)
    except EncounterError as exc:
        return GridCell(value=math.inf, status=CellStatus.encounter, message=str(exc))
    return GridCell(value=value)


def fli_map(
    a_values: Sequence[float],
    e_values: Sequence[float],
    config: RunConfig,
    *,
    on_cell: CellCallback | None = None,
) -> GridMap:
    """FLI over an (a, e) grid of initial osculating elements."""
    params = system_params(**config.system_inputs())
    return run_grid(
        a_values,
        e_values,
        lambda a, e: fli_cell(config, params, a, e),
        workers=config.workers or None,
        quantity="fli",
        on_cell=on_cell,
    )


# ----------------------------------------------------------------------
# Comparison curves
# ----------------------------------------------------------------------


def _collinear_gradient(x: float, params: SystemParams) -> float:
    """``d/dx`` of the rotating-frame effective potential on the line of the primaries."""
    r1 = np.array([params.a1, 0.0, 0.0])
    acc = acceleration(np.array([x, 0.0, 0.0]), r1, params)
    return -params.n1**2 * x - float(acc[0])


def lagrange_l1(params: SystemParams) -> float:
    """``x`` of the collinear point between the primaries (secondary on the +x axis).

    Raises:
        DomainError: ``mu = 0`` (no secondary).
    """
    if params.mu == 0.0:
        raise DomainError("the collinear point needs a massive secondary")
    lo = -params.mu * params.a1 + 1e-9 * params.a1
    hi = (1.0 - params.mu) * params.a1 - 1e-9 * params.a1
    return float(brentq(_collinear_gradient, lo, hi, args=(params,), xtol=1e-15))


def jacobi_at_l1(params: SystemParams) -> float:
    """Jacobi constant of a particle at rest at the collinear point."""
    x = lagrange_l1(params)
    r1 = np.array([params.a1, 0.0, 0.0])
    phi = -0.5 * params.n1**2 * x**2 + potential(np.array([x, 0.0, 0.0]), r1, params)
    return -2.0 * phi


def jacobi_from_elements(
    a: float, e: float, params: SystemParams, inclination: float = 0.0
) -> float:
    """Two-body Jacobi constant ``Gm0 / a + 2 n1 sqrt(Gm0 a (1 - e^2)) cos i``."""
    return params.gm0 / a + 2.0 * params.n1 * math.sqrt(
        params.gm0 * a * (1.0 - e**2)
    ) * math.cos(inclination)


def hill_eccentricity(a: float, params: SystemParams, c_l1: float | None = None) -> float:
    """Eccentricity at which the Jacobi constant of ``(a, e)`` drops to the collinear value.

    Returns 0 when even circular orbits are below it and NaN when no eccentricity reaches
    it.
    """
    c_l1 = jacobi_at_l1(params) if c_l1 is None else c_l1

    def gap(e: float) -> float:
        return jacobi_from_elements(a, e, params) - c_l1

    top = 1.0 - 1e-12
    if gap(0.0) <= 0.0:
        return 0.0
    if gap(top) > 0.0:
        return math.nan
    return float(brentq(gap, 0.0, top, xtol=1e-14))


def comparison_curves(a_values: Sequence[float], params: SystemParams) -> list[CurvePoint]:
    """Perihelion-crossing and Hill-limit eccentricities along ``a_values``.

    Raises:
        DomainError: Some ``a`` does not exceed ``a1``.
    """
    bad = [a for a in a_values if a <= params.a1]
    if bad:
        raise DomainError(f"semi-major axes must exceed a1 = {params.a1}, got {bad[0]}")
    c_l1 = jacobi_at_l1(params)
    return [
        CurvePoint(
            a=float(a),
            e_crossing=1.0 - params.a1 / a,
            e_hill=hill_eccentricity(a, params, c_l1),
        )
        for a in a_values
    ]


# ----------------------------------------------------------------------
# Divisors
# ----------------------------------------------------------------------


def mean_motion(a: float, params: SystemParams) -> float:
    return math.sqrt(params.gm0 / a**3)


def divisor_scan(
    a_values: Sequence[float],
    params: SystemParams,
    harmonics: Sequence[tuple[int, int]] = OCTUPOLE_HARMONICS,
) -> np.ndarray:
    """``|s1 n(a) - s2 n1| / n1`` for every ``a`` (rows) and harmonic (columns)."""
    n = np.array([mean_motion(a, params) for a in a_values])
    s1 = np.array([h[0] for h in harmonics], dtype=float)
    s2 = np.array([h[1] for h in harmonics], dtype=float)
    return np.abs(np.outer(n, s1) - s2[np.newaxis, :] * params.n1) / params.n1


def resonance_locations(
    params: SystemParams,
    harmonics: Sequence[tuple[int, int]] = OCTUPOLE_HARMONICS,
) -> list[tuple[int, int, float]]:
    """``(s1, s2, a)`` where ``s1 n(a) = s2 n1``, for harmonics with ``s2 > 0``, sorted by ``a``."""
    out = []
    for s1, s2 in harmonics:
        if s2 <= 0:
            continue
        n = s2 * params.n1 / s1
        out.append((s1, s2, (params.gm0 / n**2) ** (1.0 / 3.0)))
    return sorted(out, key=lambda item: item[2])

