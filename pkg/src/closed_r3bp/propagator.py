"""Element conversions, Cartesian and secular propagation, and mean/osculating maps.

The full model is integrated in barycentric Jacobi coordinates ``(R, P)`` with

    H = |P|^2 / 2 - Gm0 / |R + mu r1| - Gm0 mu / (1 - mu) / |R - (1 - mu) r1|

where ``r1(t)`` is the secondary's Keplerian position, pericenter along ``x``. Secular
propagation integrates Hamilton's equations of a normal form in Delaunay variables, with
the gradient taken from the closed-form derivative table.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from closed_r3bp.algebra import (
    COORDINATES,
    DerivativeTable,
    coordinate_increment,
    derivative,
    lie_transform,
)
from closed_r3bp.config import (
    ENCOUNTER_HILL_RADII,
    GM0,
    INTEGRATOR_ATOL,
    INTEGRATOR_METHOD,
    INTEGRATOR_RTOL,
)
from closed_r3bp.exceptions import DomainError, EncounterError, EvaluationError
from closed_r3bp.models import (
    AnomalyKind,
    CartesianState,
    ElementState,
    FrameKind,
    SystemParams,
)
from closed_r3bp.normalizer import NormalizationResult, secular_hamiltonian
from closed_r3bp.series import PoissonSeries

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_KEPLER_TOL = 1e-15
_KEPLER_MAX_ITER = 50
_TINY = 1e-14

# ----------------------------------------------------------------------
# Anomalies
# ----------------------------------------------------------------------


def _check_eccentricity(e: float) -> None:
    if not 0.0 <= e < 1.0:
        raise DomainError(f"eccentricity must lie in [0, 1), got {e}")


def solve_kepler(M: Any, e: float) -> Any:
    """Eccentric anomaly ``E`` with ``E - e sin E = M``.

    Vectorised over ``M``; the solution is continuous in ``M`` (multiples of 2 pi in ``M``
    carry over to ``E``). Danby's starter is refined by Halley steps.

    Raises:
        DomainError: ``e`` outside [0, 1).
    """
    _check_eccentricity(e)
    M_arr = np.asarray(M, dtype=float)
    if e == 0.0:
        return float(M_arr) if M_arr.ndim == 0 else M_arr.copy()
    turns = np.round(M_arr / TWO_PI)
    Mr = M_arr - TWO_PI * turns
    E = Mr + 0.85 * e * np.sign(np.sin(Mr))
    for _ in range(_KEPLER_MAX_ITER):
        esin = e * np.sin(E)
        ecos = e * np.cos(E)
        f0 = E - esin - Mr
        f1 = 1.0 - ecos
        step = f0 / (f1 - 0.5 * f0 * esin / f1)
        E = E - step
        if np.all(np.abs(step) < _KEPLER_TOL):
            break
    E = E + TWO_PI * turns
    return float(E) if E.ndim == 0 else E


def eccentric_to_true(E: Any, e: float) -> Any:
    _check_eccentricity(e)
    half = np.asarray(E, dtype=float) / 2.0
    f = 2.0 * np.arctan2(math.sqrt(1.0 + e) * np.sin(half), math.sqrt(1.0 - e) * np.cos(half))
    return float(f) if np.ndim(f) == 0 else f


def true_to_eccentric(f: Any, e: float) -> Any:
    _check_eccentricity(e)
    half = np.asarray(f, dtype=float) / 2.0
    E = 2.0 * np.arctan2(math.sqrt(1.0 - e) * np.sin(half), math.sqrt(1.0 + e) * np.cos(half))
    return float(E) if np.ndim(E) == 0 else E


def eccentric_to_mean(E: Any, e: float) -> Any:
    _check_eccentricity(e)
    E_arr = np.asarray(E, dtype=float)
    M = E_arr - e * np.sin(E_arr)
    return float(M) if M.ndim == 0 else M


def mean_to_true(M: Any, e: float) -> Any:
    return eccentric_to_true(solve_kepler(M, e), e)


def true_to_mean(f: Any, e: float) -> Any:
    return eccentric_to_mean(true_to_eccentric(f, e), e)


def convert_anomaly(z: ElementState, kind: AnomalyKind | str) -> ElementState:
    """Same state with its anomaly expressed as ``kind``."""
    kind = AnomalyKind(kind)
    if kind is z.anomaly_kind:
        return z
    if z.anomaly_kind is AnomalyKind.true:
        E = true_to_eccentric(z.anomaly, z.e)
    elif z.anomaly_kind is AnomalyKind.mean:
        E = solve_kepler(z.anomaly, z.e)
    else:
        E = z.anomaly
    if kind is AnomalyKind.eccentric:
        value = E
    elif kind is AnomalyKind.true:
        value = eccentric_to_true(E, z.e)
    else:
        value = eccentric_to_mean(E, z.e)
    return z.model_copy(update={"anomaly": float(value) % TWO_PI, "anomaly_kind": kind})


# ----------------------------------------------------------------------
# Elements <-> Cartesian
# ----------------------------------------------------------------------


def _rotation(i: float, g: float, h: float) -> np.ndarray:
    """Perifocal-to-reference rotation ``R3(h) R1(i) R3(g)``."""
    cg, sg = math.cos(g), math.sin(g)
    ch, sh = math.cos(h), math.sin(h)
    ci, si = math.cos(i), math.sin(i)
    return np.array(
        [
            [ch * cg - sh * sg * ci, -ch * sg - sh * cg * ci, sh * si],
            [sh * cg + ch * sg * ci, -sh * sg + ch * cg * ci, -ch * si],
            [sg * si, cg * si, ci],
        ]
    )


def elements_to_cartesian(z: ElementState, gm0: float = GM0) -> CartesianState:
    """Two-body position and velocity of an element state about a centre of mass ``gm0``."""
    f = convert_anomaly(z, AnomalyKind.true).anomaly
    p = z.a * (1.0 - z.e**2)
    r = p / (1.0 + z.e * math.cos(f))
    speed = math.sqrt(gm0 / p)
    position = np.array([r * math.cos(f), r * math.sin(f), 0.0])
    velocity = np.array([-speed * math.sin(f), speed * (z.e + math.cos(f)), 0.0])
    rot = _rotation(z.i, z.g, z.h)
    R = rot @ position
    P = rot @ velocity
    return CartesianState(
        R=(float(R[0]), float(R[1]), float(R[2])),
        P=(float(P[0]), float(P[1]), float(P[2])),
        t=z.t,
        M1=z.M1,
    )


def cartesian_to_elements(
    state: CartesianState,
    gm0: float = GM0,
    *,
    frame: FrameKind = FrameKind.osculating,
) -> ElementState:
    """Osculating elements (true anomaly) of a Cartesian state.

    An undefined node (``i = 0``) is placed on the ``x`` axis, so ``g`` becomes the
    longitude of pericenter; an undefined pericenter (``e = 0``) is placed on the node.

    Raises:
        DomainError: The state is not on a bound, non-rectilinear orbit.
    """
    R = np.asarray(state.R, dtype=float)
    V = np.asarray(state.P, dtype=float)
    r = float(np.linalg.norm(R))
    v2 = float(np.dot(V, V))
    energy = 0.5 * v2 - gm0 / r
    if energy >= 0.0:
        raise DomainError(f"state is not bound (specific energy {energy:.6e})")
    a = -gm0 / (2.0 * energy)
    ang = np.cross(R, V)
    ang_norm = float(np.linalg.norm(ang))
    if ang_norm <= _TINY * r * math.sqrt(v2):
        raise DomainError("rectilinear state: angular momentum vanishes")
    w = ang / ang_norm
    e_vec = ((v2 - gm0 / r) * R - float(np.dot(R, V)) * V) / gm0
    e = float(np.linalg.norm(e_vec))
    i = math.acos(max(-1.0, min(1.0, float(w[2]))))

    node = np.array([-ang[1], ang[0], 0.0])
    node_norm = float(np.linalg.norm(node))
    node_dir = node / node_norm if node_norm > _TINY * ang_norm else np.array([1.0, 0.0, 0.0])
    h = math.atan2(float(node_dir[1]), float(node_dir[0]))

    peri_dir = e_vec / e if e > _TINY else node_dir
    g = math.atan2(
        float(np.dot(w, np.cross(node_dir, peri_dir))), float(np.dot(node_dir, peri_dir))
    )
    r_dir = R / r
    f = math.atan2(float(np.dot(w, np.cross(peri_dir, r_dir))), float(np.dot(peri_dir, r_dir)))
    return ElementState(
        a=a,
        e=e,
        i=i,
        anomaly=f,
        anomaly_kind=AnomalyKind.true,
        g=g,
        h=h,
        frame=frame,
        t=state.t,
        M1=state.M1,
    )


# ----------------------------------------------------------------------
# Delaunay variables
# ----------------------------------------------------------------------


class DelaunayState(NamedTuple):
    """Canonical ``(l, g, h; dL, G, H)`` plus the secondary's mean anomaly."""

    l: float  # noqa: E741
    g: float
    h: float
    dL: float
    G: float
    H: float
    M1: float


def elements_to_delaunay(z: ElementState, params: SystemParams) -> DelaunayState:
    """Delaunay variables of ``z``; in planar mode ``g`` is the longitude of pericenter."""
    M = convert_anomaly(z, AnomalyKind.mean).anomaly
    L = math.sqrt(params.gm0 * z.a)
    G = L * math.sqrt(1.0 - z.e**2)
    if params.planar:
        return DelaunayState(M, z.g + z.h, 0.0, L - params.L_star, G, G, z.M1)
    return DelaunayState(M, z.g, z.h, L - params.L_star, G, G * math.cos(z.i), z.M1)


def delaunay_to_elements(
    d: DelaunayState,
    params: SystemParams,
    *,
    frame: FrameKind = FrameKind.osculating,
    t: float = 0.0,
) -> ElementState:
    """Element state (mean anomaly) of Delaunay variables.

    Raises:
        DomainError: ``L`` is not positive or ``G`` exceeds ``L``.
    """
    L = params.L_star + d.dL
    if L <= 0.0:
        raise DomainError(f"non-positive Delaunay action L = {L}")
    ratio = d.G / L
    if ratio > 1.0 + 1e-12 or ratio <= 0.0:
        raise DomainError(f"G/L = {ratio} outside (0, 1]")
    e = math.sqrt(max(0.0, 1.0 - ratio**2))
    cos_i = 1.0 if params.planar else max(-1.0, min(1.0, d.H / d.G))
    return ElementState(
        a=L**2 / params.gm0,
        e=e,
        i=math.acos(cos_i),
        anomaly=d.l,
        anomaly_kind=AnomalyKind.mean,
        g=d.g,
        h=d.h,
        frame=frame,
        t=t,
        M1=d.M1,
    )


def secondary_anomaly(M1: Any, params: SystemParams) -> Any:
    """The secondary's eccentric anomaly (equal to ``M1`` on a circular orbit)."""
    if params.e1 == 0.0:
        return M1
    return solve_kepler(M1, params.e1)


def delaunay_point(
    d: DelaunayState, params: SystemParams
) -> tuple[dict[str, float], np.ndarray]:
    """Symbol values and ``(f, g, h, E1)`` angles for evaluating series at ``d``."""
    L = params.L_star + d.dL
    eta = d.G / L
    e = math.sqrt(max(0.0, 1.0 - eta**2))
    ic = 1.0 if params.planar else d.H / d.G
    E1 = float(secondary_anomaly(d.M1, params))
    point = {
        "dL": d.dL,
        "e": e,
        "eta": eta,
        "ic": ic,
        "is": math.sqrt(max(0.0, 1.0 - ic**2)),
        "phi1": params.e1 * math.sin(E1),
        "r1": params.a1 * (1.0 - params.e1 * math.cos(E1)),
        "J1": 0.0,
    }
    angles = np.array([float(mean_to_true(d.l, e)), d.g, d.h, E1])
    return point, angles


# ----------------------------------------------------------------------
# Cartesian propagation
# ----------------------------------------------------------------------


@dataclass
class Trajectory:
    """Samples of a Cartesian propagation."""

    t: np.ndarray
    R: np.ndarray
    P: np.ndarray
    M1: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def states(self) -> list[CartesianState]:
        return [
            CartesianState(
                R=(float(r[0]), float(r[1]), float(r[2])),
                P=(float(p[0]), float(p[1]), float(p[2])),
                t=float(t),
                M1=float(m1),
            )
            for t, r, p, m1 in zip(self.t, self.R, self.P, self.M1)
        ]

    def elements(self, gm0: float = GM0) -> list[ElementState]:
        return [cartesian_to_elements(s, gm0) for s in self.states()]


def secondary_position(M1: float, params: SystemParams) -> np.ndarray:
    """``r1`` in the secondary's orbital frame, pericenter along ``x``."""
    E1 = float(secondary_anomaly(M1, params))
    return params.a1 * np.array(
        [math.cos(E1) - params.e1, params.eta1 * math.sin(E1), 0.0]
    )


def _bodies(r1: np.ndarray, params: SystemParams) -> tuple[tuple[np.ndarray, float], ...]:
    mu = params.mu
    primary = (-mu * r1, params.gm0)
    if mu == 0.0:
        return (primary,)
    return primary, ((1.0 - mu) * r1, params.gm0 * mu / (1.0 - mu))


def potential(R: np.ndarray, r1: np.ndarray, params: SystemParams) -> float:
    return -sum(k / float(np.linalg.norm(R - pos)) for pos, k in _bodies(r1, params))


def acceleration(R: np.ndarray, r1: np.ndarray, params: SystemParams) -> np.ndarray:
    acc = np.zeros(3)
    for pos, k in _bodies(r1, params):
        x = R - pos
        acc -= k * x / float(np.linalg.norm(x)) ** 3
    return acc


def acceleration_jacobian(R: np.ndarray, r1: np.ndarray, params: SystemParams) -> np.ndarray:
    """``d(acceleration)/dR``: exact second derivatives of the potential."""
    jac = np.zeros((3, 3))
    for pos, k in _bodies(r1, params):
        x = R - pos
        d = float(np.linalg.norm(x))
        jac += k * (3.0 * np.outer(x, x) / d**5 - np.eye(3) / d**3)
    return jac


def encounter_radius(params: SystemParams, hill_radii: float = ENCOUNTER_HILL_RADII) -> float:
    return hill_radii * params.hill_radius


def encounter_event(
    params: SystemParams, m1_0: float, t0: float, radius: float
) -> Any:
    def event(t: float, y: np.ndarray) -> float:
        r1 = secondary_position(m1_0 + params.n1 * (t - t0), params)
        return float(np.linalg.norm(y[:3] - (1.0 - params.mu) * r1)) - radius

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = -1  # type: ignore[attr-defined]
    return event


def _sample_times(t0: float, span: float, samples: int) -> np.ndarray:
    if span == 0.0 or samples <= 1:
        return np.array([t0]) if span == 0.0 else np.array([t0, t0 + span])
    return np.linspace(t0, t0 + span, samples)


def propagate_cartesian(
    state: CartesianState,
    span: float,
    params: SystemParams,
    *,
    samples: int = 200,
    rtol: float = INTEGRATOR_RTOL,
    atol: float = INTEGRATOR_ATOL,
    hill_radii: float = ENCOUNTER_HILL_RADII,
) -> Trajectory:
    """Integrate the untruncated equations of motion over ``span`` years.

    Args:
        state: Initial barycentric state with its epoch and the secondary's ``M1``.
        span: Integration time (years, non-negative).
        params: System; ``mu = 0`` gives the pure Keplerian flow.
        samples: Number of equally spaced output times including both ends.
        rtol: Relative tolerance of the DOP853 integrator.
        atol: Absolute tolerance of the DOP853 integrator.
        hill_radii: Encounter radius in units of the secondary's Hill radius.

    Raises:
        EncounterError: The particle came within the encounter radius of the secondary.
        DomainError: ``span`` is negative.
    """
    if span < 0.0:
        raise DomainError(f"propagation span must be non-negative, got {span}")
    t0 = state.t
    y0 = np.concatenate([np.asarray(state.R, dtype=float), np.asarray(state.P, dtype=float)])
    times = _sample_times(t0, span, samples)
    if span == 0.0:
        return Trajectory(times, y0[np.newaxis, :3], y0[np.newaxis, 3:], np.array([state.M1]))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r1 = secondary_position(state.M1 + params.n1 * (t - t0), params)
        return np.concatenate([y[3:], acceleration(y[:3], r1, params)])

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
        raise EvaluationError(f"Cartesian integration failed: {sol.message}")
    logger.debug("cartesian propagation: %d rhs evaluations", sol.nfev)
    return Trajectory(
        sol.t, sol.y[:3].T.copy(), sol.y[3:].T.copy(), state.M1 + params.n1 * (sol.t - t0)
    )


def jacobi_constant(state: CartesianState, params: SystemParams) -> float:
    """Jacobi constant ``-2 (|P|^2/2 - n1 (R x P)_z + V)`` in the frame rotating with ``n1``.

    Conserved in the circular problem.
    """
    R = np.asarray(state.R, dtype=float)
    P = np.asarray(state.P, dtype=float)
    r1 = secondary_position(state.M1, params)
    energy = 0.5 * float(np.dot(P, P)) - params.n1 * float(np.cross(R, P)[2])
    return -2.0 * (energy + potential(R, r1, params))


# ----------------------------------------------------------------------
# Mean <-> osculating
# ----------------------------------------------------------------------


class NearIdentityTransform:
    """Lie-series map between osculating and mean Delaunay variables.

    The osculating variables are ``exp(L_chi_j) ... exp(L_chi_1) q`` evaluated at the
    mean ones, and the mean variables ``exp(L_-chi_1) ... exp(L_-chi_j) q`` evaluated at
    the osculating ones. Both are built once as closed-form increment series per
    coordinate and then evaluated.

    Args:
        result: Normalization whose generating functions define the map.
        j: Number of numbered steps to use (step II is included when due).
        inverse: False for mean -> osculating, True for osculating -> mean.
    """

    def __init__(self, result: NormalizationResult, j: int | None = None, *, inverse: bool) -> None:
        self.params = result.params
        self.j = result.steps_completed if j is None else j
        self.inverse = inverse
        wanted = set(result.labels_through(self.j))
        chis = [chi for label, chi in zip(result.labels, result.chis) if label in wanted]
        if inverse:
            chis = [-chi for chi in reversed(chis)]
        table = DerivativeTable(self.params)
        nbk = self.params.nbk
        increments = {q: PoissonSeries.zero(nbk) for q in COORDINATES}
        for chi in chis:
            for q in COORDINATES:
                increments[q] = coordinate_increment(q, chi, table) + lie_transform(
                    increments[q], chi, table
                )
        self.increments = increments
        logger.debug(
            "%s transform through step %d: %s",
            "osc->mean" if inverse else "mean->osc",
            self.j,
            {q: len(s) for q, s in increments.items()},
        )

    def apply_delaunay(self, d: DelaunayState) -> DelaunayState:
        point, angles = delaunay_point(d, self.params)
        shift = {q: s.evaluate(point, angles) for q, s in self.increments.items()}
        return DelaunayState(
            l=(d.l + shift["l"]) % TWO_PI,
            g=(d.g + shift["g"]) % TWO_PI,
            h=(d.h + shift["h"]) % TWO_PI,
            dL=d.dL + shift["dL"],
            G=d.G + shift["G"],
            H=d.H + shift["H"],
            M1=d.M1,
        )

    def __call__(self, z: ElementState) -> ElementState:
        frame = FrameKind.mean if self.inverse else FrameKind.osculating
        moved = self.apply_delaunay(elements_to_delaunay(z, self.params))
        return delaunay_to_elements(moved, self.params, frame=frame, t=z.t)


def osc_to_mean(
    z: ElementState, result: NormalizationResult, j: int | None = None
) -> ElementState:
    """Mean elements after ``j`` steps (default: all completed) of an osculating state."""
    return NearIdentityTransform(result, j, inverse=True)(z)


def mean_to_osc(
    xi: ElementState, result: NormalizationResult, j: int | None = None
) -> ElementState:
    """Osculating elements of a mean state; inverts :func:`osc_to_mean` to truncation order."""
    return NearIdentityTransform(result, j, inverse=False)(xi)


# ----------------------------------------------------------------------
# Secular and semi-analytic propagation
# ----------------------------------------------------------------------

_FLOW = (("dL", 1.0), ("G", 1.0), ("H", 1.0), ("l", -1.0), ("g", -1.0), ("h", -1.0))


def secular_gradient(
    zj: PoissonSeries, params: SystemParams, action: float
) -> dict[str, PoissonSeries]:
    """Partial derivatives of a sigma-collapsed normal form, keyed by variable."""
    table = DerivativeTable(params, bookkept=False, action=action)
    names = {name for name, _ in _FLOW} | {"J1"}
    return {name: derivative(zj, name, table) for name in sorted(names)}


def propagate_secular(
    xi: ElementState,
    span: float,
    zj: PoissonSeries,
    params: SystemParams,
    *,
    samples: int = 200,
    rtol: float = INTEGRATOR_RTOL,
    atol: float = INTEGRATOR_ATOL,
) -> list[ElementState]:
    """Integrate Hamilton's equations of the secular Hamiltonian ``zj``.

    ``zj`` comes from :func:`closed_r3bp.normalizer.secular_hamiltonian`; it does not
    depend on ``l``, so ``dL`` and the ``1/L`` of the chain rule stay fixed along the flow.

    Returns:
        Mean element states (mean anomaly) at ``samples`` equally spaced times.
    """
    if span < 0.0:
        raise DomainError(f"propagation span must be non-negative, got {span}")
    d0 = elements_to_delaunay(xi, params)
    grad = secular_gradient(zj, params, params.L_star + d0.dL)
    times = _sample_times(xi.t, span, samples)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        point, angles = delaunay_point(DelaunayState(*y), params)
        out = [sign * grad[name].evaluate(point, angles) for name, sign in _FLOW]
        out.append(grad["J1"].evaluate(point, angles))
        return np.array(out)

    y0 = np.array(d0, dtype=float)
    if span == 0.0:
        ys = y0[np.newaxis, :]
    else:
        sol = solve_ivp(
            rhs, (xi.t, xi.t + span), y0, method=INTEGRATOR_METHOD, t_eval=times,
            rtol=rtol, atol=atol,
        )  # fmt: skip
        if not sol.success:
            raise EvaluationError(f"secular integration failed: {sol.message}")
        ys = sol.y.T
    return [
        delaunay_to_elements(DelaunayState(*row), params, frame=FrameKind.mean, t=float(t))
        for t, row in zip(times, ys)
    ]


def semianalytic_propagate(
    z0: ElementState,
    span: float,
    result: NormalizationResult,
    j: int | None = None,
    *,
    samples: int = 200,
    rtol: float = INTEGRATOR_RTOL,
    atol: float = INTEGRATOR_ATOL,
) -> list[ElementState]:
    """Osculating elements from the secular flow: osc -> mean -> secular flow -> osc."""
    j = result.steps_completed if j is None else j
    to_mean = NearIdentityTransform(result, j, inverse=True)
    to_osc = NearIdentityTransform(result, j, inverse=False)
    xi0 = to_mean(z0)
    zj = secular_hamiltonian(result, j)
    mean_states = propagate_secular(
        xi0, span, zj, result.params, samples=samples, rtol=rtol, atol=atol
    )
    logger.info("semi-analytic propagation: %d samples through step %d", len(mean_states), j)
    return [to_osc(xi) for xi in mean_states]


def initial_state(
    a: float,
    e: float,
    *,
    inclination: float = 0.0,
    anomaly: float = 0.0,
    g: float = 0.0,
    h: float = 0.0,
    M1: float = 0.0,
) -> ElementState:
    """Osculating element state with a true anomaly; angles in radians."""
    return ElementState(
        a=a, e=e, i=inclination, anomaly=anomaly, anomaly_kind=AnomalyKind.true, g=g, h=h, M1=M1
    )


def element_columns(states: Sequence[ElementState]) -> dict[str, np.ndarray]:
    """``t, a, e, i, f, g, h`` arrays of a time series, anomalies converted to true."""
    true_states = [convert_anomaly(z, AnomalyKind.true) for z in states]
    return {
        "t": np.array([z.t for z in true_states]),
        "a": np.array([z.a for z in true_states]),
        "e": np.array([z.e for z in true_states]),
        "i": np.array([z.i for z in true_states]),
        "f": np.array([z.anomaly for z in true_states]),
        "g": np.array([z.g for z in true_states]),
        "h": np.array([z.h for z in true_states]),
    }
