"""Construction of the book-kept, prepared Hamiltonian of the exterior problem.

The pipeline is

    multipole_hamiltonian  ->  to_delaunay_closed_form  ->  expand_delta_l
        ->  apply_bookkeeping  ->  prepare

The middle stages work on a :class:`DelaunayForm`: series in the closed-form symbols whose
coefficients still exclude the powers of ``mu``, ``e1``, ``eta1`` and ``L`` that decide the
book-keeping weights. Those powers travel in the :class:`Grade` of each part until
:func:`apply_bookkeeping` turns them into sigma exponents.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, NamedTuple

import numpy as np

from closed_r3bp.algebra import DerivativeTable
from closed_r3bp.exceptions import DomainError, NormalizationError
from closed_r3bp.models import ExponentMode, SystemParams
from closed_r3bp.series import (
    SYMBOL_INDEX,
    PoissonSeries,
    RawTerm,
    add_all,
    canonicalize,
    filter_terms,
)

logger = logging.getLogger(__name__)

_DL = SYMBOL_INDEX["dL"]
_E = SYMBOL_INDEX["e"]
_ETA = SYMBOL_INDEX["eta"]
_J1 = SYMBOL_INDEX["J1"]

KEPLER = "kepler"
DISTURBING = "disturbing"


# ----------------------------------------------------------------------
# Parameters
# ----------------------------------------------------------------------


def compute_exponents(
    e_star: float, mu: float, e1: float, mode: ExponentMode | str = ExponentMode.ceiling
) -> tuple[int, int]:
    """Book-keeping exponents ``(nu, nu1)`` from the reference eccentricity.

    ``nu`` rounds ``log10(mu) / log10(e*)`` and ``nu1`` rounds ``log10(e1) / log10(e*)``,
    upwards in ``ceiling`` mode and to the nearest integer in ``nearest`` mode. Both are
    at least one; ``e1 = 0`` gives ``nu1 = 1`` by convention.

    Raises:
        DomainError: ``e_star`` or ``mu`` outside (0, 1), or ``e1`` outside [0, 1).
    """
    if not 0.0 < e_star < 1.0:
        raise DomainError(f"reference eccentricity must lie in (0, 1), got {e_star}")
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mass ratio must lie in (0, 1), got {mu}")
    if not 0.0 <= e1 < 1.0:
        raise DomainError(f"secondary eccentricity must lie in [0, 1), got {e1}")
    mode = ExponentMode(mode)
    rounder = math.ceil if mode is ExponentMode.ceiling else round
    log_e = math.log10(e_star)
    nu = max(1, int(rounder(math.log10(mu) / log_e)))
    nu1 = 1 if e1 == 0.0 else max(1, int(rounder(math.log10(e1) / log_e)))
    return nu, nu1


def system_params(
    *,
    mu: float,
    gm0: float,
    a1: float,
    e1: float,
    period1: float,
    a_star: float,
    e_star: float,
    k_mu: int,
    k_mp: int,
    mode: ExponentMode | str = ExponentMode.ceiling,
    nu: int | None = None,
    nu1: int | None = None,
    planar: bool = False,
    circular: bool = False,
) -> SystemParams:
    """Validated :class:`SystemParams` with derived ``L*``, ``n*``, ``n1`` and exponents.

    Explicit ``nu`` / ``nu1`` override the values :func:`compute_exponents` derives.

    Raises:
        DomainError: The inputs leave the exterior-regime domain.
    """
    if not 0.0 < mu <= 0.5:
        raise DomainError(f"mass ratio must lie in (0, 1/2], got {mu}")
    if a_star <= a1:
        raise DomainError(f"a* = {a_star} must exceed the secondary's a1 = {a1}")
    if k_mp < 2:
        raise DomainError(f"multipole order k_mp must be at least 2, got {k_mp}")
    if k_mu < 1:
        raise DomainError(f"mass-ratio order k_mu must be at least 1, got {k_mu}")
    if period1 <= 0.0 or gm0 <= 0.0:
        raise DomainError("period and gravitational parameter must be positive")
    if circular and e1 != 0.0:
        logger.info("circular model requested: ignoring e1 = %g", e1)
        e1 = 0.0
    auto_nu, auto_nu1 = compute_exponents(e_star, mu, e1, mode)
    nu = auto_nu if nu is None else nu
    nu1 = auto_nu1 if nu1 is None else nu1
    L_star = math.sqrt(gm0 * a_star)
    return SystemParams(
        mu=mu,
        gm0=gm0,
        a1=a1,
        e1=e1,
        n1=2.0 * math.pi / period1,
        a_star=a_star,
        e_star=e_star,
        L_star=L_star,
        n_star=gm0**2 / L_star**3,
        nu=nu,
        nu1=nu1,
        k_mu=k_mu,
        k_mp=k_mp,
        nbk=nu * k_mu,
        planar=planar,
        circular=circular,
        exponent_mode=ExponentMode(mode),
    )


# ----------------------------------------------------------------------
# Multipole expansion
# ----------------------------------------------------------------------


def binomial(n: float, k: int) -> float:
    """Generalized binomial coefficient ``n (n-1) ... (n-k+1) / k!`` for any real ``n``."""
    if k < 0:
        return 0.0
    return math.prod((n - i) / (i + 1) for i in range(k))


@dataclass(frozen=True)
class MultipoleTerm:
    """``mu^(k1+1) * coeff * x^k2 * y^k3`` with ``x = 2 r1.R/|R|^2``, ``y = |r1|^2/|R|^2``."""

    k1: int
    k2: int
    k3: int
    coeff: float

    @property
    def degree(self) -> int:
        """Power of ``|r1|/|R|`` carried by the term."""
        return self.k2 + 2 * self.k3


def multipole_coefficient(k1: int, k2: int, k3: int) -> float:
    """Coefficient of ``mu^(k1+1) x^k2 y^k3 / |R|`` in the disturbing function.

    Collects the direct term of the primary's distance (``mu^(k2 + 2 k3)``) and the
    ``(1-mu)``-expanded term of the secondary's distance, at expansion order ``k2 + k3``.
    """
    order = k2 + k3
    b_l = binomial(-0.5, order)
    total = 0.0
    if order >= 1 and k1 == k2 + 2 * k3 - 1:
        total += b_l * binomial(order, k3)
    n = order - 1 + k3
    if n >= 0 and k1 > n:
        return total
    total += b_l * binomial(order, k3) * (-1) ** k2 * (-1) ** k1 * binomial(n, k1)
    return float(total)


def multipole_hamiltonian(params: SystemParams) -> list[MultipoleTerm]:
    """Truncated multipole table: ``k1 <= k_mu - 1`` and ``k2 + 2 k3 <= k_mp``.

    Zero coefficients, including the dipole ``(k2, k3) = (1, 0)`` which cancels for every
    ``k1``, are not returned.

    Raises:
        DomainError: ``k_mp < 2``.
    """
    if params.k_mp < 2:
        raise DomainError(f"multipole order k_mp must be at least 2, got {params.k_mp}")
    terms: list[MultipoleTerm] = []
    for k1 in range(params.k_mu):
        for k3 in range(params.k_mp // 2 + 1):
            for k2 in range(params.k_mp - 2 * k3 + 1):
                coeff = multipole_coefficient(k1, k2, k3)
                if abs(coeff) < 1e-14:
                    continue
                terms.append(MultipoleTerm(k1, k2, k3, coeff))
    logger.debug("multipole table: %d terms", len(terms))
    return terms


def disturbing_value(
    mu: float, gm0: float, r1: np.ndarray, R: np.ndarray
) -> float:
    """Exact ``mu H1 = -Gm0 (1/|R + mu r1| + mu/(1-mu)/|R - (1-mu) r1| - 1/|R|)``."""
    r_primary = np.linalg.norm(R + mu * r1)
    r_secondary = np.linalg.norm(R - (1.0 - mu) * r1)
    return float(
        -gm0 * (1.0 / r_primary + mu / (1.0 - mu) / r_secondary - 1.0 / np.linalg.norm(R))
    )


def multipole_value(
    terms: list[MultipoleTerm], mu: float, gm0: float, r1: np.ndarray, R: np.ndarray
) -> float:
    """Numeric value of a truncated multipole table at Cartesian vectors."""
    norm_R = float(np.linalg.norm(R))
    x = 2.0 * float(np.dot(r1, R)) / norm_R**2
    y = float(np.dot(r1, r1)) / norm_R**2
    total = sum(t.coeff * mu ** (t.k1 + 1) * x**t.k2 * y**t.k3 for t in terms)
    return -gm0 * total / norm_R


# ----------------------------------------------------------------------
# Delaunay closed form
# ----------------------------------------------------------------------


class Grade(NamedTuple):
    """Powers kept outside the series coefficients until book-keeping."""

    source: str
    mu: int = 0
    e1: int = 0
    eta1: int = 0
    l_power: int = 0


@dataclass
class DelaunayForm:
    """Graded Hamiltonian: ``sum mu^a e1^b eta1^c L^d * parts[Grade(a, b, c, d)]``."""

    params: SystemParams
    parts: dict[Grade, PoissonSeries] = field(default_factory=dict)

    def add(self, grade: Grade, series: PoissonSeries) -> None:
        if not series:
            return
        if grade in self.parts:
            self.parts[grade] = self.parts[grade] + series
        else:
            self.parts[grade] = series

    def evaluate(self, point: dict[str, float], angles: Any) -> float:
        """Value with every graded power restored; ``L = L* + dL``."""
        p = self.params
        L = p.L_star + point.get("dL", 0.0)
        total = 0.0
        for grade, series in self.parts.items():
            weight = p.mu**grade.mu * p.e1**grade.e1 * p.eta1**grade.eta1 * L**grade.l_power
            if weight != 0.0:
                total += weight * series.evaluate(point, angles)
        return total

    def __len__(self) -> int:
        return sum(len(s) for s in self.parts.values())


# (e1 power, eta1 power) -> series
Graded = dict[tuple[int, int], PoissonSeries]


def _graded_mul(a: Graded, b: Graded, max_e1: int) -> Graded:
    out: Graded = {}
    for (ea, ha), sa in a.items():
        for (eb, hb), sb in b.items():
            key = (ea + eb, ha + hb)
            if key[0] > max_e1:
                continue
            prod = sa * sb
            out[key] = out[key] + prod if key in out else prod
    return out


def _graded_pow(base: Graded, power: int, max_e1: int, nbk: int) -> Graded:
    out: Graded = {(0, 0): PoissonSeries.constant(1.0, nbk)}
    for _ in range(power):
        out = _graded_mul(out, base, max_e1)
    return out


def _position_projection(params: SystemParams) -> Graded:
    """``r1 . R / |R|`` split by powers of ``e1`` and ``eta1``."""
    m = partial(PoissonSeries.monomial, nbk=params.nbk)
    a1 = params.a1
    if params.planar:
        along = m(1.0, trig=(1, 1, 0, 0))
        across = m(1.0, trig=(1, 1, 0, 0), parity="sin")
    else:
        along = add_all(
            [
                m(0.5, trig=(1, 1, 1, 0)),
                m(0.5, trig=(1, 1, 1, 0), ic=1),
                m(0.5, trig=(1, 1, -1, 0)),
                m(-0.5, trig=(1, 1, -1, 0), ic=1),
            ],
            params.nbk,
        )
        across = add_all(
            [
                m(0.5, trig=(1, 1, 1, 0), parity="sin"),
                m(0.5, trig=(1, 1, 1, 0), parity="sin", ic=1),
                m(-0.5, trig=(1, 1, -1, 0), parity="sin"),
                m(0.5, trig=(1, 1, -1, 0), parity="sin", ic=1),
            ],
            params.nbk,
        )
    graded: Graded = {
        (0, 0): along * m(a1, trig=(0, 0, 0, 1)),
        (0, 1): across * m(a1, trig=(0, 0, 0, 1), parity="sin"),
    }
    if params.has_secondary_eccentricity:
        graded[(1, 0)] = along.scale(-a1)
    return graded


def _secondary_distance_sq(params: SystemParams) -> Graded:
    """``|r1|^2 = a1^2 (1 - e1 cos E1)^2`` split by powers of ``e1``."""
    m = partial(PoissonSeries.monomial, nbk=params.nbk)
    a1_sq = params.a1**2
    graded: Graded = {(0, 0): m(a1_sq)}
    if params.has_secondary_eccentricity:
        graded[(1, 0)] = m(-2.0 * a1_sq, trig=(0, 0, 0, 1))
        graded[(2, 0)] = m(0.5 * a1_sq) + m(0.5 * a1_sq, trig=(0, 0, 0, 2))
    return graded


def to_delaunay_closed_form(terms: list[MultipoleTerm], params: SystemParams) -> DelaunayForm:
    """Express the Keplerian part and every multipole term in closed-form Delaunay symbols.

    Uses ``1/|R| = Gm0 (1 + e cos f) / (L^2 eta^2)`` and keeps ``|r1|`` only through its
    square ``a1^2 (1 - e1 cos E1)^2``.
    """
    nbk = params.nbk
    gm0 = params.gm0
    m = partial(PoissonSeries.monomial, nbk=nbk)
    form = DelaunayForm(params)

    form.add(Grade(KEPLER, l_power=-2), m(-0.5 * gm0**2))
    form.add(Grade(KEPLER), m(params.n1, J1=1))

    projection = _position_projection(params)
    distance_sq = _secondary_distance_sq(params)
    radial = m(1.0) + m(1.0, trig=(1, 0, 0, 0), e=1)

    for term in terms:
        mu_weight = (term.k1 + 1) * params.nu
        if mu_weight > nbk:
            continue
        max_e1 = (nbk - mu_weight) // params.nu1 if params.has_secondary_eccentricity else 0
        n = 1 + term.degree
        scale = -gm0 * term.coeff * 2.0**term.k2 * gm0**n
        shape = m(scale, eta=-2 * n)
        for _ in range(n):
            shape = shape * radial
        angular = _graded_mul(
            _graded_pow(projection, term.k2, max_e1, nbk),
            _graded_pow(distance_sq, term.k3, max_e1, nbk),
            max_e1,
        )
        for (e1_power, eta1_power), series in angular.items():
            grade = Grade(DISTURBING, term.k1 + 1, e1_power, eta1_power, -2 * n)
            form.add(grade, shape * series)
    logger.debug("Delaunay form: %d graded parts, %d terms", len(form.parts), len(form))
    return form


def expand_delta_l(form: DelaunayForm) -> DelaunayForm:
    """Expand every ``L^(-2n)`` in powers of ``dL = L - L*``.

    The Keplerian part keeps ``dL^k`` up to the power whose weight ``(k-1) nu`` still fits
    below ``nbk`` and loses its constant; the disturbing part keeps ``dL^k`` while
    ``(k + mu power) nu <= nbk``.
    """
    p = form.params
    m = partial(PoissonSeries.monomial, nbk=p.nbk)
    out = DelaunayForm(p)
    for grade, series in form.parts.items():
        if grade.l_power == 0:
            out.add(grade, series)
            continue
        power = grade.l_power
        if grade.source == KEPLER:
            ks = range(1, p.k_mu + 2)
        else:
            ks = range(0, p.k_mu - grade.mu + 1)
        poly = add_all(
            [m(binomial(power, k) * p.L_star ** (power - k), dL=k) for k in ks], p.nbk
        )
        out.add(grade._replace(l_power=0), series * poly)
    return out


def _eta_split(n: int) -> list[tuple[float, int, int]]:
    """``eta^(-2n)`` as ``(1 + (eta^-2 - 1) sigma^2)^n``: ``(coeff, sigma, eta power)``."""
    out: list[tuple[float, int, int]] = []
    for k in range(n + 1):
        for j in range(k + 1):
            coeff = math.comb(n, k) * math.comb(k, j) * (-1) ** (k - j)
            out.append((float(coeff), 2 * k, -2 * j))
    return out


def _eta1_split(power: int, eta1: float, nu1: int) -> list[tuple[float, int]]:
    """``eta1^m`` as ``(1 + (eta1 - 1) sigma^(2 nu1))^m``: ``(value, sigma)``."""
    return [
        (math.comb(power, k) * (eta1 - 1.0) ** k, 2 * nu1 * k) for k in range(power + 1)
    ]


def apply_bookkeeping(form: DelaunayForm) -> PoissonSeries:
    """Attach sigma weights and fold the graded powers into the coefficients.

    ``e`` weighs sigma per power, ``mu`` sigma^nu, ``e1`` sigma^nu1; ``eta^-2`` is split as
    ``1 + (eta^-2 - 1) sigma^2`` and ``eta1`` as ``1 + (eta1 - 1) sigma^(2 nu1)``. ``dL^k``
    weighs ``sigma^(k nu)`` in the disturbing part and ``sigma^((k-1) nu)`` in the
    Keplerian part. Terms beyond ``sigma^nbk`` are dropped.
    """
    p = form.params
    raw: list[RawTerm] = []
    for grade, series in form.parts.items():
        if grade.l_power != 0:
            raise NormalizationError("apply_bookkeeping needs a dL-expanded form")
        factor = p.mu**grade.mu * p.e1**grade.e1
        if factor == 0.0:
            continue
        base = grade.mu * p.nu + grade.e1 * p.nu1
        eta1_parts = _eta1_split(grade.eta1, p.eta1, p.nu1)
        for coeff, _, trig, parity, exps in series.raw():
            dl = exps[_DL]
            if grade.source == KEPLER:
                dl_weight = (dl - 1) * p.nu if dl >= 1 else 0
            else:
                dl_weight = dl * p.nu
            eta_power = exps[_ETA]
            if eta_power > 0 or eta_power % 2:
                raise NormalizationError(f"unexpected eta^{eta_power} before book-keeping")
            sigma0 = base + dl_weight + exps[_E]
            for eta_coeff, eta_sigma, eta_exp in _eta_split(-eta_power // 2):
                new_exps = exps[:_ETA] + (eta_exp,) + exps[_ETA + 1 :]
                for eta1_value, eta1_sigma in eta1_parts:
                    value = coeff * factor * eta_coeff * eta1_value
                    if value == 0.0:
                        continue
                    raw.append(
                        (value, sigma0 + eta_sigma + eta1_sigma, trig, parity, new_exps)
                    )
    series = canonicalize(raw, p.nbk)
    logger.debug("book-kept Hamiltonian: %d terms up to sigma^%d", len(series), p.nbk)
    return series


# ----------------------------------------------------------------------
# Preparation
# ----------------------------------------------------------------------


@dataclass
class PreparedHamiltonian:
    """``H0 = Z0 + R0``, with ``Z0 = n* dL + n1 J1`` and every ``R0`` term in echelon form."""

    z0: PoissonSeries
    remainder: PoissonSeries
    params: SystemParams

    @property
    def total(self) -> PoissonSeries:
        return self.z0 + self.remainder

    def evaluate(self, point: dict[str, float], angles: Any) -> float:
        return self.total.evaluate(point, angles)


def kepler_part(params: SystemParams) -> PoissonSeries:
    """``Z0 = n* dL + n1 J1`` at sigma^0."""
    m = partial(PoissonSeries.monomial, nbk=params.nbk)
    return m(params.n_star, dL=1) + m(params.n1, J1=1)


def _is_z0_term(sigma: int, trig: Any, exps: tuple[int, ...]) -> bool:
    if sigma != 0 or trig.multipliers != (0, 0, 0, 0):
        return False
    linear = tuple(0 if i not in (_DL, _J1) else v for i, v in enumerate(exps))
    return linear == exps and sum(exps) == 1


def prepare(hamiltonian: PoissonSeries, params: SystemParams) -> PreparedHamiltonian:
    """Split off ``Z0`` and multiply the rest by ``a1 (1 - e1 sigma^nu1 cos E1) / r1``.

    Raises:
        NormalizationError: The extracted ``Z0`` differs from ``n* dL + n1 J1`` or the
            remainder does not start at sigma^nu.
    """
    z0 = kepler_part(params)
    found = filter_terms(hamiltonian, _is_z0_term)
    found_terms = found.to_dict()
    for key, expected in z0.items():
        got = found_terms.get(key, 0.0)
        if not math.isclose(got, expected, rel_tol=1e-12):
            raise NormalizationError(f"Z0 coefficient mismatch: {got!r} != {expected!r}")

    rest = hamiltonian - found
    table = DerivativeTable(params)
    remainder = table.times_t(rest)
    lowest = remainder.min_order()
    if lowest != params.nu:
        raise NormalizationError(
            f"prepared remainder starts at sigma^{lowest}, expected sigma^{params.nu}"
        )
    logger.info(
        "prepared Hamiltonian: %d remainder terms, orders %s..%s",
        len(remainder),
        lowest,
        remainder.max_order(),
    )
    return PreparedHamiltonian(z0=z0, remainder=remainder, params=params)


def build_prepared(params: SystemParams) -> PreparedHamiltonian:
    """Run the whole construction pipeline for ``params``."""
    terms = multipole_hamiltonian(params)
    form = expand_delta_l(to_delaunay_closed_form(terms, params))
    return prepare(apply_bookkeeping(form), params)
