"""Closed-form Poisson algebra in book-kept Delaunay variables.

Series are written in the true anomaly ``f`` and the secondary's eccentric anomaly ``E1``
rather than in the mean anomalies, so partial derivatives with respect to the canonical
variables ``(l, g, h, M1; dL, G, H, J1)`` are taken by the chain rule. The chain-rule
factors live in a :class:`DerivativeTable`; the book-kept table carries the sigma weights
that keep every produced term at its correct order, the plain table holds the same
expressions with every weight set to one.

The Poisson bracket is assembled from pieces in which the apparent ``1/e`` singularities
of ``df/dL``, ``de/dL`` and ``de/dG`` cancel analytically, so no transient negative power
of ``e`` is ever stored for regular inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial

from closed_r3bp.config import BRACKET_HEADROOM, LIE_DEPTH_SLACK, RESIDUE_TOLERANCE
from closed_r3bp.exceptions import ConfigurationError, NormalizationError
from closed_r3bp.models import SystemParams
from closed_r3bp.series import (
    COS,
    SIN,
    SYMBOL_INDEX,
    ZERO_TRIG,
    Key,
    PoissonSeries,
    Trig,
    TrigArg,
    add_all,
    canonicalize,
    filter_terms,
    mul_pairwise,
)

logger = logging.getLogger(__name__)

VARIABLES: tuple[str, ...] = ("l", "g", "h", "M1", "dL", "G", "H", "J1")

_E = SYMBOL_INDEX["e"]
_PHI = SYMBOL_INDEX["phi1"]
_R1 = SYMBOL_INDEX["r1"]

F_ONLY = (1, 0, 0, 0)
TWO_F = (2, 0, 0, 0)
E1_ONLY = (0, 0, 0, 1)


def _collapse(series: PoissonSeries) -> PoissonSeries:
    """Set every sigma weight to zero and merge."""
    return canonicalize([(c, 0, t, p, e) for c, _, t, p, e in series.raw()], series.nbk)


class DerivativeTable:
    """Chain-rule factors for derivatives in ``(f, e, eta, ic, is, r1, E1, phi1)``.

    Args:
        params: System whose ``L*``, ``a1``, ``e1``, book-keeping exponents and modes fix
            the factors.
        bookkept: When False every factor is the plain expression (sigma := 1), the
            secondary factor ``a1 (1 - e1 cos E1) / r1`` is replaced by one and ``phi1``
            derivatives are not shifted. The plain table is used for numeric work on
            series whose sigma exponents have been collapsed.
        action: Numeric value of ``L`` for a plain table. ``1/L`` is then exact instead of
            its first-order expansion about ``L*``; used along flows on which ``dL`` is
            constant.
        headroom: Orders kept above ``params.nbk``. Brackets and Lie sums run on the
            table returned by :meth:`widened` and truncate their result afterwards.
    """

    def __init__(
        self,
        params: SystemParams,
        bookkept: bool = True,
        action: float | None = None,
        *,
        headroom: int = 0,
    ) -> None:
        if bookkept and action is not None:
            raise ConfigurationError("a fixed action is only allowed for plain tables")
        self.params = params
        self.bookkept = bookkept
        self.action = action
        self.headroom = headroom
        self.nbk = params.nbk + headroom
        self.circular = params.circular
        self.phi_shift = params.nu1 if bookkept else 0
        self._wide: DerivativeTable | None = None
        self._build()

    def __repr__(self) -> str:
        kind = "bookkept" if self.bookkept else "plain"
        return f"DerivativeTable({kind}, nbk={self.nbk})"

    def widened(self) -> DerivativeTable:
        """The same table kept ``BRACKET_HEADROOM`` orders above ``nbk``."""
        if self.headroom:
            return self
        if self._wide is None:
            self._wide = DerivativeTable(
                self.params, self.bookkept, self.action, headroom=BRACKET_HEADROOM
            )
        return self._wide

    def _build(self) -> None:
        p = self.params
        m = partial(PoissonSeries.monomial, nbk=self.nbk)
        nu, nu1, L = p.nu, p.nu1, p.L_star

        one = m(1.0)
        if self.action is not None:
            lfac = m(1.0 / self.action)
        else:
            lfac = m(1.0 / L) + m(-1.0 / L**2, sigma=nu, dL=1)

        def eta_corr(power: int) -> PoissonSeries:
            # eta^power split as 1 + (eta^power - 1) sigma^2
            return one + m(1.0, sigma=2, eta=power) - m(1.0, sigma=2)

        inv_eta = eta_corr(-1)
        f_l = add_all(
            [
                one,
                m(2.0, sigma=1, trig=F_ONLY, e=1, eta=-3),
                m(1.0, sigma=2, eta=-3),
                m(-1.0, sigma=2),
                m(0.5, sigma=2, e=2, eta=-3),
                m(0.5, sigma=2, trig=TWO_F, e=2, eta=-3),
            ],
            self.nbk,
        )
        f_core = m(2.0, sigma=-1, trig=F_ONLY, parity=SIN, e=-1) + m(
            0.5, trig=TWO_F, parity=SIN
        )
        inv_is = {"is": -1}

        # e-factors include the sigma^-1 lost when d/de lowers an e power
        e_dl = lfac * (m(1.0, sigma=-2, e=-1) + m(1.0, e=-1, eta=2) - m(1.0, e=-1))
        e_G = -(lfac * (m(1.0, sigma=-2, e=-1) + m(1.0, e=-1, eta=1) - m(1.0, e=-1)))
        regular = lfac * (
            m(2.0, sigma=-1, trig=F_ONLY) * inv_eta
            + m(1.5, e=1, eta=-1)
            + m(0.5, trig=TWO_F, e=1, eta=-1)
        )

        factors: dict[str, PoissonSeries] = {
            "lfac": lfac,
            "f_l": f_l,
            "f_dL": lfac * f_core,
            "f_G": -(lfac * f_core * inv_eta),
            "e_dL": e_dl,
            "e_G": e_G,
            "eta_dL": -(lfac * eta_corr(1)),
            "eta_G": lfac,
            "ic_G": -(lfac * inv_eta * m(1.0, ic=1)),
            "is_G": lfac * inv_eta * (m(1.0, **inv_is) - m(1.0, **{"is": 1})),
            "ic_H": lfac * inv_eta,
            "is_H": -(lfac * inv_eta * m(1.0, ic=1, **inv_is)),
            "K": regular,
            "edl_fl": e_dl * f_l,
            "r1_E1": m(p.a1 * p.e1, sigma=nu1, trig=E1_ONLY, parity=SIN),
            "E1_M1": m(p.a1, r1=-1),
        }
        if self.circular:
            factors["T"] = one
        else:
            factors["T"] = m(p.a1, r1=-1) + m(-p.a1 * p.e1, sigma=nu1, trig=E1_ONLY, r1=-1)

        if not self.bookkept:
            factors = {name: _collapse(s) for name, s in factors.items()}
            factors["T"] = one
        for name, series in factors.items():
            setattr(self, name, series)

    # Factor attributes are set dynamically in _build; declared for type checkers.
    lfac: PoissonSeries
    f_l: PoissonSeries
    f_dL: PoissonSeries
    f_G: PoissonSeries
    e_dL: PoissonSeries
    e_G: PoissonSeries
    eta_dL: PoissonSeries
    eta_G: PoissonSeries
    ic_G: PoissonSeries
    is_G: PoissonSeries
    ic_H: PoissonSeries
    is_H: PoissonSeries
    K: PoissonSeries
    edl_fl: PoissonSeries
    r1_E1: PoissonSeries
    E1_M1: PoissonSeries
    T: PoissonSeries

    def times_t(self, series: PoissonSeries) -> PoissonSeries:
        """Multiply by the identity factor ``a1 (1 - e1 cos E1) / r1`` (skipped when one)."""
        if self.circular or not self.bookkept:
            return series
        return series * self.T


# ----------------------------------------------------------------------
# Derivatives
# ----------------------------------------------------------------------


def _phi_partial(series: PoissonSeries, table: DerivativeTable) -> PoissonSeries:
    """``dF/dphi1`` with the phi1 weight removed from sigma."""
    if table.bookkept:
        nu1 = table.params.nu1
        for (sigma, _, _, exps), coeff in series.items():
            k = exps[_PHI]
            if k > 0 and sigma < nu1 * k:
                raise NormalizationError(
                    f"phi1^{k} term at sigma^{sigma} lacks its sigma^{nu1 * k} weight "
                    f"(coefficient {coeff:.6e})"
                )
    return series.diff_symbol(_PHI).shift(-table.phi_shift)


def _d_dM1(series: PoissonSeries, table: DerivativeTable) -> PoissonSeries:
    d_e1 = series.diff_angle("E1")
    if table.circular:
        return d_e1
    d_phi = _phi_partial(series, table)
    inner = add_all([d_e1, series.diff_symbol(_R1) * table.r1_E1, d_phi], table.nbk)
    return inner * table.E1_M1 - d_phi


def derivative(series: PoissonSeries, var: str, table: DerivativeTable) -> PoissonSeries:
    """Partial derivative with respect to a canonical Delaunay variable.

    Args:
        series: Series in the closed-form representation.
        var: One of ``l, g, h, M1, dL, G, H, J1``.
        table: Chain-rule factors (book-kept or plain).

    Returns:
        The derivative as a series of the same truncation order.

    Raises:
        ConfigurationError: ``var`` is not a canonical variable.
    """
    nbk = table.nbk
    if var == "l":
        return table.times_t(series.diff_angle("f") * table.f_l)
    if var in ("g", "h"):
        return table.times_t(series.diff_angle(var))
    if var == "M1":
        return _d_dM1(series, table)
    if var == "dL":
        return add_all(
            [
                series.diff_angle("f") * table.f_dL,
                series.diff_symbol("dL"),
                series.diff_symbol("e") * table.e_dL,
                series.diff_symbol("eta") * table.eta_dL,
            ],
            nbk,
        )
    if var == "G":
        return add_all(
            [
                series.diff_angle("f") * table.f_G,
                series.diff_symbol("e") * table.e_G,
                series.diff_symbol("eta") * table.eta_G,
                series.diff_symbol("ic") * table.ic_G,
                series.diff_symbol("is") * table.is_G,
            ],
            nbk,
        )
    if var == "H":
        return series.diff_symbol("ic") * table.ic_H + series.diff_symbol("is") * table.is_H
    if var == "J1":
        return series.diff_symbol("J1")
    raise ConfigurationError(f"unknown canonical variable {var!r}; expected one of {VARIABLES}")


# ----------------------------------------------------------------------
# Poisson bracket
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class _Partials:
    """Pieces of one series that enter a bracket."""

    f: PoissonSeries
    g: PoissonSeries
    h: PoissonSeries
    e: PoissonSeries
    action_l: PoissonSeries
    action_g: PoissonSeries
    action_h: PoissonSeries
    e_combo: PoissonSeries
    stripped: PoissonSeries
    m1: PoissonSeries
    j1: PoissonSeries


def _is_regular(sigma: int, trig: TrigArg, exps: tuple[int, ...]) -> bool:
    return exps[_E] == 0 and trig.s1 == trig.s2


def _stripped(series: PoissonSeries) -> PoissonSeries:
    """Angle derivative of every harmonic without its integer multiplier."""
    out: dict[Key, float] = {}
    for (sigma, trig, parity, exps), coeff in series.items():
        if trig == ZERO_TRIG:
            continue
        if parity == COS:
            out[(sigma, trig, SIN, exps)] = -coeff
        else:
            out[(sigma, trig, COS, exps)] = coeff
    return PoissonSeries(out, series.nbk)


def _cross_weight(ta: Trig, tb: Trig) -> float:
    return float(ta[1] * tb[0] - ta[0] * tb[1])


def _partials(series: PoissonSeries, table: DerivativeTable) -> _Partials:
    nbk = table.nbk
    d_f = series.diff_angle("f")
    d_g = series.diff_angle("g")
    d_eta = series.diff_symbol("eta")
    d_ic = series.diff_symbol("ic")
    d_is = series.diff_symbol("is")

    # e-free harmonics of f + g: their f and g derivatives coincide, which lets the
    # 1/e factors of de/dL and de/dG combine into a regular expression
    regular = filter_terms(series, _is_regular)
    other = filter_terms(series, lambda s, t, e: not _is_regular(s, t, e))
    e_combo = add_all(
        [
            regular.diff_angle("f") * table.K,
            other.diff_angle("f") * table.edl_fl,
            other.diff_angle("g") * table.e_G,
        ],
        nbk,
    )
    return _Partials(
        f=d_f,
        g=d_g,
        h=series.diff_angle("h"),
        e=series.diff_symbol("e"),
        action_l=series.diff_symbol("dL") + d_eta * table.eta_dL,
        action_g=add_all([d_eta * table.eta_G, d_ic * table.ic_G, d_is * table.is_G], nbk),
        action_h=d_ic * table.ic_H + d_is * table.is_H,
        e_combo=e_combo,
        stripped=_stripped(series),
        m1=_d_dM1(series, table),
        j1=series.diff_symbol("J1"),
    )


def _bracket(a: _Partials, b: _Partials, table: DerivativeTable) -> PoissonSeries:
    nbk = table.nbk
    inner = add_all(
        [
            table.f_l * (a.f * b.action_l - b.f * a.action_l),
            b.e * a.e_combo - a.e * b.e_combo,
            table.f_G * mul_pairwise(a.stripped, b.stripped, _cross_weight),
            a.g * b.action_g - b.g * a.action_g,
            a.h * b.action_h - b.h * a.action_h,
        ],
        nbk,
    )
    return add_all([table.times_t(inner), a.m1 * b.j1 - b.m1 * a.j1], nbk)


def poisson_bracket(
    first: PoissonSeries, second: PoissonSeries, table: DerivativeTable
) -> PoissonSeries:
    """Canonical bracket ``{F1, F2} = sum_q dF1/dq dF2/dp - dF1/dp dF2/dq``.

    The ``df/dL`` contributions cancel identically between the two orderings and are
    never formed; the ``df/dG`` cross terms are paired harmonic by harmonic with their
    exact integer weight ``s2 s1' - s1 s2'``. Products are formed on the widened table and
    the result is truncated back to ``first.nbk``.
    """
    wide = table.widened()
    out = _bracket(
        _partials(first.truncate(wide.nbk), wide),
        _partials(second.truncate(wide.nbk), wide),
        wide,
    )
    return out.truncate(first.nbk)


# ----------------------------------------------------------------------
# Lie series
# ----------------------------------------------------------------------


def lie_increment(
    series: PoissonSeries, chi: PoissonSeries, table: DerivativeTable
) -> PoissonSeries:
    """``exp(L_chi) F - F`` truncated at ``series.nbk``, with ``L_chi F = {F, chi}``.

    Iterates ``term_n = {term_{n-1}, chi} / n`` on the widened table until a bracket comes
    back empty and truncates only the finished sum. Each bracket must eventually raise the
    minimum sigma order; more than ``nbk`` consecutive brackets without a gain mean the
    series cannot terminate.

    Raises:
        NormalizationError: ``chi`` has a term below sigma^1 or the iteration stalls.
    """
    if not chi or not series:
        return PoissonSeries.zero(series.nbk)
    _check_generator(chi)
    wide = table.widened()
    chi_parts = _partials(chi.truncate(wide.nbk), wide)
    first = _bracket(_partials(series.truncate(wide.nbk), wide), chi_parts, wide)
    return _lie_sum(first, chi_parts, wide).truncate(series.nbk)


def _check_generator(chi: PoissonSeries) -> None:
    lowest = chi.min_order()
    if lowest is not None and lowest < 1:
        raise NormalizationError(f"generating function has a sigma^{lowest} term")


def _lie_sum(first: PoissonSeries, chi_parts: _Partials, table: DerivativeTable) -> PoissonSeries:
    """``sum_n term_n`` with ``term_1 = first`` and ``term_n = {term_(n-1), chi} / n``."""
    nbk = first.nbk
    if not first:
        return first
    increments = [first]
    term = first
    last = first.min_order()
    stalled = 0
    depth = 2
    while True:
        term = _bracket(_partials(term, table), chi_parts, table).scale(1.0 / depth)
        if not term:
            break
        increments.append(term)
        order = term.min_order()
        logger.debug("lie depth %d: %d terms, min order %s", depth, len(term), order)
        if last is not None and order is not None and order <= last:
            stalled += 1
            if stalled > nbk + LIE_DEPTH_SLACK:
                raise NormalizationError(
                    f"Lie series does not terminate: no sigma gain after {stalled} brackets "
                    f"(min order stuck at {order})"
                )
        else:
            stalled = 0
        last = order
        depth += 1
    return add_all(increments, nbk)


# canonical coordinate -> (conjugate variable, sign of {q, chi} in terms of its partial)
_CONJUGATE: dict[str, tuple[str, float]] = {
    "l": ("dL", 1.0),
    "g": ("G", 1.0),
    "h": ("H", 1.0),
    "dL": ("l", -1.0),
    "G": ("g", -1.0),
    "H": ("h", -1.0),
}
COORDINATES: tuple[str, ...] = tuple(_CONJUGATE)


def coordinate_increment(
    coordinate: str, chi: PoissonSeries, table: DerivativeTable
) -> PoissonSeries:
    """``exp(L_chi) q - q`` for a canonical coordinate ``q``.

    The coordinate itself is not a series, but ``{q, chi}`` is a partial derivative of
    ``chi``, so every term of the Lie series from the first bracket on is.

    Raises:
        ConfigurationError: ``coordinate`` is not one of ``l, g, h, dL, G, H``.
    """
    if coordinate not in _CONJUGATE:
        raise ConfigurationError(
            f"unknown canonical coordinate {coordinate!r}; expected one of {COORDINATES}"
        )
    if not chi:
        return PoissonSeries.zero(chi.nbk)
    _check_generator(chi)
    var, sign = _CONJUGATE[coordinate]
    wide = table.widened()
    wide_chi = chi.truncate(wide.nbk)
    first = derivative(wide_chi, var, wide).scale(sign)
    return _lie_sum(first, _partials(wide_chi, wide), wide).truncate(chi.nbk)


def lie_transform(
    series: PoissonSeries,
    chi: PoissonSeries,
    table: DerivativeTable,
    nbk: int | None = None,
) -> PoissonSeries:
    """``exp(L_chi) F`` truncated at ``nbk``.

    The inverse transform is ``lie_transform(F, -chi)``.
    """
    out = series + lie_increment(series, chi, table)
    if nbk is not None and nbk < out.nbk:
        out = out.truncate(nbk)
    return out


# ----------------------------------------------------------------------
# Structural helpers used by the normalizer
# ----------------------------------------------------------------------


def substitute_phi1(series: PoissonSeries, e1: float) -> PoissonSeries:
    """Replace ``phi1^k`` by ``(e1 sin E1)^k``; both carry the same sigma weight."""
    nbk = series.nbk
    by_power: dict[int, list[tuple[float, int, Trig, int, tuple[int, ...]]]] = {}
    for coeff, sigma, trig, parity, exps in series.raw():
        k = exps[_PHI]
        stripped = exps[:_PHI] + (0,) + exps[_PHI + 1 :]
        by_power.setdefault(k, []).append((coeff, sigma, trig, parity, stripped))
    if set(by_power) <= {0}:
        return series

    sin_e1 = PoissonSeries.monomial(e1, nbk, trig=E1_ONLY, parity=SIN)
    parts: list[PoissonSeries] = []
    power = PoissonSeries.constant(1.0, nbk)
    for k in range(max(by_power) + 1):
        if k in by_power:
            parts.append(canonicalize(by_power[k], nbk) * power)
        power = power * sin_e1
    return add_all(parts, nbk)


def regularity_violations(
    series: PoissonSeries, tolerance: float = RESIDUE_TOLERANCE
) -> list[str]:
    """Terms breaking the d'Alembert form: negative ``e`` powers, or e-free ``s1 != s2``.

    Terms below ``tolerance`` times the largest coefficient are ignored.
    """
    floor = tolerance * series.max_abs()
    problems: list[str] = []
    for term in series.terms():
        if abs(term.coeff) <= floor:
            continue
        e_power = term.exponents[_E]
        if e_power < 0:
            problems.append(f"e^{e_power} in {term.coeff:.3e} sigma^{term.sigma} {term.trig}")
        elif e_power == 0 and term.trig.s1 != term.trig.s2:
            problems.append(f"e-free s1 != s2 in {term.coeff:.3e} sigma^{term.sigma} {term.trig}")
    return problems


def check_regularity(series: PoissonSeries, label: str) -> None:
    """Raise :class:`NormalizationError` when :func:`regularity_violations` finds any."""
    problems = regularity_violations(series)
    if problems:
        shown = "; ".join(problems[:3])
        raise NormalizationError(f"{label}: {len(problems)} irregular terms ({shown})")
