"""Tests for the closed-form Poisson algebra."""

from __future__ import annotations

import pytest

from closed_r3bp.algebra import (
    COORDINATES,
    DerivativeTable,
    check_regularity,
    coordinate_increment,
    derivative,
    lie_increment,
    lie_transform,
    poisson_bracket,
    regularity_violations,
    substitute_phi1,
)
from closed_r3bp.config import BRACKET_HEADROOM
from closed_r3bp.exceptions import ConfigurationError, NormalizationError
from closed_r3bp.propagator import delaunay_point
from closed_r3bp.series import PoissonSeries

STEP = 1e-6
ACTIONS = ("dL", "G", "H")
ANGLES = ("l", "g", "h")


def value(series, d, params):
    return series.evaluate(*delaunay_point(d, params))


def numeric_partial(series, d, params, var):
    """Central difference of ``series`` along one Delaunay variable."""
    plus = d._replace(**{var: getattr(d, var) + STEP})
    minus = d._replace(**{var: getattr(d, var) - STEP})
    return (value(series, plus, params) - value(series, minus, params)) / (2 * STEP)


def numeric_bracket(first, second, d, params):
    total = 0.0
    for q, p in zip(ANGLES, ACTIONS):
        total += numeric_partial(first, d, params, q) * numeric_partial(second, d, params, p)
        total -= numeric_partial(first, d, params, p) * numeric_partial(second, d, params, q)
    return total


@pytest.fixture
def plain(toy_params, delaunay_state):
    """Plain table with the exact 1/L of ``delaunay_state``."""
    return DerivativeTable(
        toy_params, bookkept=False, action=toy_params.L_star + delaunay_state.dL
    )


def series_a(nbk):
    m = PoissonSeries.monomial
    return (
        m(0.7, nbk, trig=(2, 2, 0, 0), e=2, eta=-3)
        + m(0.3, nbk, trig=(1, 0, 0, 0), e=1, ic=2)
        + m(-0.2, nbk, trig=(1, 1, 0, 0), parity="sin")
        + m(0.1, nbk, dL=2)
    )


def series_b(nbk):
    m = PoissonSeries.monomial
    return (
        m(0.5, nbk, trig=(0, 2, 2, 0), **{"is": 2})
        + m(-0.4, nbk, trig=(1, 1, 0, 0), eta=-1)
        + m(0.25, nbk, trig=(0, 1, 0, 0), e=1, ic=1, dL=1)
    )


def slow_series(nbk):
    """Three functions of ``(g, h, G, H)`` only; a fixed ``L`` is then exact."""
    m = PoissonSeries.monomial
    return (
        m(0.7, nbk, trig=(0, 2, 1, 0), e=2, eta=-3) + m(0.3, nbk, trig=(0, 1, 0, 0), e=1, ic=2),
        m(0.5, nbk, trig=(0, 2, 2, 0), **{"is": 2})
        + m(-0.4, nbk, trig=(0, 1, -1, 0), parity="sin", eta=-1),
        m(0.9, nbk, trig=(0, 1, 1, 0), e=2) + m(0.6, nbk, eta=-2, ic=2),
    )


def h_generator(coeff, nbk, sigma=2):
    """Generator in ``h`` and ``ic``; brackets with it never lower sigma."""
    return PoissonSeries.monomial(coeff, nbk, sigma=sigma, trig=(0, 0, 1, 0), parity="sin", ic=1)


# ── derivatives ──────────────────────────────────────────────────


class TestDerivative:
    @pytest.mark.parametrize("var", ["l", "g", "h", "dL", "G", "H"])
    def test_matches_finite_difference(self, var, toy_params, plain, delaunay_state):
        s = series_a(toy_params.nbk) + series_b(toy_params.nbk)
        analytic = value(derivative(s, var, plain), delaunay_state, toy_params)
        numeric = numeric_partial(s, delaunay_state, toy_params, var)
        assert analytic == pytest.approx(numeric, rel=1e-6, abs=1e-9)

    def test_j1_derivative(self, toy_params, plain):
        s = PoissonSeries.monomial(3.0, toy_params.nbk, J1=1)
        assert derivative(s, "J1", plain).coefficient() == 3.0

    def test_unknown_variable(self, toy_params, plain):
        with pytest.raises(ConfigurationError):
            derivative(series_a(toy_params.nbk), "x", plain)

    def test_phi1_needs_sigma_weight(self, toy_params):
        table = DerivativeTable(toy_params)
        ok = PoissonSeries.monomial(1.0, toy_params.nbk, sigma=2, phi1=2, r1=-1)
        assert derivative(ok, "M1", table)
        light = PoissonSeries.monomial(1.0, toy_params.nbk, sigma=1, phi1=2, r1=-1)
        with pytest.raises(NormalizationError, match="weight"):
            derivative(light, "M1", table)

    def test_action_only_on_plain_table(self, toy_params):
        with pytest.raises(ConfigurationError):
            DerivativeTable(toy_params, action=1.0)

    def test_identity_factor(self, toy_params):
        table = DerivativeTable(toy_params)
        s = PoissonSeries.monomial(1.0, toy_params.nbk, sigma=1, e=1)
        out = table.times_t(s)
        assert out.coefficient(sigma=1, e=1, r1=-1) == pytest.approx(toy_params.a1)

    def test_circular_identity_factor_is_one(self, planar_params):
        table = DerivativeTable(planar_params)
        s = PoissonSeries.monomial(1.0, planar_params.nbk, sigma=1, e=1)
        assert table.times_t(s) == s


# ── Poisson bracket ──────────────────────────────────────────────


class TestPoissonBracket:
    def test_matches_finite_difference(self, toy_params, plain, delaunay_state):
        a, b = series_a(toy_params.nbk), series_b(toy_params.nbk)
        analytic = value(poisson_bracket(a, b, plain), delaunay_state, toy_params)
        numeric = numeric_bracket(a, b, delaunay_state, toy_params)
        assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-9)

    def test_antisymmetry(self, toy_params):
        table = DerivativeTable(toy_params)
        a = series_a(toy_params.nbk).shift(1)
        b = series_b(toy_params.nbk).shift(1)
        total = poisson_bracket(a, b, table) + poisson_bracket(b, a, table)
        assert total.max_abs() <= 1e-12 * poisson_bracket(a, b, table).max_abs()

    def test_jacobi_identity(self, toy_params, plain, delaunay_state):
        a, b, c = slow_series(toy_params.nbk)

        def br(x, y):
            return poisson_bracket(x, y, plain)

        terms = [br(br(a, b), c), br(br(b, c), a), br(br(c, a), b)]
        values = [value(t, delaunay_state, toy_params) for t in terms]
        scale = max(abs(v) for v in values)
        assert abs(sum(values)) <= 1e-9 * scale

    def test_bracket_with_action(self, toy_params, plain, delaunay_state):
        # {F, dL} = dF/dl
        s = series_a(toy_params.nbk)
        dl = PoissonSeries.monomial(1.0, toy_params.nbk, dL=1)
        lhs = value(poisson_bracket(s, dl, plain), delaunay_state, toy_params)
        rhs = value(derivative(s, "l", plain), delaunay_state, toy_params)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_low_orders_independent_of_nbk(self, toy_params):
        # factors of sigma^-1 and sigma^-2 pull products above nbk back into range
        wider = toy_params.model_copy(update={"k_mu": 3, "nbk": 6})
        a = series_a(toy_params.nbk).shift(2)
        b = series_b(toy_params.nbk).shift(3)
        narrow = poisson_bracket(a, b, DerivativeTable(toy_params))
        wide = poisson_bracket(a.truncate(6), b.truncate(6), DerivativeTable(wider)).truncate(
            toy_params.nbk
        )
        assert narrow.max_order() == toy_params.nbk
        assert (narrow - wide).max_abs() <= 1e-10 * narrow.max_abs()

    def test_widened_table(self, toy_params):
        table = DerivativeTable(toy_params)
        wide = table.widened()
        assert wide.nbk == toy_params.nbk + BRACKET_HEADROOM
        assert table.widened() is wide
        assert wide.widened() is wide
        assert table.nbk == toy_params.nbk


# ── Lie series ───────────────────────────────────────────────────


class TestLieSeries:
    def test_empty_generator(self, toy_params):
        table = DerivativeTable(toy_params)
        s = series_a(toy_params.nbk)
        assert not lie_increment(s, PoissonSeries.zero(toy_params.nbk), table)
        assert lie_transform(s, PoissonSeries.zero(toy_params.nbk), table) == s

    def test_generator_must_start_at_order_one(self, toy_params):
        table = DerivativeTable(toy_params)
        chi = PoissonSeries.monomial(1.0, toy_params.nbk, trig=(1, 0, 0, 0), parity="sin")
        with pytest.raises(NormalizationError):
            lie_increment(series_a(toy_params.nbk), chi, table)

    def test_increment_starts_with_bracket(self, toy_params):
        table = DerivativeTable(toy_params)
        nbk = toy_params.nbk
        chi = h_generator(1e-8, nbk)
        s = PoissonSeries.monomial(1.0, nbk, sigma=1, trig=(0, 2, 2, 0), ic=2, **{"is": 2})
        inc = lie_increment(s, chi, table)
        first = poisson_bracket(s, chi, table)
        assert inc.min_order() >= 3
        assert (inc - first).max_abs() <= 1e-6 * first.max_abs()

    def test_inverse_transform(self, toy_params):
        table = DerivativeTable(toy_params)
        nbk = toy_params.nbk
        chi = h_generator(1e-2, nbk)
        s = series_b(nbk).shift(1)
        back = lie_transform(lie_transform(s, chi, table), -chi, table)
        assert (back - s).max_abs() <= 1e-12 * s.max_abs()

    def test_coordinate_increment_first_order(self, toy_params):
        table = DerivativeTable(toy_params)
        chi = PoissonSeries.monomial(0.5, toy_params.nbk, sigma=3, trig=(0, 1, 0, 0), parity="sin")
        # {G, chi} = -dchi/dg; higher brackets vanish above nbk
        inc = coordinate_increment("G", chi, table)
        assert inc == derivative(chi, "g", table).scale(-1.0)
        assert not coordinate_increment("H", chi, table)

    def test_coordinates(self, toy_params):
        table = DerivativeTable(toy_params)
        assert set(COORDINATES) == {"l", "g", "h", "dL", "G", "H"}
        with pytest.raises(ConfigurationError):
            coordinate_increment("M1", PoissonSeries.zero(toy_params.nbk), table)


# ── structural helpers ───────────────────────────────────────────


class TestStructure:
    def test_substitute_phi1(self, toy_params):
        nbk = toy_params.nbk
        s = PoissonSeries.monomial(2.0, nbk, sigma=2, phi1=2, r1=-1)
        out = substitute_phi1(s, 0.1)
        # 2 (0.1 sin E1)^2 = 0.01 (1 - cos 2E1)
        assert out.coefficient(sigma=2, r1=-1) == pytest.approx(0.01)
        assert out.coefficient(sigma=2, trig=(0, 0, 0, 2), r1=-1) == pytest.approx(-0.01)

    def test_regularity(self, toy_params):
        nbk = toy_params.nbk
        good = PoissonSeries.monomial(1.0, nbk, trig=(1, 1, 0, 0))
        assert regularity_violations(good) == []
        bad_e = PoissonSeries.monomial(1.0, nbk, e=-1)
        bad_dalembert = PoissonSeries.monomial(1.0, nbk, trig=(2, 0, 0, 0))
        assert len(regularity_violations(bad_e + bad_dalembert)) == 2
        with pytest.raises(NormalizationError, match="chi"):
            check_regularity(bad_e, "chi")
