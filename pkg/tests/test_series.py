"""Tests for the Poisson series kernel."""

from __future__ import annotations

import math

import pytest

from closed_r3bp.exceptions import ConfigurationError, EvaluationError, SingularEvaluationError
from closed_r3bp.series import (
    COS,
    SIN,
    PoissonSeries,
    TrigArg,
    add,
    at_order,
    canonicalize,
    dumps,
    exponents,
    filter_terms,
    is_fast,
    loads,
    mul,
)

NBK = 4
POINT = {"dL": 0.02, "e": 0.3, "eta": math.sqrt(1 - 0.09), "ic": 0.8, "is": 0.6,
         "phi1": 0.04, "r1": 5.1, "J1": 0.0}  # fmt: skip
ANGLES = (0.7, 1.9, -0.4, 2.2)


def m(coeff, **kwargs):
    return PoissonSeries.monomial(coeff, NBK, **kwargs)


@pytest.fixture
def sample():
    return (
        m(1.5, sigma=1, trig=(1, 1, 0, 0), e=1)
        + m(-0.25, sigma=2, trig=(2, 0, 0, -1), parity="sin", e=2, r1=-1)
        + m(0.5, ic=2, eta=-3)
    )


# ── canonical form ───────────────────────────────────────────────


class TestCanonicalForm:
    def test_negative_leading_multiplier_flips_sine(self):
        s = m(1.0, trig=(-1, 2, 0, 0), parity="sin", e=1)
        [((_, trig, parity, _), coeff)] = list(s.items())
        assert trig == (1, -2, 0, 0)
        assert parity == SIN
        assert coeff == -1.0
        assert s.coefficient(trig=(-1, 2, 0, 0), parity="sin", e=1) == 1.0

    def test_cosine_is_even(self):
        s = m(2.0, trig=(0, -3, 0, 1))
        assert s.coefficient(trig=(0, 3, 0, -1)) == 2.0
        assert all(t.trig.is_canonical for t in s)

    def test_sine_of_zero_is_dropped(self):
        assert not m(1.0, parity="sin", e=1)

    def test_sigma_truncation(self):
        assert not m(1.0, sigma=NBK + 1)
        assert len(m(1.0, sigma=NBK)) == 1

    def test_merging_and_purge(self, sample):
        assert not (sample - sample)
        doubled = canonicalize(sample.raw() + sample.raw(), NBK)
        assert doubled == sample * 2

    def test_cancellation_below_round_off_is_purged(self):
        s = canonicalize([(1.0, 0, (0, 0, 0, 0), COS, exponents()),
                          (-1.0 + 1e-15, 0, (0, 0, 0, 0), COS, exponents())], NBK)  # fmt: skip
        assert not s

    def test_small_coefficient_next_to_large_one_is_kept(self):
        s = m(1.0, e=1) + m(1e-20, ic=1)
        assert len(s) == 2
        assert s.coefficient(ic=1) == 1e-20

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_coefficient_raises(self, bad):
        with pytest.raises(EvaluationError, match=r"non-finite .* sigma\^1 e\^1 cos\(1,0,0,0\)"):
            canonicalize([(bad, 1, (1, 0, 0, 0), COS, exponents(e=1))], NBK)

    def test_overflowing_sum_raises(self):
        big = m(1e308, e=1)
        with pytest.raises(EvaluationError, match="non-finite"):
            add(big, big)

    def test_overflowing_product_raises(self):
        with pytest.raises(EvaluationError, match="non-finite"):
            mul(m(1e200, e=1), m(1e200, ic=1))

    def test_unknown_symbol(self):
        with pytest.raises(ConfigurationError):
            exponents(x=1)

    def test_deterministic_order(self, sample):
        keys = [k for k, _ in sample.items()]
        assert keys == sorted(keys)

    def test_trig_arg_str(self):
        assert str(TrigArg(1, -1, 0, 2, SIN)) == "sin(1,-1,0,2)"


# ── arithmetic ───────────────────────────────────────────────────


class TestArithmetic:
    def test_cos_squared(self):
        c = m(1.0, trig=(1, 0, 0, 0))
        sq = mul(c, c)
        assert sq.coefficient() == pytest.approx(0.5)
        assert sq.coefficient(trig=(2, 0, 0, 0)) == pytest.approx(0.5)
        assert len(sq) == 2

    def test_sin_times_cos(self):
        s = m(1.0, trig=(1, 0, 0, 0), parity="sin")
        c = m(1.0, trig=(1, 0, 0, 0))
        prod = s * c
        assert len(prod) == 1
        assert prod.coefficient(trig=(2, 0, 0, 0), parity="sin") == pytest.approx(0.5)

    def test_product_adds_exponents_and_sigma(self):
        prod = m(2.0, sigma=1, e=1, r1=-1) * m(3.0, sigma=2, e=2)
        assert prod.coefficient(sigma=3, e=3, r1=-1) == 6.0

    def test_product_truncates(self):
        assert not (m(1.0, sigma=3) * m(1.0, sigma=2))

    def test_product_matches_numeric_product(self, sample):
        other = m(0.3, sigma=1, trig=(0, 1, -1, 1), parity="sin", dL=1) + m(1.1, **{"is": 2})
        prod = sample * other
        expected = sample.evaluate(POINT, ANGLES) * other.evaluate(POINT, ANGLES)
        assert prod.evaluate(POINT, ANGLES) == pytest.approx(expected, rel=1e-13)

    def test_nbk_mismatch(self):
        with pytest.raises(ConfigurationError):
            add(m(1.0), PoissonSeries.monomial(1.0, NBK + 1))

    def test_scale_by_zero(self, sample):
        assert not sample.scale(0.0)

    def test_shift(self):
        assert m(1.0, sigma=1, e=1).shift(2).coefficient(sigma=3, e=1) == 1.0


# ── derivatives and filters ──────────────────────────────────────


class TestDerivatives:
    def test_diff_angle(self):
        d = m(1.0, trig=(2, 0, 0, 0)).diff_angle("f")
        assert d.coefficient(trig=(2, 0, 0, 0), parity="sin") == -2.0

    def test_diff_angle_numeric(self, sample):
        h = 1e-6
        plus = (ANGLES[0], ANGLES[1] + h, ANGLES[2], ANGLES[3])
        minus = (ANGLES[0], ANGLES[1] - h, ANGLES[2], ANGLES[3])
        numeric = (sample.evaluate(POINT, plus) - sample.evaluate(POINT, minus)) / (2 * h)
        assert sample.diff_angle("g").evaluate(POINT, ANGLES) == pytest.approx(numeric, rel=1e-7)

    def test_diff_symbol(self):
        d = m(3.0, e=2, r1=-1).diff_symbol("r1")
        assert d.coefficient(e=2, r1=-2) == -3.0

    def test_filter_and_order(self, sample):
        fast = filter_terms(sample, lambda s, t, e: is_fast(t.multipliers))
        assert len(fast) == 2
        assert len(at_order(sample, 2)) == 1
        assert sample.min_order() == 0
        assert sample.max_order() == 2


# ── evaluation ───────────────────────────────────────────────────


class TestEvaluate:
    def test_value(self):
        s = m(2.0, trig=(1, 1, 0, 0), e=2, r1=-1)
        expected = 2.0 * 0.3**2 / 5.1 * math.cos(0.7 + 1.9)
        assert s.evaluate(POINT, ANGLES) == pytest.approx(expected)

    def test_angles_by_name(self, sample):
        named = dict(zip(("f", "g", "h", "E1"), ANGLES))
        assert sample.evaluate(POINT, named) == sample.evaluate(POINT, ANGLES)

    def test_empty_series(self):
        assert PoissonSeries.zero(NBK).evaluate({}) == 0.0

    def test_missing_symbol(self, sample):
        with pytest.raises(EvaluationError, match="ic"):
            sample.evaluate({"e": 0.1, "eta": 0.99, "r1": 5.0}, ANGLES)

    def test_singular(self):
        with pytest.raises(SingularEvaluationError):
            m(1.0, e=-1).evaluate({"e": 0.0})

    def test_bad_angle_shape(self, sample):
        with pytest.raises(EvaluationError):
            sample.evaluate(POINT, (0.1, 0.2))


# ── text format ──────────────────────────────────────────────────


class TestTextFormat:
    def test_round_trip_is_exact(self, sample):
        text = dumps(sample)
        assert text.startswith(f"# nbk {NBK}\n")
        assert loads(text) == sample

    def test_dump_is_stable(self, sample):
        assert dumps(loads(dumps(sample))) == dumps(sample)

    def test_missing_header(self):
        with pytest.raises(ConfigurationError, match="nbk"):
            loads("1.0 0 cos(0,0,0,0)\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            loads("# nbk 2\nnot a term\n")
