"""Tests for remainder bounds, grid maps, FLI and the comparison curves."""

from __future__ import annotations

import math

import numpy as np
import pytest

from closed_r3bp.config import OCTUPOLE_HARMONICS
from closed_r3bp.diagnostics import (
    comparison_curves,
    divisor_scan,
    fli,
    fli_cell,
    fli_history,
    hill_eccentricity,
    jacobi_at_l1,
    jacobi_from_elements,
    lagrange_l1,
    mean_motion,
    optimal_order,
    remainder_bound,
    remainder_bounds,
    remainder_cell,
    remainder_map,
    resonance_locations,
    run_grid,
    secular_boundary,
    symbol_bounds,
)
from closed_r3bp.exceptions import DomainError
from closed_r3bp.hamiltonian import build_prepared
from closed_r3bp.models import CellStatus, GridCell, GridMap, RunConfig
from closed_r3bp.normalizer import normalize
from closed_r3bp.propagator import elements_to_cartesian, initial_state
from closed_r3bp.series import PoissonSeries


def log_grid(columns, e_values=(0.1, 0.2, 0.3), a_values=None):
    """GridMap of log10 values given column by column."""
    a_values = a_values or [10.0 * (k + 1) for k in range(len(columns))]
    cells = [[GridCell(value=col[row]) for col in columns] for row in range(len(e_values))]
    return GridMap(a_values=a_values, e_values=list(e_values), cells=cells)


# ── remainder bound ──────────────────────────────────────────────


class TestRemainderBound:
    def test_by_hand(self, toy_params):
        p = toy_params
        m = PoissonSeries.monomial
        series = m(2.0, p.nbk, sigma=3, e=2, r1=-1) + m(
            -1.0, p.nbk, sigma=4, trig=(1, 1, 0, 0), dL=1, eta=-3
        )
        eta = math.sqrt(1.0 - p.e_star**2)
        first = 2.0 * p.e_star**2 / (p.a1 * (1.0 - p.e1))
        second = p.mu * p.L_star / eta**3
        assert remainder_bound(series, p) == pytest.approx(first + second)
        assert remainder_bound(series, p, 4) == pytest.approx(second)
        assert remainder_bound(series, p, delta_l=0.0) == pytest.approx(first)

    def test_empty(self, toy_params):
        assert remainder_bound(PoissonSeries.zero(toy_params.nbk), toy_params) == 0.0

    def test_symbol_bounds(self, toy_params):
        bounds = symbol_bounds(toy_params, delta_l=0.5)
        assert bounds["dL"] == (0.5, 0.5)
        assert bounds["r1"][0] > bounds["r1"][1]

    def test_bounds_per_step(self, toy_result):
        bounds = remainder_bounds(toy_result)
        assert len(bounds) == 3
        assert bounds[0] == pytest.approx(
            remainder_bound(toy_result.remainders[0], toy_result.params)
        )
        assert 0 <= optimal_order(toy_result) <= 2


class TestOptimalOrder:
    def test_minimum(self):
        assert optimal_order([3.0, 2.0, 0.5, 0.7]) == 2

    def test_tie_prefers_fewer_steps(self):
        assert optimal_order([3.0, 1.0, 1.0, 2.0]) == 1

    def test_non_finite_ignored(self):
        assert optimal_order([5.0, math.nan, 2.0, math.inf]) == 2
        assert optimal_order([math.nan, math.inf]) == 0


# ── secular boundary ─────────────────────────────────────────────


class TestSecularBoundary:
    def test_interpolated_crossing(self):
        grid = log_grid([[-4.0, -3.0, -1.0]])
        [point] = secular_boundary(grid, threshold=1e-2)
        assert point.a == 10.0
        assert point.e == pytest.approx(0.25)

    def test_never_crosses(self):
        [point] = secular_boundary(log_grid([[-5.0, -5.0, -5.0]]))
        assert point.e is None

    def test_above_at_lowest_eccentricity(self):
        [point] = secular_boundary(log_grid([[0.0, 1.0, 2.0]]))
        assert point.e == 0.1

    def test_non_finite_cell(self):
        [point] = secular_boundary(log_grid([[-5.0, math.inf, -5.0]]))
        assert point.e == 0.2

    def test_vanishing_remainder_is_below(self):
        [point] = secular_boundary(log_grid([[-math.inf, -math.inf, -5.0]]))
        assert point.e is None

    def test_crossing_after_vanishing_remainder(self):
        [point] = secular_boundary(log_grid([[-math.inf, 0.0, 1.0]]))
        assert point.e == 0.2

    def test_nan_cell_is_above(self):
        [point] = secular_boundary(log_grid([[-5.0, -5.0, math.nan]]))
        assert point.e == 0.3

    def test_linear_quantity(self):
        grid = log_grid([[0.0, 2.0, 4.0]]).model_copy(update={"quantity": "fli"})
        [point] = secular_boundary(grid, threshold=1.0)
        assert point.e == pytest.approx(0.15)


# ── grids ────────────────────────────────────────────────────────


class TestRunGrid:
    def test_failing_cell_is_isolated(self):
        seen = []

        def cell(a, e):
            if a == 2.0:
                raise RuntimeError("boom")
            return GridCell(value=a * e)

        grid = run_grid(
            [1.0, 2.0],
            [0.1, 0.2],
            cell,
            workers=2,
            quantity="test",
            on_cell=lambda row, col, c: seen.append((row, col)),
        )
        assert sorted(seen) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert grid.cells[1][0].value == pytest.approx(0.2)
        assert grid.cells[0][1].status is CellStatus.aborted
        assert grid.cells[0][1].message == "boom"

    @pytest.mark.parametrize("axis", [[], [2.0, 1.0]])
    def test_bad_axis(self, axis):
        with pytest.raises(DomainError):
            run_grid(axis, [0.1], lambda a, e: GridCell(), quantity="test")

    def test_remainder_cell_outside_domain(self):
        cell = remainder_cell(RunConfig(), 5.0, 0.1)
        assert cell.status is CellStatus.aborted
        assert "a1" in cell.message

    def test_remainder_cell(self):
        config = RunConfig(k_mu=2, k_mp=2, step_cap=2)
        cell = remainder_cell(config, 30.0, 0.05)
        assert cell.status is CellStatus.ok
        assert math.isfinite(cell.value)
        assert 0 <= cell.j_opt <= 2

    def test_remainder_cell_resonance(self):
        config = RunConfig(k_mu=2, k_mp=2, step_cap=2, divisor_threshold=1e6)
        cell = remainder_cell(config, 30.0, 0.05)
        assert cell.status is CellStatus.resonance
        assert cell.j_opt == 0

    @pytest.mark.slow
    def test_map_matches_single_cells(self):
        config = RunConfig(k_mu=2, k_mp=2, step_cap=2, workers=2)
        a_values, e_values = [20.0, 30.0], [0.05, 0.1]
        grid = remainder_map(a_values, e_values, config)
        again = remainder_map(a_values, e_values, config)
        assert grid == again
        for row, e in enumerate(e_values):
            for col, a in enumerate(a_values):
                assert grid.cells[row][col] == remainder_cell(config, a, e)


# ── optimal orders of the planar circular problem ────────────────


@pytest.mark.slow
class TestOptimalOrderReproduction:
    def _bounds(self, make_params, **kwargs):
        params = make_params(e1=0.0, planar=True, circular=True, **kwargs)
        return remainder_bounds(normalize(build_prepared(params)))

    def test_moderate_eccentricity(self, make_params):
        bounds = self._bounds(make_params, a_star=20.0, e_star=0.4, k_mp=3)
        assert optimal_order(bounds) == 6

    def test_high_eccentricity(self, make_params):
        bounds = self._bounds(make_params, a_star=30.0, e_star=0.5, k_mp=3)
        assert optimal_order(bounds) == 10

    def test_near_secondary(self, make_params):
        bounds = self._bounds(make_params, a_star=8.0, e_star=0.1, k_mu=3, k_mp=5)
        assert all(b1 < b0 for b0, b1 in zip(bounds[:7], bounds[1:7]))


@pytest.mark.slow
class TestResonanceDip:
    """The boundary comes down at the 3:2 and 2:1 mean-motion resonances."""

    def test_boundary_dips_at_resonances(self, planar_params):
        places = {(s1, s2): a for s1, s2, a in resonance_locations(planar_params)}
        a_32, a_21 = places[(3, 2)], places[(2, 1)]
        config = RunConfig(k_mu=2, k_mp=3, step_cap=4, workers=2)
        grid = remainder_map([a_32, 7.8, a_21], [0.05, 0.15], config)
        resonant, calm = (0, 2), 1

        for row in grid.cells:
            assert row[calm].status is CellStatus.ok
            for col in resonant:
                assert row[col].status is CellStatus.resonance
                assert row[col].value > row[calm].value

        calm_peak = max(row[calm].value for row in grid.cells)
        boundary = secular_boundary(grid, threshold=10 ** (calm_peak + 0.01))
        assert boundary[calm].e is None
        assert all(boundary[col].e is not None for col in resonant)


# ── FLI ──────────────────────────────────────────────────────────


class TestFLI:
    def test_history_is_monotone(self, planar_params):
        p = planar_params
        state = elements_to_cartesian(initial_state(30.0, 0.05), p.gm0)
        times, history = fli_history(state, 2 * p.period1, p, samples=20)
        assert len(times) == len(history) == 20
        assert np.all(np.diff(history) >= 0.0)
        assert np.all(np.isfinite(history))
        assert history[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_span(self, planar_params):
        state = elements_to_cartesian(initial_state(30.0, 0.05), planar_params.gm0)
        assert fli(state, 0.0, planar_params) == 0.0

    def test_cell(self, planar_params):
        config = RunConfig(planar=True, circular=True, fli_periods=1.0)
        cell = fli_cell(config, planar_params, 30.0, 0.05)
        assert cell.status is CellStatus.ok
        assert math.isfinite(cell.value)


# ── comparison curves ────────────────────────────────────────────


class TestCurves:
    def test_collinear_point(self, planar_params):
        p = planar_params
        x = lagrange_l1(p)
        assert 0.0 < x < p.a1
        assert p.a1 - x == pytest.approx(p.hill_radius, rel=0.1)

    def test_collinear_point_needs_secondary(self, planar_params):
        with pytest.raises(DomainError):
            lagrange_l1(planar_params.model_copy(update={"mu": 0.0}))

    def test_hill_eccentricity(self, planar_params):
        p = planar_params
        c_l1 = jacobi_at_l1(p)
        previous = 0.0
        for a in (8.0, 12.0, 20.0):
            e = hill_eccentricity(a, p, c_l1)
            assert previous < e < 1.0
            assert jacobi_from_elements(a, e, p) == pytest.approx(c_l1, rel=1e-10)
            previous = e

    def test_curves(self, planar_params):
        points = comparison_curves([8.0, 20.0], planar_params)
        assert [pt.a for pt in points] == [8.0, 20.0]
        assert points[0].e_crossing == pytest.approx(1.0 - planar_params.a1 / 8.0)
        assert points[1].e_hill > points[0].e_hill

    def test_curves_need_exterior_orbits(self, planar_params):
        with pytest.raises(DomainError):
            comparison_curves([5.0], planar_params)


# ── divisors ─────────────────────────────────────────────────────


class TestDivisors:
    def test_resonance_locations(self, planar_params):
        places = {(s1, s2): a for s1, s2, a in resonance_locations(planar_params)}
        assert places[(2, 1)] == pytest.approx(8.26, abs=0.01)
        assert places[(5, 2)] == pytest.approx(9.58, abs=0.01)
        assert all(s2 > 0 for s1, s2 in places)

    def test_sorted(self, planar_params):
        a_values = [a for _, _, a in resonance_locations(planar_params)]
        assert a_values == sorted(a_values)

    def test_scan_vanishes_at_resonance(self, planar_params):
        a_21 = dict(((s1, s2), a) for s1, s2, a in resonance_locations(planar_params))[(2, 1)]
        scan = divisor_scan([a_21, 15.0], planar_params)
        assert scan.shape == (2, len(OCTUPOLE_HARMONICS))
        column = OCTUPOLE_HARMONICS.index((2, 1))
        assert scan[0, column] == pytest.approx(0.0, abs=1e-12)
        assert scan[1, column] > 0.1

    def test_mean_motion(self, planar_params):
        assert mean_motion(1.0, planar_params) == pytest.approx(2 * math.pi)
