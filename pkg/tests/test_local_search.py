import math

import numpy as np
import pytest

from gpdevopt.boxes import SearchBox, if_beta_box
from gpdevopt.global_search import lhd_maximin
from gpdevopt.gp import DesignSet, DevianceObjective
from gpdevopt.local_search import (
    BfgsOptions,
    IfOptions,
    bfgs_minimize,
    central_gradient,
    implicit_filtering,
)
from gpdevopt.testbed import test_function as make_test_function


def counting(fn):
    calls = {"n": 0}

    def wrapped(x):
        calls["n"] += 1
        return fn(x)

    return wrapped, calls


def rosenbrock(x):
    return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2


def hump_deviance_objective(seed=11):
    rng = np.random.default_rng(seed)
    fn = make_test_function("hump")
    pts = lhd_maximin(10, SearchBox(np.zeros(1), np.ones(1)), rng)
    return DevianceObjective(DesignSet(pts, fn.evaluate(pts)))


class TestOptionsValidation:
    def test_bfgs_options(self):
        with pytest.raises(ValueError):
            BfgsOptions(grad_step=0.5)
        with pytest.raises(ValueError):
            BfgsOptions(max_iters=0)

    def test_if_options(self):
        box = SearchBox(np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            IfOptions(box=box, scales=(0.5, 0.5))
        with pytest.raises(ValueError):
            IfOptions(box=box, scales=(0.25, 0.5))
        with pytest.raises(ValueError):
            IfOptions(box=box, scales=(1.5, 0.5))


class TestCentralGradient:
    def test_matches_five_point_stencil(self):
        def smooth(x):
            return math.sin(x[0]) + x[1] ** 2 * math.cos(x[0]) + 0.3 * x[1]

        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.uniform(-2, 2, 2)
            grad = central_gradient(smooth, x, 1e-6)
            for k in range(2):
                h = 1e-3
                e = np.zeros(2)
                e[k] = h
                five_point = (
                    -smooth(x + 2 * e) + 8 * smooth(x + e) - 8 * smooth(x - e) + smooth(x - 2 * e)
                ) / (12 * h)
                assert grad[k] == pytest.approx(five_point, rel=1e-4, abs=1e-8)

    def test_costs_two_d_calls(self):
        fn, calls = counting(lambda x: float(x @ x))
        central_gradient(fn, np.zeros(3), 1e-6)
        assert calls["n"] == 6


class TestBfgs:
    def test_convex_quadratic(self):
        report = bfgs_minimize(lambda x: float(x @ x), np.array([3.0, -4.0]))
        assert np.max(np.abs(report.beta_star)) < 1e-6

    def test_rosenbrock(self):
        opts = BfgsOptions(max_iters=200)
        report = bfgs_minimize(rosenbrock, np.array([-1.2, 1.0]), opts)
        assert report.value < 1e-6

    def test_infinite_start_returns_unchanged(self):
        start = np.array([1.0, 2.0])
        report = bfgs_minimize(lambda x: math.inf, start, BfgsOptions())
        assert report.value == math.inf
        assert np.array_equal(report.beta_star, start)
        assert report.fe_used == 1

    def test_hump_deviance_from_basin(self):
        obj = hump_deviance_objective()
        lo, hi = if_beta_box(1).bounds()
        grid = np.linspace(lo[0], hi[0], 2001)
        vals = [obj.evaluate(np.array([b]))[0] for b in grid]
        best_idx = int(np.argmin(vals))
        start = np.array([grid[best_idx] + 0.05])  # inside the global basin
        report = bfgs_minimize(obj, start)
        assert report.value <= min(vals) + 1e-3

    def test_fe_conservation(self):
        fn, calls = counting(rosenbrock)
        report = bfgs_minimize(fn, np.array([0.5, 0.5]))
        assert report.fe_used == calls["n"]

    def test_max_fe_budget_respected(self):
        fn, calls = counting(rosenbrock)
        report = bfgs_minimize(fn, np.array([-1.2, 1.0]), BfgsOptions(max_fe=37))
        assert calls["n"] <= 37
        assert report.fe_used == calls["n"]

    def test_trace_monotone_and_final(self):
        report = bfgs_minimize(rosenbrock, np.array([-1.2, 1.0]))
        values = [v for _, v in report.trace]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] == report.value


class TestImplicitFiltering:
    def test_convex_bowl_converges_to_center(self):
        box = SearchBox(np.array([-2.0, -1.0]), np.array([4.0, 3.0]))
        center = np.array([1.0, 1.0])

        def bowl(x):
            return float((x - center) @ (x - center))

        report = implicit_filtering(bowl, np.array([-1.5, 2.5]), IfOptions(box=box))
        h_min = 2.0 ** -7
        span = box.span()
        assert np.all(np.abs(report.beta_star - center) <= h_min * span + 1e-12)

    def test_hump_deviance_beats_grid(self):
        obj = hump_deviance_objective()
        box = if_beta_box(1)
        lo, hi = box.bounds()
        grid_vals = [obj.evaluate(np.array([b]))[0] for b in np.linspace(lo[0], hi[0], 2001)]
        start = 0.5 * (lo + hi)
        report = implicit_filtering(obj, start, IfOptions(box=box))
        assert report.value <= min(grid_vals) + 1e-2

    def test_start_outside_box_clamped_with_warning(self):
        box = SearchBox(np.zeros(1), np.ones(1))
        with pytest.warns(UserWarning):
            report = implicit_filtering(
                lambda x: float(x[0] ** 2), np.array([5.0]), IfOptions(box=box)
            )
        assert 0.0 <= report.beta_star[0] <= 1.0

    def test_all_evaluations_inside_box(self):
        box = SearchBox(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
        seen = []

        def recording(x):
            seen.append(np.array(x))
            return float(x @ x)

        implicit_filtering(recording, np.array([0.9, 1.9]), IfOptions(box=box))
        lo, hi = box.bounds()
        for point in seen:
            assert np.all(point >= lo - 1e-12) and np.all(point <= hi + 1e-12)

    def test_boundary_stencil_points_clamped_and_counted(self):
        # Start on the boundary: half the stencil clamps onto the incumbent's
        # side yet every probe still costs an evaluation.
        box = SearchBox(np.zeros(1), np.ones(1))
        fn, calls = counting(lambda x: float(x[0]))
        implicit_filtering(fn, np.array([0.0]), IfOptions(box=box, scales=(0.5,)))
        assert calls["n"] >= 3  # start + two stencil probes at the single scale

    def test_fe_conservation_and_budget(self):
        obj = hump_deviance_objective(seed=3)
        fn, calls = counting(obj)
        box = if_beta_box(1)
        report = implicit_filtering(fn, np.array([0.0]), IfOptions(box=box, max_fe=20))
        assert report.fe_used == calls["n"] <= 20

    def test_trace_monotone(self):
        obj = hump_deviance_objective(seed=5)
        box = if_beta_box(1)
        report = implicit_filtering(obj, np.array([1.0]), IfOptions(box=box))
        values = [v for _, v in report.trace]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] == report.value
