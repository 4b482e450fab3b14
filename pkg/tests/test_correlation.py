import math

import numpy as np
import pytest

from gpdevopt.correlation import (
    CorrelationSpec,
    DistanceCache,
    IllConditionedError,
    build_correlation,
    condition_number,
    factorize,
    nugget_lower_bound,
)

E25 = math.exp(25.0)


def random_design(rng, n, d):
    return rng.random((n, d))


class TestBuildCorrelation:
    def test_zero_distance_gives_one(self):
        spec = CorrelationSpec(beta=[0.3, -0.5], p=[2.0, 2.0])
        design = np.array([[0.2, 0.4], [0.2, 0.4], [0.9, 0.1]])
        R = build_correlation(design, spec)
        assert R[0, 1] == 1.0
        assert np.all(np.diag(R) == 1.0)

    def test_scalar_formula(self):
        # d=1, beta=0, p=2, |dx|=0.5 -> exp(-0.25)
        spec = CorrelationSpec(beta=[0.0], p=[2.0])
        R = build_correlation(np.array([[0.0], [0.5]]), spec)
        assert R[0, 1] == pytest.approx(math.exp(-0.25), rel=1e-15)

    def test_very_negative_beta_gives_all_ones(self):
        spec = CorrelationSpec(beta=[-30.0, -30.0], p=[2.0, 2.0])
        rng = np.random.default_rng(0)
        R = build_correlation(random_design(rng, 6, 2), spec)
        assert np.all(R > 1.0 - 1e-12)

    def test_symmetry_and_unit_diagonal_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            d = rng.integers(1, 4)
            spec = CorrelationSpec(beta=rng.uniform(-1, 1, d), p=np.full(d, 2.0))
            R = build_correlation(random_design(rng, 8, d), spec)
            assert np.array_equal(R, R.T)
            assert np.all(np.diag(R) == 1.0)

    def test_monotone_decreasing_in_beta(self):
        # For any pair with nonzero separation, raising any single beta_k
        # strictly shrinks the correlation.
        rng = np.random.default_rng(2)
        for _ in range(20):
            d = int(rng.integers(1, 4))
            design = random_design(rng, 5, d)
            beta = rng.uniform(-1.0, 1.0, d)
            k = int(rng.integers(d))
            bumped = beta.copy()
            bumped[k] += rng.uniform(0.1, 1.0)
            i, j = 0, int(rng.integers(1, 5))
            r_lo = build_correlation(design, CorrelationSpec(beta, np.full(d, 2.0)))[i, j]
            r_hi = build_correlation(design, CorrelationSpec(bumped, np.full(d, 2.0)))[i, j]
            assert r_hi < r_lo

    def test_dimension_mismatch_rejected(self):
        spec = CorrelationSpec(beta=[0.0], p=[2.0])
        with pytest.raises(ValueError):
            build_correlation(np.zeros((4, 2)), spec)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CorrelationSpec(beta=[0.0, 1.0], p=[2.0])
        with pytest.raises(ValueError):
            CorrelationSpec(beta=[0.0], p=[2.5])
        with pytest.raises(ValueError):
            CorrelationSpec(beta=[0.0], p=[2.0], a=0.0)


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(5)) == pytest.approx(1.0)

    @pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
    def test_two_by_two_closed_form(self, r):
        R = np.array([[1.0, r], [r, 1.0]])
        assert condition_number(R) == pytest.approx((1 + r) / (1 - r), rel=1e-12)

    def test_near_coincident_points_blow_up(self):
        # 10 nearly coincident 1-D points at beta=0 make R numerically singular.
        x = 0.5 + 1e-6 * np.arange(10.0)
        spec = CorrelationSpec(beta=[0.0], p=[2.0])
        R = build_correlation(x[:, None], spec)
        kappa = condition_number(R)
        w = np.linalg.eigvalsh(R)
        assert kappa > E25 or w[0] <= w[-1] * 1e-15


class TestNuggetLowerBound:
    def test_identity_is_zero(self):
        assert nugget_lower_bound(np.eye(4), 25.0) == 0.0

    def test_well_conditioned_is_zero(self):
        R = np.array([[1.0, 0.5], [0.5, 1.0]])  # kappa = 3 << e^25
        assert nugget_lower_bound(R, 25.0) == 0.0

    def test_bound_restores_condition_ceiling(self):
        rng = np.random.default_rng(3)
        spec_p = np.full(1, 2.0)
        for _ in range(10):
            base = np.sort(rng.random(8))
            x = np.concatenate([base, base + 1e-7])  # near-duplicates
            cache = DistanceCache(x[:, None], spec_p)
            R = cache.correlation(np.array([0.0]))
            delta = nugget_lower_bound(R, 25.0)
            assert delta > 0.0
            w = np.linalg.eigvalsh(R + delta * np.eye(len(x)))
            assert w[-1] / w[0] <= E25 * 1.05


class TestFactorize:
    def test_identity_log_det_zero(self):
        fac = factorize(np.eye(3), 0.0)
        assert fac.log_det == pytest.approx(0.0, abs=1e-14)
        assert fac.delta == 0.0

    def test_two_by_two_log_det(self):
        R = np.array([[1.0, 0.5], [0.5, 1.0]])  # det = 0.75
        fac = factorize(R, 0.0)
        assert fac.log_det == pytest.approx(math.log(0.75), rel=1e-12)

    def test_log_det_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = rng.integers(2, 7)
            A = rng.standard_normal((n, n))
            R = A @ A.T + n * np.eye(n)  # SPD
            fac = factorize(R, 0.0)
            sign, logdet = np.linalg.slogdet(R)
            assert sign == 1.0
            assert fac.log_det == pytest.approx(logdet, rel=1e-8)

    def test_singular_matrix_succeeds_with_nugget(self):
        x = 0.5 + 1e-8 * np.arange(12.0)
        R = DistanceCache(x[:, None], np.full(1, 2.0)).correlation(np.array([0.0]))
        delta = nugget_lower_bound(R, 25.0)
        fac = factorize(R, delta)
        assert math.isfinite(fac.log_det)

    def test_non_pd_without_nugget_raises(self):
        x = 0.5 + 1e-9 * np.arange(15.0)
        R = DistanceCache(x[:, None], np.full(1, 2.0)).correlation(np.array([0.0]))
        with pytest.raises(IllConditionedError):
            factorize(R, 0.0)

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            factorize(np.eye(2), -1e-3)

    def test_solve_matches_dense_inverse(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((5, 5))
        R = A @ A.T + 5 * np.eye(5)
        fac = factorize(R, 0.0)
        b = rng.standard_normal(5)
        assert fac.solve(b) == pytest.approx(np.linalg.solve(R, b), rel=1e-10)
