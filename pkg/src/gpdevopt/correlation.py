"""Gaussian spatial correlation matrices with nugget regularization.

The correlation between two design points is a product of per-dimension
Gaussian factors, exp(-10**beta_k * |x_ik - x_jk|**p_k).  Because nearby
points make the matrix nearly singular, a nugget (small diagonal inflation)
is applied whenever the condition number would exceed exp(a); the smallest
such nugget is computed in closed form from the extreme eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

# Condition numbers are capped here when the smallest eigenvalue underflows
# relative to the largest, so the nugget formula stays finite.
KAPPA_CLAMP = 1e14


class IllConditionedError(RuntimeError):
    """Correlation matrix could not be factorized, even after the nugget."""


@dataclass(frozen=True)
class CorrelationSpec:
    """Hyperparameters of the Gaussian product correlation.

    Parameters
    ----------
    beta : (d,) array
        log10 inverse lengthscales, one per input dimension.
    p : (d,) array
        Smoothness exponents, each in (0, 2].
    a : float
        Condition-number ceiling exponent; the nugget keeps kappa(R) <= exp(a).
    """

    beta: np.ndarray
    p: np.ndarray
    a: float = 25.0

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "p", p)
        if beta.ndim != 1 or beta.shape != p.shape or beta.size < 1:
            raise ValueError("beta and p must be 1-D vectors of equal length")
        if np.any(p <= 0.0) or np.any(p > 2.0):
            raise ValueError("smoothness exponents must lie in (0, 2]")
        if not self.a > 0.0:
            raise ValueError("condition threshold exponent a must be positive")

    @property
    def d(self) -> int:
        return self.beta.size


class DistanceCache:
    """Per-dimension powered distances |x_ik - x_jk|**p_k for one design.

    Building the correlation matrix dominates the cost of a deviance
    evaluation, so the powered distances are computed once per design and
    reused for every beta.
    """

    def __init__(self, points: np.ndarray, p: np.ndarray):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if pts.shape[1] != p.size:
            raise ValueError(
                f"design has {pts.shape[1]} columns but p has length {p.size}"
            )
        self.n, self.d = pts.shape
        diffs = np.abs(pts[:, None, :] - pts[None, :, :])  # (n, n, d)
        self._powered = np.transpose(diffs, (2, 0, 1)) ** p[:, None, None]

    def correlation(self, beta: np.ndarray) -> np.ndarray:
        """Correlation matrix at the given log10 inverse lengthscales."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.d,):
            raise ValueError(f"beta must have length {self.d}, got {beta.shape}")
        with np.errstate(over="ignore", invalid="ignore"):
            expo = np.tensordot(10.0 ** beta, self._powered, axes=1)
            return np.exp(-expo)


def build_correlation(design: np.ndarray, spec: CorrelationSpec) -> np.ndarray:
    """Gaussian correlation matrix of an n x d design.

    R[i, j] = prod_k exp(-10**beta_k * |x_ik - x_jk|**p_k); the diagonal is
    exactly one and the result is exactly symmetric.
    """
    return DistanceCache(design, spec.p).correlation(spec.beta)


def eigenvalue_range(R: np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix."""
    w = np.linalg.eigvalsh(np.asarray(R, dtype=float))
    return float(w[0]), float(w[-1])


def condition_number(R: np.ndarray) -> float:
    """2-norm condition number lambda_max / lambda_min.

    Returns inf when the smallest eigenvalue is nonpositive within floating
    tolerance, signalling a numerically singular matrix.
    """
    lmin, lmax = eigenvalue_range(R)
    if lmax <= 0.0:
        return math.inf
    if lmin <= lmax * 1e-15:
        return math.inf
    return lmax / lmin


def nugget_from_extremes(lmin: float, lmax: float, a: float) -> tuple[float, float]:
    """Nugget lower bound and (clamped) condition number from eigenvalues.

    The bound is the smallest delta with kappa(R + delta*I) <= exp(a):
    lmax * (kappa - exp(a)) / (kappa * (exp(a) - 1)), floored at zero.  When
    lmin underflows below 1e-14 * lmax the condition number is clamped so the
    formula stays finite.
    """
    if lmax <= 0.0:
        raise ValueError("matrix has no positive eigenvalue")
    kappa = lmax / lmin if lmin > lmax * 1e-14 else KAPPA_CLAMP
    ea = math.exp(a)
    if kappa <= ea:
        return 0.0, kappa
    delta = lmax * (kappa - ea) / (kappa * (ea - 1.0))
    return delta, kappa


def nugget_lower_bound(R: np.ndarray, a: float = 25.0) -> float:
    """Smallest nugget keeping the condition number of R + delta*I below exp(a)."""
    lmin, lmax = eigenvalue_range(R)
    return nugget_from_extremes(lmin, lmax, a)[0]


@dataclass(frozen=True)
class FactoredCorrelation:
    """Cholesky-factored nugget-regularized correlation matrix R + delta*I.

    A single lower-triangular factor serves both the inverse action and the
    log-determinant needed by the deviance.  Instances are immutable and safe
    to share across threads.
    """

    matrix_dim: int
    delta: float
    log_det: float
    factor: np.ndarray
    kappa: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        """(R + delta*I)^-1 b via the triangular factor."""
        return linalg.cho_solve((self.factor, True), b, check_finite=False)

    def half_solve(self, b: np.ndarray) -> np.ndarray:
        """L^-1 b, so that ||half_solve(b)||^2 = b' (R + delta*I)^-1 b."""
        return linalg.solve_triangular(self.factor, b, lower=True, check_finite=False)


def factorize(
    R: np.ndarray, delta: float, kappa: float = math.nan
) -> FactoredCorrelation:
    """Triangular factorization of R + delta*I.

    Raises IllConditionedError when the shifted matrix is numerically not
    positive definite; callers treat the corresponding deviance as +inf.
    """
    if delta < 0.0:
        raise ValueError("nugget delta must be nonnegative")
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise IllConditionedError("correlation matrix contains non-finite entries")
    n = R.shape[0]
    shifted = R + delta * np.eye(n) if delta > 0.0 else R
    try:
        L = linalg.cholesky(shifted, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"factorization failed at delta={delta:g}"
        ) from exc
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    if math.isnan(kappa):
        kappa = condition_number(R)
    return FactoredCorrelation(
        matrix_dim=n, delta=float(delta), log_det=log_det, factor=L, kappa=float(kappa)
    )
