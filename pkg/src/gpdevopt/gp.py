"""Gaussian process emulator: profiled deviance, fitting, and prediction.

The model is a constant-mean GP with the Gaussian product correlation.  The
mean and variance have closed-form profile estimates, leaving the deviance

    log|R_d| + n * log[(Y - mu_hat)' R_d^-1 (Y - mu_hat)]

(constant terms dropped) to be minimized over the log10 inverse lengthscales,
where R_d is the nugget-regularized correlation matrix.  One deviance
evaluation is the unit of optimization cost throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .correlation import (
    DistanceCache,
    FactoredCorrelation,
    IllConditionedError,
    factorize,
    nugget_from_extremes,
)
from .global_search import STRATEGIES, run_strategy
from .optreport import OptReport

DEFAULT_STRATEGY = "DIRECT-BFGS"


class DegenerateDataError(ValueError):
    """The response is constant, so the profile variance collapses to zero."""


class UnfittableError(RuntimeError):
    """Every optimizer start produced a non-finite deviance."""


@dataclass(frozen=True)
class DesignSet:
    """n design points in the unit cube with their simulator outputs."""

    points: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        outputs = np.atleast_1d(np.asarray(self.outputs, dtype=float))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "outputs", outputs)
        if points.shape[0] != outputs.size:
            raise ValueError("points and outputs disagree on the number of rows")
        if points.shape[0] < 2:
            raise ValueError("at least two design points are required")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(outputs)):
            raise ValueError("design points and outputs must be finite")
        if np.any(points < -1e-12) or np.any(points > 1.0 + 1e-12):
            raise ValueError("design coordinates must lie in [0, 1]")
        if np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise ValueError("duplicate design points are not allowed")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def output_range(self) -> float:
        return float(self.outputs.max() - self.outputs.min())


@dataclass(frozen=True)
class GpOptions:
    """Model options: smoothness exponent and condition-number ceiling."""

    p_exponent: float = 2.0
    a: float = 25.0

    def p_vector(self, d: int) -> np.ndarray:
        return np.full(d, self.p_exponent)


@dataclass(frozen=True)
class DevianceInfo:
    """Diagnostics attached to one deviance evaluation."""

    delta: float
    kappa: float
    mu_hat: float
    sigma2_hat: float
    log_det: float
    factored: FactoredCorrelation | None


def mean_estimate(factored: FactoredCorrelation, Y: np.ndarray) -> float:
    """Generalized least squares mean (1' R^-1 1)^-1 (1' R^-1 Y)."""
    Y = np.asarray(Y, dtype=float)
    if Y.size != factored.matrix_dim:
        raise ValueError("output vector length does not match the factorization")
    # Centering Y first is exact for the estimate and avoids cancellation
    # when the outputs carry a large common offset.
    shift = float(Y.mean())
    centered = Y - shift
    u = factored.solve(np.ones(Y.size))
    return shift + float(u @ centered) / float(u.sum())


def variance_estimate(
    factored: FactoredCorrelation, Y: np.ndarray, mu_hat: float
) -> float:
    """Profile variance (Y - mu)' R^-1 (Y - mu) / n, clamped at zero."""
    Y = np.asarray(Y, dtype=float)
    resid = Y - mu_hat
    z = factored.half_solve(resid)
    return max(float(z @ z) / Y.size, 0.0)


def _profile(factored: FactoredCorrelation, Y: np.ndarray):
    """Profile mean, variance, and the quadratic form, sharing one solve."""
    shift = float(Y.mean())
    centered = Y - shift
    u = factored.solve(np.ones(Y.size))
    mu_centered = float(u @ centered) / float(u.sum())
    resid = centered - mu_centered
    z = factored.half_solve(resid)
    qform = float(z @ z)
    mu_hat = shift + mu_centered
    sigma2_hat = max(qform / Y.size, 0.0)
    return mu_hat, sigma2_hat, qform


def _deviance_from_cache(
    cache: DistanceCache, Y: np.ndarray, beta: np.ndarray, a: float
) -> tuple[float, DevianceInfo]:
    n = Y.size
    R = cache.correlation(beta)
    if not np.all(np.isfinite(R)):
        return math.inf, DevianceInfo(0.0, math.inf, math.nan, math.nan, math.nan, None)
    try:
        w = np.linalg.eigvalsh(R)
        delta, kappa = nugget_from_extremes(float(w[0]), float(w[-1]), a)
        factored = factorize(R, delta, kappa)
    except (IllConditionedError, np.linalg.LinAlgError, linalg.LinAlgError, ValueError):
        return math.inf, DevianceInfo(0.0, math.inf, math.nan, math.nan, math.nan, None)
    mu_hat, sigma2_hat, qform = _profile(factored, Y)
    if qform <= 0.0:
        value = -math.inf
    else:
        value = factored.log_det + n * math.log(qform)
    info = DevianceInfo(delta, kappa, mu_hat, sigma2_hat, factored.log_det, factored)
    return value, info


def evaluate_deviance(
    design: DesignSet, beta: np.ndarray, options: GpOptions | None = None
) -> tuple[float, DevianceInfo]:
    """Profiled deviance of the design at one beta vector.

    The nugget lower bound is recomputed from the correlation matrix at this
    beta, and the same regularized factorization feeds both the mean estimate
    and the quadratic form.  Ill-conditioning yields +inf rather than an
    exception so optimizers can survive pathological beta.
    """
    options = options or GpOptions()
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.size != design.d:
        raise ValueError(f"beta must have length {design.d}")
    cache = DistanceCache(design.points, options.p_vector(design.d))
    return _deviance_from_cache(cache, design.outputs, beta, options.a)


class DevianceObjective:
    """Counting deviance evaluator with the distance cache built once.

    __call__ is the optimization objective: it evaluates the deviance and
    increments the evaluation counter by exactly one (even when the result
    is +inf).  evaluate() is the uncounted path used for diagnostics and for
    rebuilding the model at the optimum.
    """

    def __init__(self, design: DesignSet, options: GpOptions | None = None):
        self.design = design
        self.options = options or GpOptions()
        self._cache = DistanceCache(design.points, self.options.p_vector(design.d))
        self.fe_count = 0

    def __call__(self, beta: np.ndarray) -> float:
        self.fe_count += 1
        value, _ = _deviance_from_cache(
            self._cache, self.design.outputs, np.asarray(beta, dtype=float), self.options.a
        )
        return value

    def evaluate(self, beta: np.ndarray) -> tuple[float, DevianceInfo]:
        return _deviance_from_cache(
            self._cache, self.design.outputs, np.asarray(beta, dtype=float), self.options.a
        )


@dataclass(frozen=True)
class Prediction:
    y_hat: float
    mse: float


@dataclass(frozen=True)
class FittedGP:
    """Fitted emulator: optimal correlation parameters plus profile estimates."""

    design: DesignSet
    beta_star: np.ndarray
    mu_hat: float
    sigma2_hat: float
    correlation: FactoredCorrelation
    deviance: float
    fe_count: int
    p: np.ndarray
    trace: tuple[tuple[int, float], ...] = ()

    @property
    def d(self) -> int:
        return self.design.d


def _cross_correlation(model: FittedGP, points: np.ndarray) -> np.ndarray:
    """Correlation of each query point with every design point, (m, n)."""
    diffs = np.abs(points[:, None, :] - model.design.points[None, :, :])
    with np.errstate(over="ignore", invalid="ignore"):
        expo = (diffs ** model.p[None, None, :]) @ (10.0 ** model.beta_star)
        return np.exp(-expo)


def predict_many(model: FittedGP, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predictions and clamped mean squared errors at many points at once."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.d:
        raise ValueError(f"points must have {model.d} columns")
    factored = model.correlation
    n = model.design.n
    ones = np.ones(n)
    resid = model.design.outputs - model.mu_hat
    r = _cross_correlation(model, points)  # (m, n)
    u = factored.solve(ones)
    one_r_one = float(u.sum())
    z_resid = factored.half_solve(resid)
    z_ones = factored.half_solve(ones)
    z_r = factored.half_solve(r.T)  # (n, m)
    y_hat = model.mu_hat + z_r.T @ z_resid
    # Weight vector C solves y_hat = C'Y; the MSE is sigma2 (1 - 2C'r + C'RC)
    # with both contractions done through the triangular factor.
    a_coef = (1.0 - z_ones @ z_r) / one_r_one  # (m,)
    z_w = z_ones[:, None] * a_coef[None, :] + z_r  # (n, m)
    mse = model.sigma2_hat * (1.0 - 2.0 * np.sum(z_w * z_r, axis=0) + np.sum(z_w * z_w, axis=0))
    return y_hat, np.maximum(mse, 0.0)


def predict(model: FittedGP, x_star: np.ndarray) -> Prediction:
    """Best linear unbiased prediction with its mean squared error."""
    y_hat, mse = predict_many(model, np.atleast_2d(x_star))
    return Prediction(y_hat=float(y_hat[0]), mse=float(mse[0]))


def prediction_weights(model: FittedGP, x_star: np.ndarray) -> np.ndarray:
    """Weight vector C with y_hat = C' Y (the second algebraic form)."""
    x_star = np.atleast_2d(np.asarray(x_star, dtype=float))
    factored = model.correlation
    ones = np.ones(model.design.n)
    r = _cross_correlation(model, x_star)[0]
    u = factored.solve(ones)
    a_coef = (1.0 - float(r @ u)) / float(u.sum())
    return factored.solve(a_coef * ones + r)


def fit(
    design: DesignSet,
    strategy: str = DEFAULT_STRATEGY,
    *,
    p_exponent: float = 2.0,
    a: float = 25.0,
    box_scale: float = 1.0,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> FittedGP:
    """Fit the emulator by global minimization of the profiled deviance.

    `strategy` names one of the seven optimization strategies; the reported
    evaluation count includes all sampling, clustering, and DIRECT
    evaluations in addition to the local runs.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if design.output_range == 0.0:
        raise DegenerateDataError(
            "constant response: the profile variance is zero and the deviance is undefined"
        )
    options = GpOptions(p_exponent=p_exponent, a=a)
    objective = DevianceObjective(design, options)
    if rng is None:
        rng = np.random.default_rng(seed)
    report: OptReport = run_strategy(
        objective, strategy, design.d, rng, box_scale=box_scale
    )
    if report.fe_used != objective.fe_count:
        raise RuntimeError(
            f"evaluation accounting mismatch: {report.fe_used} != {objective.fe_count}"
        )
    if not math.isfinite(report.value):
        raise UnfittableError("every start produced a non-finite deviance")
    value, info = objective.evaluate(report.beta_star)
    return FittedGP(
        design=design,
        beta_star=np.array(report.beta_star, dtype=float, copy=True),
        mu_hat=info.mu_hat,
        sigma2_hat=info.sigma2_hat,
        correlation=info.factored,
        deviance=value,
        fe_count=report.fe_used,
        p=options.p_vector(design.d),
        trace=report.trace,
    )
