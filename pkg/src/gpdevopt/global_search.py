"""Global search: start generation and the seven optimizer strategies.

Multistart strategies draw their starts from a space-filling sample of the
search box (best of several Latin hypercube candidates by maximin distance),
keep the lowest-value fraction, and cluster it with k-means; the hybrid
strategies instead spend the same sampling budget on a DIRECT run and start
a single local search from its best point.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import pdist

from .boxes import SearchBox, default_beta_box, if_beta_box
from .direct import direct_search
from .local_search import (
    DEFAULT_SCALES,
    BfgsOptions,
    IfOptions,
    bfgs_minimize,
    implicit_filtering,
)
from .optreport import CountedObjective, OptReport, merge_traces

STRATEGIES = (
    "MS-BFGS-2d1",
    "MS-BFGS-halfd",
    "MS-IF-2d1",
    "MS-IF-halfd",
    "IF2",
    "DIRECT-BFGS",
    "DIRECT-IF",
)

# How many space-filling candidates compete on the maximin criterion.
LHD_CANDIDATES = 50
KMEANS_RESTARTS = 5

# Fractions along the box diagonal probed for the extra multistart point.
DIAGONAL_FRACTIONS = (0.25, 0.5, 0.75)

# Stage-one evaluation cap per start in the two-stage IF strategy, times d.
IF2_STAGE1_FE_PER_DIM = 20

# Sampling budget (times d) for clustering and for DIRECT.
SAMPLING_FE_PER_DIM = 200
KEEP_FE_PER_DIM = 80


def lhd_unit_sample(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """One random Latin hypercube sample on the unit cube.

    Each dimension's strata 0..count-1 are occupied exactly once, with a
    uniform draw inside each stratum.
    """
    strata = np.column_stack([rng.permutation(count) for _ in range(d)])
    return (strata + rng.random((count, d))) / count


def lhd_maximin(
    count: int,
    box: SearchBox,
    rng: np.random.Generator,
    candidates: int = LHD_CANDIDATES,
) -> np.ndarray:
    """Maximin Latin hypercube design: best of `candidates` random samples.

    The winner maximizes the minimum pairwise distance, measured in box
    coordinates.
    """
    if count < 2:
        raise ValueError("count must be at least 2")
    lo, hi = box.bounds()
    best: np.ndarray | None = None
    best_score = -math.inf
    for _ in range(candidates):
        sample = lo + lhd_unit_sample(count, box.d, rng) * (hi - lo)
        score = float(pdist(sample).min())
        if score > best_score:
            best, best_score = sample, score
    return best


def kmeans_best(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    restarts: int = KMEANS_RESTARTS,
) -> np.ndarray:
    """Cluster centers from the best of `restarts` Lloyd runs (lowest SSE)."""
    best_centers: np.ndarray | None = None
    best_sse = math.inf
    for _ in range(restarts):
        centers, sse = _lloyd(points, k, rng)
        if sse < best_sse:
            best_centers, best_sse = centers, sse
    return best_centers


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator):
    m = points.shape[0]
    centers = points[rng.choice(m, size=k, replace=False)].copy()
    assign: np.ndarray | None = None
    for _ in range(100):
        dist2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist2.argmin(axis=1)
        for j in range(k):
            members = new_assign == j
            if members.any():
                centers[j] = points[members].mean(axis=0)
            else:
                # Empty cluster: re-seed its center from a random point.
                centers[j] = points[rng.integers(m)]
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
    dist2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    sse = float(dist2.min(axis=1).sum())
    return centers, sse


def cluster_starts(
    objective,
    box: SearchBox,
    d: int,
    n_starts: int,
    include_diagonal: bool,
    rng: np.random.Generator,
):
    """Start points for a multistart run, plus the evaluations they cost.

    200d box points from a maximin Latin hypercube are evaluated, the best
    80d are clustered into k groups (k = n_starts, minus one when the extra
    diagonal start is requested), and the cluster centers become starts.
    With include_diagonal, three equidistant interior points along the box
    diagonal are also evaluated (3 more calls) and the best is appended.

    Returns (starts, fe_used, trace).
    """
    k = n_starts - 1 if include_diagonal else n_starts
    if k < 1:
        raise ValueError("at least one cluster center is required")
    wrapped = CountedObjective(objective)
    sample = lhd_maximin(SAMPLING_FE_PER_DIM * d, box, rng)
    values = np.array([wrapped(point) for point in sample])
    keep = np.argsort(values, kind="stable")[: KEEP_FE_PER_DIM * d]
    centers = kmeans_best(sample[keep], k, rng)
    starts = [centers[i].copy() for i in range(k)]
    if include_diagonal:
        diag_points = [box.diagonal_point(t) for t in DIAGONAL_FRACTIONS]
        diag_values = [wrapped(point) for point in diag_points]
        starts.append(diag_points[int(np.argmin(diag_values))])
    return starts, wrapped.count, tuple(wrapped.trace)


def multistart_count(strategy: str, d: int) -> int:
    """Number of local-search starts the strategy uses at dimension d."""
    if strategy in ("MS-BFGS-2d1", "MS-IF-2d1"):
        return 2 * d + 1
    if strategy in ("MS-BFGS-halfd", "MS-IF-halfd", "IF2"):
        return math.ceil(0.5 * d)
    return 1


def run_strategy(
    objective,
    strategy: str,
    d: int,
    rng: np.random.Generator,
    box_scale: float = 1.0,
    bfgs_options: BfgsOptions | None = None,
    if_scales: tuple[float, ...] = DEFAULT_SCALES,
) -> OptReport:
    """Dispatch one of the seven named strategies and merge the accounting.

    Multistart strategies cluster starts and run the local optimizer to
    completion from each; IF2 caps each first-stage run at 20d evaluations
    and then reruns the best one to completion; the DIRECT hybrids give
    DIRECT a 200d budget and start a single local run from its best point.
    The report's evaluation count is the exact sum over all phases.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    start_box = default_beta_box(d, scale=box_scale)
    pattern_box = if_beta_box(d, scale=box_scale)
    bfgs_opts = bfgs_options or BfgsOptions()

    def run_if(start: np.ndarray, max_fe: int | None = None) -> OptReport:
        return implicit_filtering(
            objective, start, IfOptions(box=pattern_box, scales=if_scales, max_fe=max_fe)
        )

    segments: list[tuple[int, tuple[tuple[int, float], ...]]] = []
    reports: list[OptReport] = []
    if strategy.startswith("MS-") or strategy == "IF2":
        include_diagonal = strategy.endswith("2d1")
        starts, fe_sampling, trace_sampling = cluster_starts(
            objective, start_box, d, multistart_count(strategy, d), include_diagonal, rng
        )
        segments.append((fe_sampling, trace_sampling))
        if strategy == "IF2":
            stage1 = [run_if(start, max_fe=IF2_STAGE1_FE_PER_DIM * d) for start in starts]
            for report in stage1:
                segments.append((report.fe_used, report.trace))
            best_stage1 = min(stage1, key=lambda r: r.value)
            final = run_if(best_stage1.beta_star)
            segments.append((final.fe_used, final.trace))
            reports = stage1 + [final]
        else:
            use_bfgs = "BFGS" in strategy
            for start in starts:
                if use_bfgs:
                    report = bfgs_minimize(objective, start, bfgs_opts)
                else:
                    report = run_if(start)
                segments.append((report.fe_used, report.trace))
                reports.append(report)
    else:
        global_report = direct_search(objective, start_box, SAMPLING_FE_PER_DIM * d)
        segments.append((global_report.fe_used, global_report.trace))
        if strategy == "DIRECT-BFGS":
            local_report = bfgs_minimize(objective, global_report.beta_star, bfgs_opts)
        else:
            local_report = run_if(global_report.beta_star)
        segments.append((local_report.fe_used, local_report.trace))
        reports = [global_report, local_report]
    best = min(reports, key=lambda r: r.value)
    total_fe = sum(fe for fe, _ in segments)
    return OptReport(
        beta_star=best.beta_star.copy(),
        value=best.value,
        fe_used=total_fe,
        trace=merge_traces(segments),
    )
