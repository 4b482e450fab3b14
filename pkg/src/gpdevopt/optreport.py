"""Shared optimizer bookkeeping: evaluation counting, budgets, and reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BudgetExhausted(Exception):
    """Raised by CountedObjective when the evaluation budget is spent."""


@dataclass(frozen=True)
class OptReport:
    """Outcome of one optimizer run.

    trace holds (cumulative evaluations, best value so far) pairs; best_value
    is nonincreasing along the trace and the last entry equals `value`.
    """

    beta_star: np.ndarray
    value: float
    fe_used: int
    trace: tuple[tuple[int, float], ...]


class CountedObjective:
    """Wraps an objective with exact call counting and an optional budget.

    Every evaluation increments `count`; once `count` reaches `max_fe` the
    next call raises BudgetExhausted without evaluating, so the number of
    true evaluations never exceeds the budget.
    """

    def __init__(self, fn, max_fe: int | None = None):
        self._fn = fn
        self.max_fe = max_fe
        self.count = 0
        self.best_value = np.inf
        self.best_point: np.ndarray | None = None
        self.trace: list[tuple[int, float]] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.max_fe is not None and self.count >= self.max_fe:
            raise BudgetExhausted
        self.count += 1
        value = float(self._fn(np.asarray(x, dtype=float)))
        if value < self.best_value or self.best_point is None:
            self.best_value = value
            self.best_point = np.array(x, dtype=float, copy=True)
            self.trace.append((self.count, value))
        return value

    def report(self, fallback: np.ndarray) -> OptReport:
        """Report of the best point seen, or `fallback` if nothing was evaluated."""
        if self.best_point is None:
            return OptReport(
                beta_star=np.array(fallback, dtype=float, copy=True),
                value=np.inf,
                fe_used=self.count,
                trace=(),
            )
        return OptReport(
            beta_star=self.best_point.copy(),
            value=self.best_value,
            fe_used=self.count,
            trace=tuple(self.trace),
        )


def merge_traces(
    segments: list[tuple[int, tuple[tuple[int, float], ...]]],
) -> tuple[tuple[int, float], ...]:
    """Concatenate per-phase traces into one global running-best trace.

    Each segment is (evaluations consumed by the phase, phase trace); phase
    evaluation counts become cumulative offsets.
    """
    merged: list[tuple[int, float]] = []
    offset = 0
    best = np.inf
    for fe_used, trace in segments:
        for fe, value in trace:
            if value < best or not merged:
                best = min(best, value)
                merged.append((offset + fe, best))
        offset += fe_used
    return tuple(merged)
