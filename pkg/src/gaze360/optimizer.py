"""Staged grid search for the classifier's speed thresholds.

Stage one fits the two saccade thresholds jointly; stage two fits the two
gaze thresholds with the saccade pair held fixed. Head thresholds are not
optimised. Objectives:

- saccade stage: mean of the saccade class's sample F1 and event F1;
- gaze stage: mean over fixation, smooth pursuit and noise of
  (sample F1 + event F1) / 2.

The search is exhaustive over the given grid and deterministic: ties are
broken toward the lexicographically smallest (high, low) pair, and the
result never depends on the order of training recordings.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .data import LabelTrack, PrimaryLabel, Recording
from .detector import ThresholdSet, Variant, run_pipeline
from .evaluation import evaluate_corpus

TrainPair = tuple[Recording, LabelTrack]


@dataclass(frozen=True)
class GridResult:
    low: float
    high: float
    objective: float
    table: tuple[tuple[float, float, float], ...]  # (low, high, objective) per grid point


def default_saccade_grid() -> list[tuple[float, float]]:
    lows = [float(v) for v in range(10, 61, 5)]
    highs = [float(v) for v in range(100, 301, 10)]
    return [(lo, hi) for lo in lows for hi in highs if lo < hi]


def default_gaze_grid() -> list[tuple[float, float]]:
    lows = [float(v) for v in range(2, 21, 1)]
    highs = [float(v) for v in range(30, 121, 5)]
    return [(lo, hi) for lo in lows for hi in highs if lo < hi]


def saccade_objective(pairs: Sequence[TrainPair], thresholds: ThresholdSet,
                      variant: Variant = "combined") -> float:
    scored = [(gt, run_pipeline(rec, variant, thresholds)) for rec, gt in pairs]
    scores = {s.label.name: s for s in evaluate_corpus(scored) if s.tier == "primary"}
    sacc = scores[PrimaryLabel.SACCADE.name]
    return (sacc.sample_f1 + sacc.event_f1) / 2.0


def gaze_objective(pairs: Sequence[TrainPair], thresholds: ThresholdSet,
                   variant: Variant = "combined") -> float:
    scored = [(gt, run_pipeline(rec, variant, thresholds)) for rec, gt in pairs]
    scores = {s.label.name: s for s in evaluate_corpus(scored) if s.tier == "primary"}
    per_class = [
        (scores[name].sample_f1 + scores[name].event_f1) / 2.0
        for name in (PrimaryLabel.FIXATION.name, PrimaryLabel.SP.name, PrimaryLabel.NOISE.name)
    ]
    return sum(per_class) / len(per_class)


def _grid_search(grid: Iterable[tuple[float, float]],
                 objective: Callable[[float, float], float]) -> GridResult:
    points = sorted(set(grid), key=lambda p: (p[1], p[0]))
    if not points:
        raise ValueError("grid must not be empty")
    table = []
    best: tuple[float, float] | None = None
    best_obj = float("-inf")
    for lo, hi in points:
        obj = objective(lo, hi)
        table.append((lo, hi, obj))
        if obj > best_obj:
            best, best_obj = (lo, hi), obj
    assert best is not None
    return GridResult(best[0], best[1], best_obj, tuple(table))


def fit_saccade_thresholds(pairs: Sequence[TrainPair],
                           grid: Iterable[tuple[float, float]] | None = None,
                           base: ThresholdSet | None = None,
                           variant: Variant = "combined") -> GridResult:
    """Joint grid search over (sacc_low, sacc_high)."""
    if not pairs:
        raise ValueError("need a non-empty training set")
    base = base if base is not None else ThresholdSet()
    grid = list(grid) if grid is not None else default_saccade_grid()
    if any(lo >= hi for lo, hi in grid):
        raise ValueError("saccade grid must satisfy low < high")

    def objective(lo: float, hi: float) -> float:
        return saccade_objective(pairs, replace(base, sacc_low=lo, sacc_high=hi), variant)

    return _grid_search(grid, objective)


def fit_gaze_thresholds(pairs: Sequence[TrainPair],
                        saccade_thresholds: tuple[float, float],
                        grid: Iterable[tuple[float, float]] | None = None,
                        base: ThresholdSet | None = None,
                        variant: Variant = "combined") -> GridResult:
    """Grid search over (gaze_low, gaze_high) with fixed saccade thresholds."""
    if not pairs:
        raise ValueError("need a non-empty training set")
    base = base if base is not None else ThresholdSet()
    base = replace(base, sacc_low=saccade_thresholds[0], sacc_high=saccade_thresholds[1])
    grid = list(grid) if grid is not None else default_gaze_grid()
    if any(lo >= hi for lo, hi in grid):
        raise ValueError("gaze grid must satisfy low < high")

    def objective(lo: float, hi: float) -> float:
        return gaze_objective(pairs, replace(base, gaze_low=lo, gaze_high=hi), variant)

    return _grid_search(grid, objective)


def fit_staged(pairs: Sequence[TrainPair],
               saccade_grid: Iterable[tuple[float, float]] | None = None,
               gaze_grid: Iterable[tuple[float, float]] | None = None,
               base: ThresholdSet | None = None,
               variant: Variant = "combined") -> ThresholdSet:
    """Both stages in sequence; returns the fitted threshold set."""
    base = base if base is not None else ThresholdSet()
    sacc = fit_saccade_thresholds(pairs, saccade_grid, base, variant)
    base = replace(base, sacc_low=sacc.low, sacc_high=sacc.high)
    gaze = fit_gaze_thresholds(pairs, (sacc.low, sacc.high), gaze_grid, base, variant)
    return replace(base, gaze_low=gaze.low, gaze_high=gaze.high)
