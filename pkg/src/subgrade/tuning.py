"""Deterministic k-fold cross-validated grid search.

Every candidate in a search is scored against the same fold assignment, and
the scaler is refit inside each fold on the four training folds only, so no
held-out value ever reaches a fitted statistic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, fit_scaler
from .errors import AllCandidatesInfeasible, BadFoldCount, CandidateInfeasible


@dataclass(frozen=True)
class HyperGrid:
    """Named axes of candidate values; the cartesian product in lexicographic
    axis-name order defines the candidate sequence."""

    axes: dict
    budget: int = 10_000

    def __post_init__(self):
        if not self.axes:
            raise ValueError("grid must have at least one axis")
        for name, values in self.axes.items():
            if len(values) == 0:
                raise ValueError(f"axis {name!r} is empty")
        total = 1
        for values in self.axes.values():
            total *= len(values)
        if total > self.budget:
            raise ValueError(f"grid has {total} candidates, over budget {self.budget}")

    def candidates(self) -> list[dict]:
        names = sorted(self.axes)
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.axes[n] for n in names))]


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray

    def train_mask(self, fold: int) -> np.ndarray:
        return self.assignment != fold

    def holdout_mask(self, fold: int) -> np.ndarray:
        return self.assignment == fold


@dataclass(frozen=True)
class CandidateScore:
    candidate: dict
    mean_mse: float
    fold_mses: tuple

    def to_dict(self) -> dict:
        return {"candidate": self.candidate, "mean_mse": self.mean_mse,
                "fold_mses": list(self.fold_mses)}


@dataclass(frozen=True)
class TuningResult:
    best_candidate: dict
    best_cv_mse: float
    per_candidate: tuple

    def to_dict(self) -> dict:
        return {
            "best_candidate": self.best_candidate,
            "best_cv_mse": self.best_cv_mse,
            "per_candidate": [c.to_dict() for c in self.per_candidate],
        }


def make_folds(n: int, k: int, seed: int) -> FoldAssignment:
    """Seeded uniform permutation, then round-robin fold labels over the
    permuted order; fold sizes differ by at most one."""
    if not 2 <= k <= n:
        raise BadFoldCount(f"fold count {k} invalid for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    assignment.setflags(write=False)
    return FoldAssignment(k=k, assignment=assignment)


def cv_score(train: Dataset, target: str, candidate: dict,
             folds: FoldAssignment, trainer) -> tuple[float, list[float]]:
    """Mean held-out MSE over folds; the scaler is refit per fold on the
    fold-train rows only. A trainer failure on any fold raises
    CandidateInfeasible."""
    target_y = train.target_column(target)
    fold_mses = []
    for f in range(folds.k):
        tr_mask = folds.train_mask(f)
        ho_mask = folds.holdout_mask(f)
        scaler = fit_scaler(train.subset(np.flatnonzero(tr_mask)))
        x_tr = scaler.transform_matrix(train.x[tr_mask])
        y_tr = target_y[tr_mask]
        try:
            predict = trainer(x_tr, y_tr, candidate)
        except CandidateInfeasible:
            raise
        except Exception as exc:
            raise CandidateInfeasible(f"fold {f} failed: {exc}") from exc
        x_ho = scaler.transform_matrix(train.x[ho_mask])
        resid = predict(x_ho) - target_y[ho_mask]
        fold_mses.append(float(np.mean(resid ** 2)))
    return float(np.mean(fold_mses)), fold_mses


def grid_search(train: Dataset, target: str, grid: HyperGrid, k: int,
                seed: int, trainer) -> TuningResult:
    """Score every candidate with one shared fold assignment and pick the
    lowest mean MSE; ties go to the earliest candidate, infeasible candidates
    rank last with an infinite score."""
    folds = make_folds(train.n, k, seed)
    scored = []
    best_idx = -1
    for i, candidate in enumerate(grid.candidates()):
        try:
            mean_mse, fold_mses = cv_score(train, target, candidate, folds, trainer)
        except CandidateInfeasible:
            mean_mse, fold_mses = float("inf"), []
        scored.append(CandidateScore(candidate, mean_mse, tuple(fold_mses)))
        if np.isfinite(mean_mse) and (best_idx < 0 or mean_mse < scored[best_idx].mean_mse):
            best_idx = i
    if best_idx < 0:
        raise AllCandidatesInfeasible("no grid candidate trained successfully")
    best = scored[best_idx]
    return TuningResult(best_candidate=best.candidate, best_cv_mse=best.mean_mse,
                        per_candidate=tuple(scored))
