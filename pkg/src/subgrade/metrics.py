"""The four evaluation statistics (R2, RMSE, MAE, MAPE) and per-sample
residuals. Residuals follow the predicted-minus-actual convention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantActual, NearZeroActual

NEAR_ZERO_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EvalReport:
    """One model/target/phase evaluation: the four metrics plus residuals."""

    r2: float
    rmse: float
    mae: float
    mape: float
    residuals: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "r2": self.r2,
            "rmse": self.rmse,
            "mae": self.mae,
            "mape": self.mape,
            "residuals": [[int(i), float(r)] for i, r in self.residuals],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            r2=float(d["r2"]),
            rmse=float(d["rmse"]),
            mae=float(d["mae"]),
            mape=float(d["mape"]),
            residuals=tuple((int(i), float(r)) for i, r in d["residuals"]),
        )


def _pair(actual, predicted, min_len: int):
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.shape != p.shape:
        raise ValueError("actual and predicted must have equal length")
    if a.size < min_len:
        raise ValueError(f"need at least {min_len} samples")
    return a, p


def r2(actual, predicted) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot about mean(actual)."""
    a, p = _pair(actual, predicted, 2)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantActual("R2 is undefined for a constant actual vector")
    ss_res = float(np.sum((a - p) ** 2))
    return 1.0 - ss_res / ss_tot


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted, 1)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted, 1)
    return float(np.mean(np.abs(p - a)))


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, reported as a fraction (not x100)."""
    a, p = _pair(actual, predicted, 1)
    small = np.flatnonzero(np.abs(a) <= NEAR_ZERO_TOLERANCE)
    if small.size:
        raise NearZeroActual(int(small[0]))
    return float(np.mean(np.abs((p - a) / a)))


def evaluate(actual, predicted, row_ids) -> EvalReport:
    """All four metrics plus (row_id, predicted - actual) residuals."""
    a, p = _pair(actual, predicted, 2)
    ids = np.asarray(row_ids, dtype=np.int64).ravel()
    if ids.shape != a.shape:
        raise ValueError("row_ids must match sample count")
    residuals = tuple((int(i), float(e)) for i, e in zip(ids, p - a))
    return EvalReport(
        r2=r2(a, p),
        rmse=rmse(a, p),
        mae=mae(a, p),
        mape=mape(a, p),
        residuals=residuals,
    )
