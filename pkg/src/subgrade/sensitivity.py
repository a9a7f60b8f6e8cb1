"""Partial dependence: sweep one feature over an observed-range grid while
every other feature keeps its background value, averaging model predictions
over all background rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, MinMaxScaler
from .errors import DegenerateFeature, UnknownFeature

DEFAULT_PDP_POINTS = 50


@dataclass(frozen=True)
class PdpCurve:
    feature: str
    grid: tuple
    values: tuple
    n_background: int

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "grid": list(self.grid),
            "values": list(self.values),
            "n_background": self.n_background,
        }

    def to_csv_text(self) -> str:
        lines = ["feature_value,mean_prediction"]
        lines += [f"{g!r},{v!r}" for g, v in zip(self.grid, self.values)]
        return "\n".join(lines) + "\n"


def pdp_grid(d: Dataset, feature: str, n_points: int = DEFAULT_PDP_POINTS) -> np.ndarray:
    """Equally spaced values from the feature's observed min to max."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    try:
        col = d.input_column(feature)
    except KeyError:
        raise UnknownFeature(feature) from None
    lo, hi = float(col.min()), float(col.max())
    if hi <= lo:
        raise DegenerateFeature(f"feature {feature!r} is constant; no grid to sweep")
    return np.linspace(lo, hi, n_points)


def pdp_compute(predict, d: Dataset, scaler: MinMaxScaler, feature: str,
                grid: np.ndarray) -> PdpCurve:
    """Mean prediction per grid value, feature overwritten in every
    background row. The grid is in natural units; the scaler is applied just
    before prediction because the model consumes scaled inputs."""
    j = d.schema.input_index(feature)
    grid = np.asarray(grid, dtype=np.float64)
    values = np.empty(grid.shape[0])
    base = d.x.copy()
    for i, v in enumerate(grid):
        base[:, j] = v
        values[i] = float(np.mean(predict(scaler.transform_matrix(base))))
    return PdpCurve(feature=feature, grid=tuple(grid.tolist()),
                    values=tuple(values.tolist()), n_background=d.n)
