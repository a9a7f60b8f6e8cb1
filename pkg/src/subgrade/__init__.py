"""Regression toolkit for estimating subgrade soil strength indices (CBR,
UCS, resilient-modulus ratio) from index properties, with epsilon-SVR and
second-order gradient-boosted trees built from first principles."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    dataset,
    errors,
    experiment,
    gbdt,
    metrics,
    models,
    sensitivity,
    svr,
    tuning,
)
