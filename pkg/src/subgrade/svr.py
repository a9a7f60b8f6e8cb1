"""Epsilon-insensitive support vector regression with an RBF kernel.

The box-constrained dual is solved by pairwise coordinate ascent: each step
picks the maximal-KKT-violating pair and solves the two-variable subproblem
exactly (piecewise quadratic in the step length, closed form per piece), so
the dual objective is non-decreasing across accepted steps by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DegenerateInput, DimensionMismatch


@dataclass(frozen=True)
class KernelSpec:
    gamma: float
    kind: str = "rbf"

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.kind != "rbf":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be finite and positive")


@dataclass(frozen=True)
class SvrHyperParams:
    c: float
    epsilon: float
    kernel: KernelSpec
    tolerance: float = 1e-6
    max_passes: int = 10_000  # pair-update budget per training sample

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "max_passes", int(self.max_passes))
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError("c must be finite and positive")
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be finite and non-negative")
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError("tolerance must be finite and positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be positive")


@dataclass(frozen=True)
class SvrModel:
    """Trained model: retained samples, their dual coefficients, and bias.

    Rows whose coefficient solved to exactly zero are dropped; everything
    else is retained so the kernel expansion reproduces the full dual
    solution bit for bit.
    """

    support_x: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    hyper: SvrHyperParams
    converged: bool
    objective_trace: np.ndarray | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "hyper": {
                "c": self.hyper.c.hex(),
                "epsilon": self.hyper.epsilon.hex(),
                "tolerance": self.hyper.tolerance.hex(),
                "max_passes": self.hyper.max_passes,
                "kernel": {"kind": self.hyper.kernel.kind, "gamma": self.hyper.kernel.gamma.hex()},
            },
            "bias": self.bias.hex(),
            "converged": self.converged,
            "support_x": [[v.hex() for v in row] for row in self.support_x.tolist()],
            "dual_coeffs": [v.hex() for v in self.dual_coeffs.tolist()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        hyper = SvrHyperParams(
            c=float.fromhex(d["hyper"]["c"]),
            epsilon=float.fromhex(d["hyper"]["epsilon"]),
            kernel=KernelSpec(gamma=float.fromhex(d["hyper"]["kernel"]["gamma"]),
                              kind=d["hyper"]["kernel"]["kind"]),
            tolerance=float.fromhex(d["hyper"]["tolerance"]),
            max_passes=int(d["hyper"]["max_passes"]),
        )
        support = np.array([[float.fromhex(v) for v in row] for row in d["support_x"]],
                           dtype=np.float64).reshape(len(d["support_x"]), -1)
        coeffs = np.array([float.fromhex(v) for v in d["dual_coeffs"]], dtype=np.float64)
        return cls(support_x=support, dual_coeffs=coeffs,
                   bias=float.fromhex(d["bias"]), hyper=hyper,
                   converged=bool(d["converged"]))


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """exp(-gamma * ||a - b||^2)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"kernel arguments differ in dimension: {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    return float(np.exp(-spec.gamma * d2))


def gram(spec: KernelSpec, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Kernel matrix K[i, j] = k(a_i, b_j); b defaults to a."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = a if b is None else np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch("gram operands differ in feature dimension")
    d2 = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-spec.gamma * d2)


@njit(cache=True)
def _smo_solve(k_mat, y, c, eps, tol, max_updates, trace):
    """Pairwise coordinate ascent on the (beta - beta*) parametrization.

    Returns (beta, accepted step count, converged flag). `trace` receives the
    running dual objective after step i at trace[i]; trace[0] is 0.
    """
    n = y.shape[0]
    beta = np.zeros(n)
    p = np.zeros(n)  # K @ beta, maintained incrementally
    obj = 0.0
    trace[0] = 0.0
    n_acc = 0
    converged = False
    bcls = 1e-12 * c if c > 1.0 else 1e-12

    for _ in range(max_updates):
        # Admissible-bias interval per sample; the solution is optimal when
        # the intervals intersect. argmax/argmin keep the lowest index on ties.
        best_lo = -1e300
        best_hi = 1e300
        i = -1
        j = -1
        for m in range(n):
            g = y[m] - p[m]
            b = beta[m]
            if b >= c - bcls:
                lo = -1e300
                hi = g - eps
            elif b <= -c + bcls:
                lo = g + eps
                hi = 1e300
            elif b > bcls:
                lo = g - eps
                hi = g - eps
            elif b < -bcls:
                lo = g + eps
                hi = g + eps
            else:
                lo = g - eps
                hi = g + eps
            if lo > best_lo:
                best_lo = lo
                i = m
            if hi < best_hi:
                best_hi = hi
                j = m
        if best_lo - best_hi <= tol:
            converged = True
            break

        # Exact 1-D maximization along e_i - e_j over the feasible interval.
        bi = beta[i]
        bj = beta[j]
        tlo = max(-c - bi, bj - c)
        thi = min(c - bi, bj + c)
        eta = k_mat[i, i] + k_mat[j, j] - 2.0 * k_mat[i, j]
        d0 = (y[i] - p[i]) - (y[j] - p[j])

        cand = np.empty(8)
        nc = 0
        cand[nc] = tlo
        nc += 1
        cand[nc] = thi
        nc += 1
        if tlo < -bi < thi:
            cand[nc] = -bi
            nc += 1
        if tlo < bj < thi:
            cand[nc] = bj
            nc += 1
        if eta > 0.0:
            for si in (-1.0, 1.0):
                for sj in (-1.0, 1.0):
                    ts = (d0 - eps * si + eps * sj) / eta
                    if tlo <= ts <= thi:
                        cand[nc] = ts
                        nc += 1
        best_t = 0.0
        best_f = 0.0
        for q in range(nc):
            t = cand[q]
            f = (d0 * t - 0.5 * eta * t * t
                 - eps * (abs(bi + t) - abs(bi))
                 - eps * (abs(bj - t) - abs(bj)))
            if f > best_f:
                best_f = f
                best_t = t
        if best_f <= 0.0:
            break  # numerically stalled; leave non-converged

        beta[i] = bi + best_t
        beta[j] = bj - best_t
        for m in range(n):
            p[m] += best_t * (k_mat[m, i] - k_mat[m, j])
        obj += best_f
        n_acc += 1
        trace[n_acc] = obj

    return beta, n_acc, converged


def bias_interval(beta: np.ndarray, g: np.ndarray, c: float, eps: float,
                  slack: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample admissible range of the bias given dual coefficients and
    bias-free residuals g = y - K @ beta."""
    bcls = max(1e-12 * c if c > 1.0 else 1e-12, slack)
    lo = np.full(beta.shape, -np.inf)
    hi = np.full(beta.shape, np.inf)
    upper = beta >= c - bcls
    lower = beta <= -c + bcls
    pos = (~upper) & (beta > bcls)
    neg = (~lower) & (beta < -bcls)
    zero = ~(upper | lower | pos | neg)
    hi[upper] = g[upper] - eps
    lo[lower] = g[lower] + eps
    lo[pos] = hi[pos] = g[pos] - eps
    lo[neg] = hi[neg] = g[neg] + eps
    lo[zero] = g[zero] - eps
    hi[zero] = g[zero] + eps
    return lo, hi


def fit(train_x: np.ndarray, train_y: np.ndarray, hyper: SvrHyperParams,
        seed: int = 0, collect_trace: bool = False) -> SvrModel:
    """Train by pairwise dual coordinate ascent; deterministic for fixed
    inputs (the pair-selection rule is itself deterministic, so `seed` only
    names the run). A model that exhausts its update budget is returned
    flagged non-converged."""
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(train_x, dtype=np.float64)))
    y = np.ascontiguousarray(np.asarray(train_y, dtype=np.float64).ravel())
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch("train_x and train_y row counts differ")
    n = x.shape[0]
    if n < 2:
        raise DegenerateInput("SVR training needs at least 2 samples")

    k_mat = gram(hyper.kernel, x)
    max_updates = hyper.max_passes * n
    trace = np.empty(max_updates + 1)
    beta, n_acc, converged = _smo_solve(
        k_mat, y, hyper.c, hyper.epsilon, hyper.tolerance, max_updates, trace
    )
    if not converged:
        warnings.warn("SVR solver exhausted its update budget; returning the "
                      "best-so-far model flagged non-converged", stacklevel=2)

    g = y - k_mat @ beta
    c, eps, tol = hyper.c, hyper.epsilon, hyper.tolerance
    interior = (np.abs(beta) > tol) & (np.abs(beta) < c - tol)
    if interior.any():
        bias = float(np.mean(g[interior] - eps * np.sign(beta[interior])))
    else:
        lo, hi = bias_interval(beta, g, c, eps)
        lo_max = float(np.max(lo)) if np.isfinite(lo).any() else float(np.max(g)) - eps
        hi_min = float(np.min(hi)) if np.isfinite(hi).any() else float(np.min(g)) + eps
        if not np.isfinite(lo_max):
            lo_max = hi_min
        if not np.isfinite(hi_min):
            hi_min = lo_max
        bias = 0.5 * (lo_max + hi_min)

    keep = beta != 0.0
    return SvrModel(
        support_x=x[keep].copy(),
        dual_coeffs=beta[keep].copy(),
        bias=bias,
        hyper=hyper,
        converged=converged,
        objective_trace=trace[: n_acc + 1].copy() if collect_trace else None,
    )


def predict(model: SvrModel, x) -> float:
    """Kernel expansion over retained samples plus bias."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if model.support_x.shape[0] == 0:
        return model.bias
    if x.shape[0] != model.support_x.shape[1]:
        raise DimensionMismatch("query dimension does not match training dimension")
    k = gram(model.hyper.kernel, model.support_x, x[None, :])[:, 0]
    return float(model.dual_coeffs @ k + model.bias)


def predict_batch(model: SvrModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if model.support_x.shape[0] == 0:
        return np.full(x.shape[0], model.bias)
    if x.shape[1] != model.support_x.shape[1]:
        raise DimensionMismatch("query dimension does not match training dimension")
    k = gram(model.hyper.kernel, x, model.support_x)
    return k @ model.dual_coeffs + model.bias


def dual_objective(coeffs: np.ndarray, k_mat: np.ndarray, y: np.ndarray,
                   epsilon: float) -> float:
    """Dual objective value for a coefficient vector (diagnostics only)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return float(coeffs @ y - 0.5 * coeffs @ k_mat @ coeffs
                 - epsilon * np.sum(np.abs(coeffs)))
