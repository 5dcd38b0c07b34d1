"""Error functionals for fitted node parameters and theoretical rate shapes.

Raw errors compare against the given truth coordinate by coordinate. Because
(alpha - x, beta + x) describes the same model for every real x, the
shift-adjusted variants also minimize over that family.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

RATE_KINDS = ("weak_l2", "uniform_cont", "uniform_disc", "expnet_uniform")


@dataclass(frozen=True)
class ErrorReport:
    delta_alpha: float
    delta_beta: float
    mse_bound: float
    uniform_bound: float
    shift_adjusted_mse: float
    shift_adjusted_uniform: float
    rho_error_sq: float

    def to_dict(self) -> dict:
        return asdict(self)


def _deviations(fit, truth):
    fa, fb = np.asarray(fit.alpha, dtype=float), np.asarray(fit.beta, dtype=float)
    ta, tb = np.asarray(truth.alpha, dtype=float), np.asarray(truth.beta, dtype=float)
    if fa.shape != ta.shape or fb.shape != tb.shape:
        raise ValueError("fit and truth must have equal lengths")
    return fa - ta, fb - tb


def mean_shifts(fit, truth) -> tuple:
    """(mean of alpha_hat - alpha, mean of beta_hat - beta)."""
    da, db = _deviations(fit, truth)
    return float(da.mean()), float(db.mean())


def mse_bound(fit, truth) -> float:
    da, db = _deviations(fit, truth)
    return float(np.mean(da ** 2 + db ** 2))


def uniform_bound(fit, truth) -> float:
    da, db = _deviations(fit, truth)
    return float(np.max(da ** 2 + db ** 2))


def _min_uniform_over_shift(da, db, tol=1e-10):
    # max_i of convex parabolas in x, so ternary search on the hull of their vertices
    vertices = (da - db) / 2
    lo, hi = float(vertices.min()), float(vertices.max())

    def f(x):
        return float(np.max((da - x) ** 2 + (db + x) ** 2))

    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return f((lo + hi) / 2)


def shift_adjusted_errors(fit, truth) -> tuple:
    """mse_bound and uniform_bound minimized over truths (alpha + x, beta - x)."""
    da, db = _deviations(fit, truth)
    x = (da.mean() - db.mean()) / 2
    adj_mse = float(np.mean((da - x) ** 2 + (db + x) ** 2))
    adj_uniform = _min_uniform_over_shift(da, db)
    return min(adj_mse, mse_bound(fit, truth)), min(adj_uniform, uniform_bound(fit, truth))


def error_report(fit, truth, rho_hat: float, rho_true: float) -> ErrorReport:
    d_alpha, d_beta = mean_shifts(fit, truth)
    adj_mse, adj_uniform = shift_adjusted_errors(fit, truth)
    return ErrorReport(
        delta_alpha=d_alpha,
        delta_beta=d_beta,
        mse_bound=mse_bound(fit, truth),
        uniform_bound=uniform_bound(fit, truth),
        shift_adjusted_mse=adj_mse,
        shift_adjusted_uniform=adj_uniform,
        rho_error_sq=(rho_hat - rho_true) ** 2,
    )


def rate_predictor(kind: str, n: float, mu: float = 1.0) -> float:
    """Asymptotic error rate with unit constant (shape only, for slope comparison).

    ``weak_l2``: squared l2 error of the continuous MLE, n^(1/2) mu^(-1/2) (log n)^2.
    ``uniform_cont``: squared sup error of the continuous MLE, n^(-1/4) mu^(-5/4) (log n)^2.
    ``uniform_disc``: squared sup error on the discretized space, n^(-1/3) mu^(-1/3) (log n)^(8/3).
    ``expnet_uniform``: sup error in the dense interaction model, n^(-1/8) (log n)^(1/2).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    log_n = math.log(n)
    if kind == "weak_l2":
        return n ** 0.5 * mu ** -0.5 * log_n ** 2
    if kind == "uniform_cont":
        return n ** -0.25 * mu ** -1.25 * log_n ** 2
    if kind == "uniform_disc":
        return n ** (-1 / 3) * mu ** (-1 / 3) * log_n ** (8 / 3)
    if kind == "expnet_uniform":
        return n ** -0.125 * math.sqrt(log_n)
    raise ValueError(f"unknown rate kind {kind!r}; expected one of {RATE_KINDS}")
