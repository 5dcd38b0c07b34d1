"""Coordinate-descent maximum likelihood for the interaction model.

One outer round updates (alpha_i, beta_i) for i = 1..n in turn, each by a
Newton-Raphson or gradient-ascent sub-iteration on ell_i, then updates rho on
the total log-likelihood. Rounds repeat until the outer residual drops below
``outer_tol``.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .model import SINGULAR_TOL, Network, NodeParams

logger = logging.getLogger(__name__)

_MAX_HALVINGS = 60


def _ascended(ell_new, ell_old, slope_new):
    # slope_new: derivative at the candidate along the step; non-negative means the
    # concave objective rose along the whole segment even if rounding hides it
    return ell_new >= ell_old or slope_new >= 0.0


@dataclass
class FitConfig:
    """Algorithm choice and stopping rules.

    ``mu`` is either a known density level in (0, 1] or ``"plugin"`` to use
    the observed edge density. ``step_size=None`` sets each node's gradient
    step to the inverse of its largest diagonal curvature at the start of the
    sub-iteration (``1 / (mu * n)`` if that is degenerate); ``rho_step=None``
    does the same for rho.
    """

    subsolver: str = "newton"
    outer_tol: float = 1e-3
    sub_tol: float = 1e-4
    outer_criterion: str = "param_change"
    step_size: Optional[float] = None
    rho_step: Optional[float] = None
    max_outer_iters: int = 500
    max_sub_iters: int = 50
    mu: Union[float, str] = 1.0
    fix_alpha1: bool = False

    def __post_init__(self):
        if self.subsolver not in ("newton", "gradient"):
            raise ValueError(f"unknown subsolver {self.subsolver!r}")
        if self.outer_criterion not in ("param_change", "gradient_norm"):
            raise ValueError(f"unknown outer criterion {self.outer_criterion!r}")
        if self.outer_tol <= 0 or self.sub_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer_iters < 1 or self.max_sub_iters < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.rho_step is not None and self.rho_step <= 0:
            raise ValueError("rho_step must be positive")
        if isinstance(self.mu, str):
            if self.mu != "plugin":
                raise ValueError(f"mu must be a number or 'plugin', got {self.mu!r}")
        elif not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")

    @classmethod
    def newton_raphson(cls, **kw) -> "FitConfig":
        """Newton node updates, parameter-change stopping (outer 1e-3, inner 1e-4)."""
        return cls(**{"subsolver": "newton", "outer_tol": 1e-3, "sub_tol": 1e-4,
                      "outer_criterion": "param_change", **kw})

    @classmethod
    def gradient_ascent(cls, outer_tol: float = 0.05, **kw) -> "FitConfig":
        """Gradient node updates, gradient-norm stopping (inner 1e-3)."""
        return cls(**{"subsolver": "gradient", "outer_tol": outer_tol, "sub_tol": 1e-3,
                      "outer_criterion": "gradient_norm", **kw})


@dataclass
class FitResult:
    params: NodeParams
    rho: float
    mu_used: float
    outer_iters: int
    converged: bool
    residual_trace: list = field(default_factory=list)
    loglik_trace: list = field(default_factory=list)
    sub_cap_hits: int = 0

    def to_dict(self) -> dict:
        return {
            "alpha": self.params.alpha.tolist(),
            "beta": self.params.beta.tolist(),
            "rho": self.rho,
            "mu_used": self.mu_used,
            "outer_iters": self.outer_iters,
            "converged": self.converged,
            "residual_trace": list(self.residual_trace),
            "loglik_trace": list(self.loglik_trace),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(
            params=NodeParams(np.array(d["alpha"]), np.array(d["beta"])),
            rho=float(d["rho"]),
            mu_used=float(d["mu_used"]),
            outer_iters=int(d["outer_iters"]),
            converged=bool(d["converged"]),
            residual_trace=list(d["residual_trace"]),
            loglik_trace=list(d["loglik_trace"]),
        )


@dataclass
class SubResult:
    """Outcome of one coordinate sub-iteration."""

    value: tuple
    iters: int
    cap_hit: bool


def estimate_mu_bar(network: Network) -> float:
    """Observed directed-edge density, m / (n (n - 1)).

    Warns and returns 0 for an empty network; fitting must not use that value.
    """
    n = network.n
    if n < 2:
        raise ValueError("n must be at least 2")
    if network.n_edges == 0:
        warnings.warn("empty network: plug-in density is zero", RuntimeWarning, stacklevel=2)
        return 0.0
    return network.n_edges / (n * (n - 1))


def _default_step(mu: float, n: int) -> float:
    return 1.0 / (mu * n)


def _curvature_step(haa, hbb, fix_alpha, mu, n):
    c = abs(hbb) if fix_alpha else max(abs(haa), abs(hbb))
    return 1.0 / c if c > SINGULAR_TOL else _default_step(mu, n)


def newton_node_update(network, i, alpha, beta, rho, mu, sub_tol=1e-4, max_sub_iters=50,
                       step_size=None, fix_alpha=False) -> SubResult:
    """Newton-Raphson on ell_i in (alpha_i, beta_i), other coordinates held fixed.

    Stops when the largest coordinate change of a step is below ``sub_tol``.
    A singular or non-concave Hessian, or a Newton step that lowers ell_i,
    triggers a gradient step with halving instead.
    """
    A = network.adjacency if isinstance(network, Network) else network
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a, b = alpha[i], beta[i]
    ell, ga, gb, haa, hab, hbb = _kernels.node_terms(A, i, a, b, alpha, beta, rho, mu)
    step = _curvature_step(haa, hbb, fix_alpha, mu, A.shape[0]) if step_size is None else step_size
    if fix_alpha:
        ga = hab = 0.0
    for s in range(1, max_sub_iters + 1):
        da = db = None
        if fix_alpha:
            if hbb < -SINGULAR_TOL:
                da, db = 0.0, -gb / hbb
        else:
            det = haa * hbb - hab * hab
            if abs(det) >= SINGULAR_TOL and haa < 0 and det > 0:
                da = (-hbb * ga + hab * gb) / det
                db = (hab * ga - haa * gb) / det
        moved = False
        if da is not None:
            cand = _kernels.node_terms(A, i, a + da, b + db, alpha, beta, rho, mu)
            if _ascended(cand[0], ell, cand[1] * da + cand[2] * db):
                a, b = a + da, b + db
                ell, ga, gb, haa, hab, hbb = cand
                moved = True
            elif max(abs(da), abs(db)) < sub_tol:
                # converged up to rounding; stay put
                return SubResult((a, b), s, False)
        if not moved:
            da, db, cand = _ascent_step(A, i, a, b, ga, gb, ell, alpha, beta, rho, mu, step / 2)
            if cand is None:
                return SubResult((a, b), s, False)
            a, b = a + da, b + db
            ell, ga, gb, haa, hab, hbb = cand
        if fix_alpha:
            ga = hab = 0.0
        if max(abs(da), abs(db)) < sub_tol:
            return SubResult((a, b), s, False)
    return SubResult((a, b), max_sub_iters, True)


def _ascent_step(A, i, a, b, ga, gb, ell, alpha, beta, rho, mu, step):
    for _ in range(_MAX_HALVINGS):
        da, db = step * ga, step * gb
        cand = _kernels.node_terms(A, i, a + da, b + db, alpha, beta, rho, mu)
        if _ascended(cand[0], ell, cand[1] * da + cand[2] * db):
            return da, db, cand
        step /= 2
    return 0.0, 0.0, None


def gradient_node_update(network, i, alpha, beta, rho, mu, sub_tol=1e-3, step_size=None,
                         max_sub_iters=50, fix_alpha=False) -> SubResult:
    """Gradient ascent on ell_i with backtracking, until max |grad| < ``sub_tol``."""
    A = network.adjacency if isinstance(network, Network) else network
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a, b = alpha[i], beta[i]
    ell, ga, gb, haa, _, hbb = _kernels.node_terms(A, i, a, b, alpha, beta, rho, mu)
    step = _curvature_step(haa, hbb, fix_alpha, mu, A.shape[0]) if step_size is None else step_size
    for s in range(max_sub_iters):
        if fix_alpha:
            ga = 0.0
        if max(abs(ga), abs(gb)) < sub_tol:
            return SubResult((a, b), s, False)
        da, db, cand = _ascent_step(A, i, a, b, ga, gb, ell, alpha, beta, rho, mu, step)
        if cand is None:
            return SubResult((a, b), s + 1, False)
        a, b = a + da, b + db
        ell, ga, gb = cand[0], cand[1], cand[2]
    if fix_alpha:
        ga = 0.0
    return SubResult((a, b), max_sub_iters, max(abs(ga), abs(gb)) >= sub_tol)


def rho_update(network, alpha, beta, rho, mu, subsolver="newton", sub_tol=1e-4,
               step_size=None, max_sub_iters=50) -> SubResult:
    """Maximize the total log-likelihood over rho with everything else fixed.

    ``newton`` stops on |step| < ``sub_tol``; ``gradient`` stops on
    |d ell / d rho| < ``sub_tol``.
    """
    A = network.adjacency if isinstance(network, Network) else network
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    ell, d1, d2, _, _ = _kernels.pair_sums(A, alpha, beta, rho, mu)
    if step_size is None:
        step_size = 1.0 / abs(d2) if abs(d2) >= SINGULAR_TOL else 2.0 / (mu * A.shape[0] ** 2)
    for s in range(1, max_sub_iters + 1):
        if subsolver == "gradient" and abs(d1) < sub_tol:
            return SubResult((rho,), s - 1, False)
        delta = None
        if subsolver == "newton" and d2 < -SINGULAR_TOL:
            delta = -d1 / d2
            cand = _kernels.pair_sums(A, alpha, beta, rho + delta, mu)
            if not _ascended(cand[0], ell, cand[1] * delta):
                if abs(delta) < sub_tol:
                    return SubResult((rho,), s, False)
                delta = None
        if delta is None:
            t = step_size if subsolver == "gradient" else step_size / 2
            for _ in range(_MAX_HALVINGS):
                delta = t * d1
                cand = _kernels.pair_sums(A, alpha, beta, rho + delta, mu)
                if _ascended(cand[0], ell, cand[1] * delta):
                    break
                t /= 2
            else:
                return SubResult((rho,), s, False)
        rho += delta
        ell, d1, d2 = cand[0], cand[1], cand[2]
        if subsolver == "newton" and abs(delta) < sub_tol:
            return SubResult((rho,), s, False)
    done = abs(d1) < sub_tol if subsolver == "gradient" else False
    return SubResult((rho,), max_sub_iters, not done)


def coordinate_descent_fit(network: Network, init, config: FitConfig) -> FitResult:
    """Cyclic coordinate ascent over nodes 1..n then rho.

    ``init`` is ``(NodeParams, rho)``. Non-convergence is reported through
    ``converged=False``, never raised.
    """
    params0, rho = init
    if params0.n != network.n:
        raise ValueError("initial parameters do not match the network size")
    mu = _resolve_mu(network, config)
    A = network.adjacency
    n = network.n
    alpha = params0.alpha.copy()
    beta = params0.beta.copy()
    rho = float(rho)
    if config.fix_alpha1:
        alpha[0] = 0.0
    step = config.step_size

    residuals, logliks = [], []
    cap_hits = 0
    converged = False
    t = 0
    for t in range(1, config.max_outer_iters + 1):
        prev_alpha, prev_beta, prev_rho = alpha.copy(), beta.copy(), rho
        for i in range(n):
            fixed = config.fix_alpha1 and i == 0
            if config.subsolver == "newton":
                res = newton_node_update(A, i, alpha, beta, rho, mu, config.sub_tol,
                                         config.max_sub_iters, step, fixed)
            else:
                res = gradient_node_update(A, i, alpha, beta, rho, mu, config.sub_tol,
                                           step, config.max_sub_iters, fixed)
            alpha[i], beta[i] = res.value
            cap_hits += res.cap_hit
        res = rho_update(A, alpha, beta, rho, mu, config.subsolver, config.sub_tol,
                         config.rho_step, config.max_sub_iters)
        rho = res.value[0]
        cap_hits += res.cap_hit

        ell, d_rho, _, ga, gb = _kernels.pair_sums(A, alpha, beta, rho, mu)
        if config.outer_criterion == "param_change":
            e = max(np.abs(alpha - prev_alpha).max(), np.abs(beta - prev_beta).max(), abs(rho - prev_rho))
        else:
            if config.fix_alpha1:
                ga = ga[1:]
            e = max(np.abs(ga).max(initial=0.0), np.abs(gb).max(), abs(d_rho))
        residuals.append(float(e))
        logliks.append(float(ell))
        logger.debug("round %d: residual %.3g loglik %.6f", t, e, ell)
        if e < config.outer_tol:
            converged = True
            break
    if cap_hits:
        logger.info("%d sub-iterations hit the iteration cap", cap_hits)
    return FitResult(NodeParams(alpha, beta), rho, mu, t, converged, residuals, logliks, cap_hits)


def _resolve_mu(network: Network, config: FitConfig) -> float:
    if config.mu == "plugin":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mu = estimate_mu_bar(network)
        if mu == 0.0:
            raise ValueError("plug-in density of an empty network is zero; cannot fit")
        return mu
    return float(config.mu)


def stat_indices(n: int) -> dict:
    """0-based node indices behind the seven reported statistics."""
    mid = math.ceil(n / 2) - 1
    return {"stat_a2": ("alpha", 1), "stat_amid": ("alpha", mid), "stat_an": ("alpha", n - 1),
            "stat_b1": ("beta", 0), "stat_bmid": ("beta", mid), "stat_bn": ("beta", n - 1)}


def fit_statistics(result: FitResult, truth) -> dict:
    """Scaled errors sqrt(n)(alpha_hat_i - alpha_i) for i in {2, ceil(n/2), n},
    sqrt(n)(beta_hat_i - beta_i) for i in {1, ceil(n/2), n} (1-based), and
    n (rho_hat - rho)."""
    params, rho = truth
    n = params.n
    out = {}
    for name, (which, k) in stat_indices(n).items():
        est = getattr(result.params, which)[k]
        out[name] = float(math.sqrt(n) * (est - getattr(params, which)[k]))
    out["stat_rho"] = float(n * (result.rho - rho))
    return out
