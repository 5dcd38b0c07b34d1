"""Maximum likelihood restricted to a finite grid of node parameters.

Each (alpha_i, beta_i) is confined to ``values x values`` for one shared
uniform grid on [-B, B], while rho stays continuous.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .estimator import FitConfig, FitResult, _resolve_mu, rho_update
from .model import Network, NodeParams

#: largest enumeration brute_force_discrete_mle will attempt
MAX_BRUTE_FORCE = 10 ** 7


@dataclass(frozen=True)
class Grid:
    values: np.ndarray
    h: float
    B: float
    d: int = 2

    @property
    def delta(self) -> float:
        """Smallest separation between distinct candidates of one coordinate."""
        return float(np.diff(self.values).min()) if self.values.size > 1 else math.inf

    @property
    def delta_prime(self) -> float:
        """Covering radius of the per-node product grid in the 2-norm."""
        return self.h * math.sqrt(self.d) / 2

    def to_dict(self) -> dict:
        return {"B": self.B, "h": self.h}


def build_uniform_grid(B: float, h: float) -> Grid:
    """Points -B, -B + h, ... with B always included (the last cell may be short)."""
    if h <= 0 or h > 2 * B:
        raise ValueError(f"spacing must satisfy 0 < h <= 2B, got h={h}, B={B}")
    k = int(math.floor(2 * B / h + 1e-9))
    values = -B + h * np.arange(k + 1)
    if B - values[-1] > 1e-9 * max(1.0, B):
        values = np.append(values, B)
    else:
        values[-1] = B
    return Grid(values, float(h), float(B))


def optimal_spacing(n: int, mu: float, c: float = 1.0, B: float = 1.0) -> float:
    """c n^(-1/6) mu^(-1/6) (log n)^(4/3), capped at 2B."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    if c <= 0:
        raise ValueError("c must be positive")
    h = c * n ** (-1 / 6) * mu ** (-1 / 6) * math.log(n) ** (4 / 3)
    return min(h, 2 * B)


def grid_from_spec(spec: dict, n: int, mu: float) -> Grid:
    """Grid from ``{"B": .., "h": ..}`` or ``{"B": .., "h": "optimal", "c": ..}``."""
    B = float(spec.get("B", 1.0))
    h = spec.get("h", "optimal")
    if h == "optimal":
        h = optimal_spacing(n, mu, float(spec.get("c", 1.0)), B)
    return build_uniform_grid(B, float(h))


def project_to_grid(params: NodeParams, grid: Grid) -> NodeParams:
    """Round every coordinate to its nearest grid value (ties to the smaller one)."""
    return NodeParams(_project(params.alpha, grid.values), _project(params.beta, grid.values))


def _project(x, values):
    x = np.asarray(x, dtype=float)
    if len(values) == 1:
        return np.full(x.shape, values[0])
    hi = np.clip(np.searchsorted(values, x), 1, len(values) - 1)
    lo = hi - 1
    take_hi = (values[hi] - x) < (x - values[lo])
    return np.where(take_hi, values[hi], values[lo])


def _on_grid(x, values) -> bool:
    return bool(np.all(np.isin(x, values)))


@dataclass
class DiscretizedFit(FitResult):
    """FitResult whose node coordinates are all grid values."""

    grid: Optional[Grid] = None


def discretized_fit(network: Network, init, grid: Grid, config: FitConfig) -> DiscretizedFit:
    """Coordinate ascent over the grid: exhaustive per-node search, continuous rho.

    Stops after a sweep that changes no node assignment and moves rho by less
    than ``config.outer_tol``.
    """
    params0, rho = init
    if params0.n != network.n:
        raise ValueError("initial parameters do not match the network size")
    values = grid.values
    if not (_on_grid(params0.alpha, values) and _on_grid(params0.beta, values)):
        raise ValueError("initial node parameters must lie on the grid")
    mu = _resolve_mu(network, config)
    A = network.adjacency
    alpha = params0.alpha.copy()
    beta = params0.beta.copy()
    rho = float(rho)
    residuals, logliks = [], []
    converged = False
    cap_hits = 0
    t = 0
    for t in range(1, config.max_outer_iters + 1):
        changed = 0
        for i in range(network.n):
            fixed = config.fix_alpha1 and i == 0
            p, q = _kernels.grid_node_search(A, i, values, alpha, beta, rho, mu, fixed)
            new_a = alpha[i] if fixed else values[p]
            new_b = values[q]
            changed += (new_a != alpha[i]) or (new_b != beta[i])
            alpha[i], beta[i] = new_a, new_b
        res = rho_update(A, alpha, beta, rho, mu, config.subsolver, config.sub_tol,
                         config.rho_step, config.max_sub_iters)
        cap_hits += res.cap_hit
        d_rho = abs(res.value[0] - rho)
        rho = res.value[0]
        residuals.append(float(max(changed, d_rho)))
        logliks.append(float(_kernels.pair_sums(A, alpha, beta, rho, mu)[0]))
        if changed == 0 and d_rho < config.outer_tol:
            converged = True
            break
    return DiscretizedFit(NodeParams(alpha, beta), rho, mu, t, converged, residuals, logliks,
                          cap_hits, grid=grid)


def _best_rho(A, alpha, beta, mu, rho_grid):
    if rho_grid is None:
        res = minimize_scalar(lambda r: -_kernels.pair_sums(A, alpha, beta, r, mu)[0],
                              bracket=(-1.0, 1.0), tol=1e-12)
        return float(res.x), -float(res.fun)
    best_r, best = None, -math.inf
    for r in rho_grid:
        v = _kernels.pair_sums(A, alpha, beta, float(r), mu)[0]
        if v > best:
            best_r, best = float(r), v
    return best_r, best


def brute_force_discrete_mle(network: Network, grid: Grid, rho_grid=None, mu: float = 1.0) -> DiscretizedFit:
    """Global maximizer of the log-likelihood over every grid assignment.

    ``rho_grid=None`` maximizes rho continuously for each assignment instead of
    scanning a finite set. Ties keep the lexicographically smallest assignment.
    """
    n = network.n
    values = grid.values
    n_rho = 1 if rho_grid is None else len(rho_grid)
    size = len(values) ** (2 * n) * n_rho
    if size > MAX_BRUTE_FORCE:
        raise ValueError(f"search space of {size} points exceeds {MAX_BRUTE_FORCE}")
    A = network.adjacency
    best, best_point = -math.inf, None
    # assignment order: (alpha_1, beta_1, alpha_2, beta_2, ...) lexicographic
    for combo in itertools.product(values, repeat=2 * n):
        arr = np.array(combo)
        alpha, beta = arr[0::2].copy(), arr[1::2].copy()
        r, v = _best_rho(A, alpha, beta, mu, rho_grid)
        if v > best:
            best, best_point = v, (alpha, beta, r)
    alpha, beta, r = best_point
    return DiscretizedFit(NodeParams(alpha, beta), r, mu, 0, True, [], [best], grid=grid)
