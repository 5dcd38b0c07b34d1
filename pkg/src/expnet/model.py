"""Dyad distribution and likelihood of the directed exponential network model
with a reciprocity interaction.

Each unordered pair {i, j} carries the joint state ``(a_ij, a_ji)``. In the
dense model the state has probability

    g(a, b) = exp(theta1 * a + theta2 * b + rho * a * b) / Z,
    theta1 = alpha_i + beta_j,  theta2 = alpha_j + beta_i,

and the sparse model scales every non-empty state by ``mu`` and puts the
remaining mass on ``(0, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from . import _kernels

#: |det| (or |second derivative|) below which a curvature is treated as singular.
SINGULAR_TOL = 1e-12

STATES = ((0, 0), (1, 0), (0, 1), (1, 1))


class DyadOutcome(NamedTuple):
    a_ij: int
    a_ji: int


@dataclass(frozen=True)
class NodeParams:
    """Out-propensities ``alpha`` and in-propensities ``beta`` of the n nodes."""

    alpha: np.ndarray
    beta: np.ndarray
    bound: Optional[float] = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        if alpha.size < 2:
            raise ValueError("need at least two nodes")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("node parameters must be finite")
        if self.bound is not None:
            if max(np.abs(alpha).max(), np.abs(beta).max()) > self.bound:
                raise ValueError(f"node parameters exceed the bound {self.bound}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.alpha.size

    def shifted(self, x: float) -> "NodeParams":
        """The equivalent parameters (alpha - x, beta + x)."""
        return NodeParams(self.alpha - x, self.beta + x)


@dataclass(frozen=True)
class GlobalParams:
    rho: float
    mu: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.rho):
            raise ValueError("rho must be finite")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")


@dataclass(frozen=True, eq=False)
class Network:
    """Directed network on nodes 0..n-1 holding only the present edges.

    ``edges`` is an (m, 2) integer array of (source, target) pairs, kept sorted.
    """

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            uniq = np.unique(e, axis=0)
            if len(uniq) != len(e):
                raise ValueError("duplicate edges")
            e = uniq
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_adjacency(cls, A) -> "Network":
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(np.diag(A)):
            raise ValueError("self-loops are not allowed")
        return cls(A.shape[0], np.argwhere(A != 0))

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.uint8)
        if len(self.edges):
            A[self.edges[:, 0], self.edges[:, 1]] = 1
        return A

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def dyad(self, i: int, j: int) -> DyadOutcome:
        A = self.adjacency
        return DyadOutcome(int(A[i, j]), int(A[j, i]))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))


@dataclass(frozen=True)
class DyadPmf:
    p00: float
    p10: float
    p01: float
    p11: float
    z: float

    def __post_init__(self):
        probs = self.as_array()
        if np.any(probs <= 0.0):
            raise ValueError("dyad probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("dyad probabilities must sum to one")

    def as_array(self) -> np.ndarray:
        """Probabilities in state order (0,0), (1,0), (0,1), (1,1)."""
        return np.array([self.p00, self.p10, self.p01, self.p11])

    def __getitem__(self, outcome) -> float:
        a, b = outcome
        return (self.p00, self.p10, self.p01, self.p11)[a + 2 * b]


def _logits(theta1, theta2, rho):
    return np.array([0.0, theta1, theta2, theta1 + theta2 + rho])


def dyad_partition(theta1: float, theta2: float, rho: float) -> float:
    """Normalizer Z = 1 + e^theta1 + e^theta2 + e^(theta1 + theta2 + rho)."""
    return float(np.exp(logsumexp(_logits(theta1, theta2, rho))))


def dyad_pmf_dense(theta1: float, theta2: float, rho: float) -> DyadPmf:
    logits = _logits(theta1, theta2, rho)
    # p_k = 1 / sum_j exp(l_j - l_k): exact on the textbook cases and overflow-safe
    with np.errstate(over="ignore"):
        p = 1.0 / np.exp(logits[None, :] - logits[:, None]).sum(axis=1)
        z = float(np.exp(logsumexp(logits)))
    return DyadPmf(*p, z=z)


def dyad_pmf_sparse(theta1: float, theta2: float, rho: float, mu: float) -> DyadPmf:
    """Sparse dyad law: non-empty states get ``mu * g``, (0,0) takes the rest.

    Raises ``ValueError`` when the empty state would be left without mass.
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    dense = dyad_pmf_dense(theta1, theta2, rho)
    if mu == 1.0:
        return dense
    logits = _logits(theta1, theta2, rho)
    # 1 - g00 computed from the non-empty logits directly
    occupied = math.exp(logsumexp(logits[1:]) - logsumexp(logits))
    if mu * occupied > 1.0 - 1e-12:
        raise ValueError("sparse dyad law leaves no mass on the empty state")
    p00 = -math.expm1(math.log(mu) + math.log(occupied))
    return DyadPmf(p00, mu * dense.p10, mu * dense.p01, mu * dense.p11, z=dense.z)


def dyad_loglik(outcome, theta1: float, theta2: float, rho: float, mu: float = 1.0) -> float:
    """Log-probability of an observed dyad state under the sparse law."""
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    a, b = outcome
    return _kernels.dyad_terms(theta1, theta2, rho, mu, a, b)[0]


def dyad_score(outcome, theta1: float, theta2: float, rho: float) -> tuple:
    """Derivatives of log g at the observed state in (theta1, theta2, rho), dense model."""
    a, b = outcome
    r = _kernels.dyad_terms(theta1, theta2, rho, 1.0, a, b)
    return r[1], r[2], r[3]


def _check_node(network: Network, params: NodeParams, i: int):
    if params.n != network.n:
        raise ValueError("parameter length does not match the network size")
    if not 0 <= i < network.n:
        raise IndexError(f"node index {i} out of range")


def node_loglik(network: Network, i: int, params: NodeParams, globals_: GlobalParams) -> float:
    """ell_i: sum of the log-probabilities of the n - 1 dyads containing node i."""
    _check_node(network, params, i)
    return _kernels.node_loglik_only(
        network.adjacency, i, params.alpha[i], params.beta[i],
        params.alpha, params.beta, globals_.rho, globals_.mu,
    )


def total_loglik(network: Network, params: NodeParams, globals_: GlobalParams) -> float:
    if params.n != network.n:
        raise ValueError("parameter length does not match the network size")
    return _kernels.pair_sums(network.adjacency, params.alpha, params.beta, globals_.rho, globals_.mu)[0]


def node_gradient(network: Network, i: int, params: NodeParams, globals_: GlobalParams) -> np.ndarray:
    """(d ell_i / d alpha_i, d ell_i / d beta_i)."""
    _check_node(network, params, i)
    r = _kernels.node_terms(
        network.adjacency, i, params.alpha[i], params.beta[i],
        params.alpha, params.beta, globals_.rho, globals_.mu,
    )
    return np.array([r[1], r[2]])


def node_hessian(network: Network, i: int, params: NodeParams, globals_: GlobalParams) -> np.ndarray:
    """2x2 matrix of second derivatives of ell_i in (alpha_i, beta_i).

    Use :func:`is_singular` to detect a curvature too flat to invert.
    """
    _check_node(network, params, i)
    r = _kernels.node_terms(
        network.adjacency, i, params.alpha[i], params.beta[i],
        params.alpha, params.beta, globals_.rho, globals_.mu,
    )
    return np.array([[r[3], r[4]], [r[4], r[5]]])


def is_singular(curvature) -> bool:
    """True when a Hessian (matrix or scalar) cannot be safely inverted."""
    c = np.atleast_2d(np.asarray(curvature, dtype=float))
    return bool(abs(np.linalg.det(c)) < SINGULAR_TOL)


def rho_derivatives(network: Network, params: NodeParams, globals_: GlobalParams) -> tuple:
    """First and second derivative of the total log-likelihood in rho."""
    if params.n != network.n:
        raise ValueError("parameter length does not match the network size")
    _, d1, d2, _, _ = _kernels.pair_sums(
        network.adjacency, params.alpha, params.beta, globals_.rho, globals_.mu
    )
    return d1, d2


def dyad_logprobs(network: Network, params: NodeParams, globals_: GlobalParams) -> np.ndarray:
    """Per-dyad log-probabilities for all pairs i < j, in row-major order."""
    A = network.adjacency
    iu, ju = np.triu_indices(network.n, k=1)
    t1 = params.alpha[iu] + params.beta[ju]
    t2 = params.alpha[ju] + params.beta[iu]
    return np.array([
        _kernels.dyad_terms(x, y, globals_.rho, globals_.mu, A[i, j], A[j, i])[0]
        for x, y, i, j in zip(t1, t2, iu, ju)
    ])


def score_matrix(theta1: float, theta2: float, rho: float) -> np.ndarray:
    """4x3 matrix whose rows are the dense-model scores at the four dyad states."""
    return np.array([dyad_score(s, theta1, theta2, rho) for s in STATES])


def information_rank_diagnostic(theta1: float, theta2: float, rho: float) -> float:
    """Smallest singular value of the 4x3 score matrix.

    A positive value means the three scores are linearly independent across the
    four states, i.e. the dyad Fisher information in (theta1, theta2, rho) has
    full rank.
    """
    return float(np.linalg.svd(score_matrix(theta1, theta2, rho), compute_uv=False)[-1])
