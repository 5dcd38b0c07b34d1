"""Seeded parameter generation and network sampling.

Dyad (i, j), i < j, owns position ``j * (j - 1) / 2 + i`` of a Philox stream
keyed by the seed. The position does not depend on n, so the same seed gives
the same uniform to a dyad whatever the network size or iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import GlobalParams, Network, NodeParams

GROUP_RHO = {"group1": 0.6, "group2": 0.3, "group3": -0.7, "sparse_uniform": 0.3}
KINDS = ("group1", "group2", "group3", "sparse_uniform", "explicit")


@dataclass(frozen=True)
class ParamSpec:
    """How to generate a parameter set.

    ``mu`` of ``None`` picks the kind's default: 1 for the dense groups and
    ``min(1, 10 n^(-2/3))`` for ``sparse_uniform``. ``explicit`` takes the
    vectors from ``alpha`` / ``beta``.
    """

    kind: str
    n: int
    B: float = 1.0
    rho: Optional[float] = None
    mu: Optional[float] = None
    alpha: Optional[Sequence[float]] = None
    beta: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.kind == "explicit" and (self.alpha is None or self.beta is None or self.rho is None):
            raise ValueError("explicit parameters need alpha, beta and rho")

    @property
    def resolved_rho(self) -> float:
        return GROUP_RHO[self.kind] if self.rho is None else float(self.rho)

    @property
    def resolved_mu(self) -> float:
        if self.mu is not None:
            return float(self.mu)
        if self.kind == "sparse_uniform":
            return sparse_mu(self.n)
        return 1.0


def sparse_mu(n: int) -> float:
    """Known density level 10 n^(-2/3), clamped at 1 for small n."""
    return min(1.0, 10.0 * n ** (-2.0 / 3.0))


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def gen_params(spec: ParamSpec, seed: int) -> tuple[NodeParams, GlobalParams]:
    n = spec.n
    rng = np.random.default_rng(seed)
    if spec.kind in ("group1", "sparse_uniform"):
        alpha = rng.uniform(-1.0, 1.0, n)
        beta = rng.uniform(-1.0, 1.0, n)
    elif spec.kind == "group2":
        alpha = rng.standard_normal(n)
        beta = rng.standard_normal(n)
    elif spec.kind == "group3":
        alpha = np.where(rng.random(n) < 0.5, 0.3, 0.7)
        beta = np.where(rng.random(n) < 0.5, 0.4, 0.6)
    else:
        alpha = np.array(spec.alpha, dtype=float)
        beta = np.array(spec.beta, dtype=float)
        if alpha.shape != (n,) or beta.shape != (n,):
            raise ValueError("explicit alpha/beta must have length n")
    alpha[0] = 0.0
    return NodeParams(alpha, beta), GlobalParams(spec.resolved_rho, spec.resolved_mu)


def dyad_index(i, j):
    """Stream position of the unordered pair {i, j}."""
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return hi * (hi - 1) // 2 + lo


def dyad_uniforms(n: int, seed: int) -> np.ndarray:
    """Uniforms for all pairs i < j, indexed by :func:`dyad_index`."""
    m = n * (n - 1) // 2
    return np.random.Generator(np.random.Philox(key=seed)).random(m)


def dyad_state_probs(params: NodeParams, globals_: GlobalParams, i, j) -> np.ndarray:
    """Sparse dyad law for arrays of pairs; columns in state order (0,0),(1,0),(0,1),(1,1)."""
    t1 = params.alpha[i] + params.beta[j]
    t2 = params.alpha[j] + params.beta[i]
    logits = np.stack([np.zeros_like(t1), t1, t2, t1 + t2 + globals_.rho], axis=1)
    logits -= logits.max(axis=1, keepdims=True)
    g = np.exp(logits)
    g /= g.sum(axis=1, keepdims=True)
    mu = globals_.mu
    p = g * mu
    p[:, 0] = 1.0 - mu * (g[:, 1] + g[:, 2] + g[:, 3])
    if np.any(p[:, 0] <= 0.0):
        raise ValueError("sparse dyad law leaves no mass on the empty state")
    return p


def sample_network(params: NodeParams, globals_: GlobalParams, seed: int) -> Network:
    """Draw every dyad independently by inverse CDF on its own uniform."""
    n = params.n
    u = dyad_uniforms(n, seed)
    j, i = _pair_arrays(n)
    p = dyad_state_probs(params, globals_, i, j)
    cdf = np.cumsum(p, axis=1)
    state = (u[:, None] >= cdf[:, :3]).sum(axis=1)
    a_ij = (state == 1) | (state == 3)
    a_ji = (state == 2) | (state == 3)
    edges = np.concatenate([
        np.stack([i[a_ij], j[a_ij]], axis=1),
        np.stack([j[a_ji], i[a_ji]], axis=1),
    ])
    return Network(n, edges)


def _pair_arrays(n: int):
    # (hi, lo) pairs enumerated in stream order: position k <-> (hi, lo)
    hi, lo = np.tril_indices(n, k=-1)
    return hi, lo


def perturb_params(params: NodeParams, magnitude: float, seed: int) -> NodeParams:
    """Add independent Uniform[-magnitude, magnitude] noise to every alpha_i and beta_i."""
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    rng = np.random.default_rng(seed)
    eps = rng.uniform(-magnitude, magnitude, size=(2, params.n))
    return NodeParams(params.alpha + eps[0], params.beta + eps[1])


def write_edgelist(network: Network, path) -> None:
    """Write ``n <n>`` then one 1-based ``i j`` line per directed edge."""
    lines = [f"n {network.n}"]
    lines += [f"{s + 1} {t + 1}" for s, t in network.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Network:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("n "):
        raise ValueError(f"{path}:1: expected header 'n <n>'")
    try:
        n = int(text[0].split()[1])
    except (IndexError, ValueError):
        raise ValueError(f"{path}:1: malformed header {text[0]!r}") from None
    edges = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'i j', got {line!r}")
        try:
            s, t = int(parts[0]) - 1, int(parts[1]) - 1
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected integers, got {line!r}") from None
        edges.append((s, t))
    return Network(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
