"""Compiled inner loops shared by the likelihood, estimator and grid search.

Every kernel works on a dense ``uint8`` adjacency matrix ``A`` where
``A[i, j] == 1`` means the directed edge i -> j is present. Dyad (i, j) seen
from node i has ``theta1 = alpha[i] + beta[j]`` on ``A[i, j]`` and
``theta2 = alpha[j] + beta[i]`` on ``A[j, i]``.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _log_partition(t1, t2, rho):
    t12 = t1 + t2 + rho
    m = max(max(0.0, t1), max(t2, t12))
    return m + math.log(math.exp(-m) + math.exp(t1 - m) + math.exp(t2 - m) + math.exp(t12 - m))


@njit(cache=True)
def dyad_terms(t1, t2, rho, mu, a, b):
    """Log-probability, score and Hessian of one dyad in (theta1, theta2, rho).

    Returns ``(logp, s1, s2, s3, h11, h12, h22, h13, h23, h33)``.
    """
    t12 = t1 + t2 + rho
    if max(t1, t2, t12) < 300.0:
        e1 = math.exp(t1)
        e2 = math.exp(t2)
        e12 = math.exp(t12)
        z = 1.0 + e1 + e2 + e12
        log_z = math.log(z)
        m11 = e12 / z
        m1 = (e1 + e12) / z
        m2 = (e2 + e12) / z
        inv_z = 1.0 / z
    else:
        log_z = _log_partition(t1, t2, rho)
        m11 = math.exp(t12 - log_z)
        m1 = math.exp(t1 - log_z) + m11
        m2 = math.exp(t2 - log_z) + m11
        inv_z = math.exp(-log_z)
    c11 = m1 * (1.0 - m1)
    c22 = m2 * (1.0 - m2)
    c33 = m11 * (1.0 - m11)
    c12 = m11 - m1 * m2
    c13 = m11 * (1.0 - m1)
    c23 = m11 * (1.0 - m2)
    if a != 0 or b != 0:
        logp = a * t1 + b * t2 + rho * a * b - log_z
        if mu < 1.0:
            logp += math.log(mu)
        return (logp, a - m1, b - m2, a * b - m11, -c11, -c12, -c22, -c13, -c23, -c33)
    if mu >= 1.0:
        return (-log_z, -m1, -m2, -m11, -c11, -c12, -c22, -c13, -c23, -c33)
    # empty state keeps 1 - mu + mu / Z; both terms are positive so no cancellation
    p00 = (1.0 - mu) + mu * inv_z
    logp = math.log(p00)
    w = mu * inv_z / p00
    k = w * (1.0 - w)
    return (
        logp,
        -w * m1,
        -w * m2,
        -w * m11,
        k * m1 * m1 - w * c11,
        k * m1 * m2 - w * c12,
        k * m2 * m2 - w * c22,
        k * m1 * m11 - w * c13,
        k * m2 * m11 - w * c23,
        k * m11 * m11 - w * c33,
    )


@njit(cache=True)
def node_terms(A, i, ai, bi, alpha, beta, rho, mu):
    """ell_i with node i moved to (ai, bi), plus its gradient and Hessian in (alpha_i, beta_i).

    Returns ``(ell, g_alpha, g_beta, h_aa, h_ab, h_bb)``.
    """
    n = A.shape[0]
    ell = 0.0
    ga = 0.0
    gb = 0.0
    haa = 0.0
    hab = 0.0
    hbb = 0.0
    for j in range(n):
        if j == i:
            continue
        r = dyad_terms(ai + beta[j], alpha[j] + bi, rho, mu, A[i, j], A[j, i])
        ell += r[0]
        ga += r[1]
        gb += r[2]
        haa += r[4]
        hab += r[5]
        hbb += r[6]
    return ell, ga, gb, haa, hab, hbb


@njit(cache=True)
def node_loglik_only(A, i, ai, bi, alpha, beta, rho, mu):
    n = A.shape[0]
    ell = 0.0
    for j in range(n):
        if j != i:
            ell += dyad_terms(ai + beta[j], alpha[j] + bi, rho, mu, A[i, j], A[j, i])[0]
    return ell


@njit(cache=True)
def pair_sums(A, alpha, beta, rho, mu):
    """One sweep over unordered pairs.

    Returns ``(ell, d_rho, d2_rho, grad_alpha, grad_beta)`` where the gradients
    are the per-node derivatives of ell_i (equivalently of ell).
    """
    n = A.shape[0]
    ga = np.zeros(n)
    gb = np.zeros(n)
    ell = 0.0
    d1 = 0.0
    d2 = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = dyad_terms(alpha[i] + beta[j], alpha[j] + beta[i], rho, mu, A[i, j], A[j, i])
            ell += r[0]
            ga[i] += r[1]
            gb[j] += r[1]
            ga[j] += r[2]
            gb[i] += r[2]
            d1 += r[3]
            d2 += r[9]
    return ell, d1, d2, ga, gb


@njit(cache=True)
def grid_node_search(A, i, values, alpha, beta, rho, mu, fixed_alpha):
    """Exhaustive search of ell_i over values x values.

    Returns the (alpha, beta) index pair of the maximizer; ties go to the
    lexicographically smallest pair. With ``fixed_alpha`` the alpha
    coordinate stays at ``alpha[i]`` and the returned alpha index is -1.
    """
    k = values.shape[0]
    best = -np.inf
    best_a = -1
    best_b = -1
    if fixed_alpha:
        for q in range(k):
            v = node_loglik_only(A, i, alpha[i], values[q], alpha, beta, rho, mu)
            if v > best:
                best = v
                best_b = q
        return best_a, best_b
    for p in range(k):
        for q in range(k):
            v = node_loglik_only(A, i, values[p], values[q], alpha, beta, rho, mu)
            if v > best:
                best = v
                best_a = p
                best_b = q
    return best_a, best_b
