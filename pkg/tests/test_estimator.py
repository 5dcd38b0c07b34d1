import math
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar, root

from expnet.estimator import (
    FitConfig,
    FitResult,
    coordinate_descent_fit,
    estimate_mu_bar,
    fit_statistics,
    gradient_node_update,
    newton_node_update,
    rho_update,
    stat_indices,
)
from expnet.metrics import shift_adjusted_errors
from expnet.model import GlobalParams, Network, NodeParams, node_gradient, node_loglik, rho_derivatives, total_loglik
from expnet.sampler import ParamSpec, gen_params, sample_network


def random_instance(seed, n, mu=1.0, kind="group1"):
    params, g = gen_params(ParamSpec(kind, n, mu=mu), seed)
    return sample_network(params, g, seed + 1), params, g


def with_node(params, i, a, b):
    alpha, beta = params.alpha.copy(), params.beta.copy()
    alpha[i], beta[i] = a, b
    return NodeParams(alpha, beta)


# ---- configuration

def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(subsolver="bfgs")
    with pytest.raises(ValueError):
        FitConfig(outer_tol=0)
    with pytest.raises(ValueError):
        FitConfig(max_outer_iters=0)
    with pytest.raises(ValueError):
        FitConfig(mu="estimated")
    with pytest.raises(ValueError):
        FitConfig(mu=1.5)
    nr = FitConfig.newton_raphson()
    assert (nr.outer_tol, nr.sub_tol, nr.outer_criterion) == (1e-3, 1e-4, "param_change")
    ga = FitConfig.gradient_ascent()
    assert (ga.outer_tol, ga.sub_tol, ga.outer_criterion) == (0.05, 1e-3, "gradient_norm")


def test_estimate_mu_bar():
    assert estimate_mu_bar(Network(3, np.array([[0, 1], [1, 0], [2, 0]]))) == 0.5
    A = np.ones((4, 4), dtype=np.uint8)
    np.fill_diagonal(A, 0)
    assert estimate_mu_bar(Network.from_adjacency(A)) == 1.0
    with pytest.warns(RuntimeWarning):
        assert estimate_mu_bar(Network(4, np.empty((0, 2), dtype=np.int64))) == 0.0


def test_plugin_on_empty_network_is_an_error():
    net = Network(4, np.empty((0, 2), dtype=np.int64))
    init = (NodeParams(np.zeros(4), np.zeros(4)), 0.0)
    with pytest.raises(ValueError):
        coordinate_descent_fit(net, init, FitConfig(mu="plugin"))


# ---- node sub-solvers

def test_newton_reaches_node_stationary_point():
    net, params, g = random_instance(0, 8)
    res = newton_node_update(net, 2, params.alpha, params.beta, g.rho, g.mu, sub_tol=1e-12)
    assert not res.cap_hit
    moved = with_node(params, 2, *res.value)
    assert np.abs(node_gradient(net, 2, moved, g)).max() < 1e-8
    # independent root finder on the same 2-D gradient
    sol = root(lambda v: node_gradient(net, 2, with_node(params, 2, *v), g), [0.0, 0.0], tol=1e-13)
    assert np.allclose(res.value, sol.x, atol=1e-7)


def test_newton_at_stationary_point_returns_after_one_step():
    net, params, g = random_instance(1, 10)
    first = newton_node_update(net, 4, params.alpha, params.beta, g.rho, g.mu, sub_tol=1e-12)
    start = with_node(params, 4, *first.value)
    again = newton_node_update(net, 4, start.alpha, start.beta, g.rho, g.mu)
    assert again.iters == 1
    assert max(abs(again.value[0] - first.value[0]), abs(again.value[1] - first.value[1])) < 1e-4


def test_node_updates_never_lower_ell_i():
    rng = np.random.default_rng(7)
    for k in range(50):
        mu = 1.0 if k % 2 else 0.3
        net, params, g = random_instance(100 + k, 20, mu=mu)
        i = int(rng.integers(20))
        start = NodeParams(params.alpha + rng.uniform(-1, 1, 20), params.beta + rng.uniform(-1, 1, 20))
        before = node_loglik(net, i, start, g)
        for update in (newton_node_update, gradient_node_update):
            res = update(net, i, start.alpha, start.beta, g.rho, g.mu)
            after = node_loglik(net, i, with_node(start, i, *res.value), g)
            assert after >= before - 1e-10


def test_newton_gradient_at_entry_not_exceeded():
    for seed in range(10):
        net, params, g = random_instance(200 + seed, 15, mu=0.5)
        start = NodeParams(params.alpha + 0.7, params.beta - 0.4)
        g0 = np.abs(node_gradient(net, 3, start, g)).max()
        res = newton_node_update(net, 3, start.alpha, start.beta, g.rho, g.mu)
        if not res.cap_hit:
            assert np.abs(node_gradient(net, 3, with_node(start, 3, *res.value), g)).max() <= g0


def test_gradient_agrees_with_newton():
    net, params, g = random_instance(0, 8)
    nt = newton_node_update(net, 2, params.alpha, params.beta, g.rho, g.mu, sub_tol=1e-10)
    gr = gradient_node_update(net, 2, params.alpha, params.beta, g.rho, g.mu, sub_tol=1e-6, max_sub_iters=5000)
    assert abs(nt.value[0] - gr.value[0]) < 1e-3 and abs(nt.value[1] - gr.value[1]) < 1e-3


def test_gradient_update_zero_gradient_returns_immediately():
    net, params, g = random_instance(0, 8)
    nt = newton_node_update(net, 2, params.alpha, params.beta, g.rho, g.mu, sub_tol=1e-12)
    start = with_node(params, 2, *nt.value)
    res = gradient_node_update(net, 2, start.alpha, start.beta, g.rho, g.mu)
    assert res.iters == 0 and res.value == (start.alpha[2], start.beta[2])


def test_fixed_alpha_stays_put():
    net, params, g = random_instance(3, 12)
    for update in (newton_node_update, gradient_node_update):
        res = update(net, 0, params.alpha, params.beta, g.rho, g.mu, fix_alpha=True)
        assert res.value[0] == params.alpha[0]


def test_degenerate_node_reports_without_raising():
    # node 0 has every possible edge: no finite maximizer, sub-solver must stop gracefully
    n = 6
    A = np.zeros((n, n), dtype=np.uint8)
    A[0, 1:] = A[1:, 0] = 1
    net = Network.from_adjacency(A)
    z = np.zeros(n)
    res = newton_node_update(net, 0, z, z, 0.0, 1.0, max_sub_iters=20)
    assert res.value[0] > 0 and res.value[1] > 0 and np.isfinite(res.value).all()


# ---- rho

def test_rho_update_matches_golden_section():
    for seed in range(5):
        net, params, g = random_instance(300 + seed, 20)
        res = rho_update(net, params.alpha, params.beta, 0.0, g.mu, sub_tol=1e-8)
        f = lambda r: -total_loglik(net, params, GlobalParams(r, g.mu))
        gold = minimize_scalar(f, bracket=(-3, 0, 3), method="golden", tol=1e-10)
        assert abs(res.value[0] - gold.x) < 1e-3
        d1, _ = rho_derivatives(net, params, GlobalParams(res.value[0], g.mu))
        assert abs(d1) < 1e-4 or res.cap_hit
        gr = rho_update(net, params.alpha, params.beta, 0.0, g.mu, subsolver="gradient", sub_tol=1e-6,
                        max_sub_iters=500)
        assert abs(gr.value[0] - gold.x) < 1e-3


def test_rho_moves_up_on_fully_reciprocated_network():
    n = 10
    A = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(A, 0)
    z = np.zeros(n)
    for solver in ("newton", "gradient"):
        res = rho_update(Network.from_adjacency(A), z, z, 0.0, 1.0, subsolver=solver, max_sub_iters=3)
        assert res.value[0] > 0


# ---- full fits

def test_already_converged_init_returns_after_one_round():
    net, params, g = random_instance(5, 30)
    cfg = FitConfig.newton_raphson(outer_tol=1e-6, sub_tol=1e-10)
    first = coordinate_descent_fit(net, (params, g.rho), cfg)
    again = coordinate_descent_fit(net, (first.params, first.rho), FitConfig.newton_raphson())
    assert again.outer_iters == 1 and again.converged


@pytest.mark.parametrize("cfg", [FitConfig.newton_raphson(), FitConfig.gradient_ascent(0.01)])
def test_fit_ascends_and_converges(cfg):
    net, params, g = random_instance(6, 60)
    init = (NodeParams(np.zeros(60), np.zeros(60)), 0.0)
    start = total_loglik(net, init[0], GlobalParams(0.0))
    res = coordinate_descent_fit(net, init, cfg)
    assert res.converged
    assert res.loglik_trace[0] >= start - 1e-8
    assert all(b >= a - 1e-8 for a, b in zip(res.loglik_trace, res.loglik_trace[1:]))
    assert len(res.residual_trace) == res.outer_iters and np.isfinite(res.residual_trace).all()
    assert res.residual_trace[-1] < cfg.outer_tol


def test_nonconvergence_is_reported():
    net, params, g = random_instance(6, 40)
    res = coordinate_descent_fit(net, (NodeParams(np.zeros(40), np.zeros(40)), 0.0),
                                 FitConfig.newton_raphson(outer_tol=1e-12, max_outer_iters=2))
    assert not res.converged and res.outer_iters == 2


def test_fix_alpha1_pins_first_coordinate():
    net, params, g = random_instance(8, 25)
    init = NodeParams(params.alpha + 0.3, params.beta)
    res = coordinate_descent_fit(net, (init, g.rho), FitConfig.newton_raphson(fix_alpha1=True))
    assert res.params.alpha[0] == 0.0


def test_shifted_inits_reach_the_same_class():
    net, params, g = random_instance(9, 40)
    cfg = FitConfig.newton_raphson(outer_tol=1e-9, sub_tol=1e-11)
    a = coordinate_descent_fit(net, (params, g.rho), cfg)
    b = coordinate_descent_fit(net, (params.shifted(0.8), g.rho), cfg)
    ga = GlobalParams(a.rho, a.mu_used)
    gb = GlobalParams(b.rho, b.mu_used)
    assert abs(total_loglik(net, a.params, ga) - total_loglik(net, b.params, gb)) < 1e-6
    ea = shift_adjusted_errors(a.params, params)
    eb = shift_adjusted_errors(b.params, params)
    assert ea == pytest.approx(eb, abs=1e-6)


def test_sparse_plugin_fit():
    net, params, g = random_instance(10, 80, mu=0.3, kind="sparse_uniform")
    res = coordinate_descent_fit(net, (params, g.rho), FitConfig.gradient_ascent(mu="plugin"))
    assert res.mu_used == pytest.approx(estimate_mu_bar(net))
    assert res.converged


def test_fit_is_deterministic():
    net, params, g = random_instance(11, 40)
    cfg = FitConfig.gradient_ascent(0.02)
    a = coordinate_descent_fit(net, (params, g.rho), cfg)
    b = coordinate_descent_fit(net, (params, g.rho), cfg)
    assert a.to_json() == b.to_json()


def test_group1_uniform_error_shrinks_with_n():
    def uniform_err(n, seed):
        net, params, g = random_instance(seed, n)
        res = coordinate_descent_fit(net, (params, g.rho), FitConfig.newton_raphson())
        est = res.params.shifted(res.params.alpha[0])
        return np.max((est.alpha - params.alpha) ** 2 + (est.beta - params.beta) ** 2)

    small = np.median([uniform_err(100, s) for s in range(5)])
    large = np.median([uniform_err(400, s) for s in range(5)])
    assert np.isfinite(small) and large < small


def test_small_instance_beats_grid_oracle():
    # n=3, 7 free coordinates; scan (alpha_i, beta_i, rho) per node on a 0.05 grid
    net, params, g = random_instance(12, 3)
    res = coordinate_descent_fit(net, (NodeParams(np.zeros(3), np.zeros(3)), 0.0),
                                 FitConfig.newton_raphson(outer_tol=1e-10, sub_tol=1e-12))
    fitted = total_loglik(net, res.params, GlobalParams(res.rho))
    axis = np.arange(-2, 2.0001, 0.05)
    best = -math.inf
    for i in range(3):
        for r in axis[::4]:
            for a in axis[::4]:
                vals = [total_loglik(net, with_node(res.params, i, a, b), GlobalParams(r)) for b in axis[::4]]
                best = max(best, max(vals))
    assert fitted >= best - 1e-6


# ---- statistics and serialization

def test_stat_indices():
    idx = stat_indices(100)
    assert idx["stat_a2"] == ("alpha", 1) and idx["stat_amid"] == ("alpha", 49) and idx["stat_an"] == ("alpha", 99)
    assert idx["stat_b1"] == ("beta", 0) and idx["stat_bmid"] == ("beta", 49)
    assert stat_indices(101)["stat_amid"] == ("alpha", 50)


def test_fit_statistics():
    params, g = gen_params(ParamSpec("group1", 100), 0)
    perfect = FitResult(params, g.rho, 1.0, 1, True)
    assert all(v == 0 for v in fit_statistics(perfect, (params, g.rho)).values())
    err = np.zeros(100)
    err[1] = 0.01
    one = fit_statistics(FitResult(NodeParams(params.alpha + err, params.beta), g.rho + 0.002, 1.0, 1, True),
                         (params, g.rho))
    two = fit_statistics(FitResult(NodeParams(params.alpha + 2 * err, params.beta), g.rho + 0.004, 1.0, 1, True),
                         (params, g.rho))
    assert one["stat_a2"] == pytest.approx(10 * 0.01, rel=1e-9)
    assert one["stat_rho"] == pytest.approx(100 * 0.002, rel=1e-9)
    assert two["stat_a2"] == pytest.approx(2 * one["stat_a2"], rel=1e-9)
    assert two["stat_rho"] == pytest.approx(2 * one["stat_rho"], rel=1e-9)


def test_fit_statistics_recomputed_from_stored_results():
    net, params, g = random_instance(13, 100)
    res = coordinate_descent_fit(net, (params, g.rho), FitConfig.newton_raphson())
    stored = FitResult.from_dict(res.to_dict())
    stats = fit_statistics(stored, (params, g.rho))
    assert stats["stat_bn"] == pytest.approx(10 * (res.params.beta[99] - params.beta[99]), rel=1e-12)
    assert stats["stat_amid"] == pytest.approx(10 * (res.params.alpha[49] - params.alpha[49]), rel=1e-12)


def test_fit_result_json_fields():
    net, params, g = random_instance(14, 10)
    res = coordinate_descent_fit(net, (params, g.rho), FitConfig.newton_raphson())
    d = res.to_dict()
    assert set(d) == {"alpha", "beta", "rho", "mu_used", "outer_iters", "converged", "residual_trace", "loglik_trace"}
    back = FitResult.from_dict(d)
    assert np.array_equal(back.params.alpha, res.params.alpha) and back.rho == res.rho
