import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expnet.model import GlobalParams, Network, NodeParams, dyad_pmf_sparse
from expnet.sampler import (
    GROUP_RHO,
    ParamSpec,
    derive_seed,
    dyad_index,
    dyad_state_probs,
    dyad_uniforms,
    gen_params,
    perturb_params,
    read_edgelist,
    sample_network,
    sparse_mu,
    write_edgelist,
)


@pytest.mark.parametrize("seed", [0, 1, 2 ** 63 + 5])
def test_group1(seed):
    params, g = gen_params(ParamSpec("group1", 100), seed)
    assert params.alpha[0] == 0
    assert np.all(np.abs(params.alpha) <= 1) and np.all(np.abs(params.beta) <= 1)
    assert g.rho == 0.6 and g.mu == 1.0


def test_group2_and_group3():
    params, g = gen_params(ParamSpec("group2", 500), 4)
    assert g.rho == 0.3 and params.alpha[0] == 0
    assert 0.8 < params.beta.std() < 1.2
    params, g = gen_params(ParamSpec("group3", 200), 9)
    assert g.rho == -0.7 and params.alpha[0] == 0
    assert set(np.unique(params.alpha[1:])) <= {0.3, 0.7}
    assert set(np.unique(params.beta)) <= {0.4, 0.6}
    assert len(set(np.unique(params.alpha[1:]))) == 2


def test_sparse_uniform_mu():
    assert ParamSpec("sparse_uniform", 1000).resolved_mu == pytest.approx(0.1, rel=1e-12)
    assert sparse_mu(10) == 1.0
    _, g = gen_params(ParamSpec("sparse_uniform", 1000), 0)
    assert g.rho == GROUP_RHO["sparse_uniform"] == 0.3
    assert g.mu == pytest.approx(0.1)


def test_explicit_spec():
    spec = ParamSpec("explicit", 3, rho=0.2, alpha=[0.5, 0.1, 0.2], beta=[0.0, 0.3, 0.1], mu=0.5)
    params, g = gen_params(spec, 0)
    assert params.alpha[0] == 0
    assert g.rho == 0.2 and g.mu == 0.5
    with pytest.raises(ValueError):
        ParamSpec("explicit", 3)
    with pytest.raises(ValueError):
        ParamSpec("nope", 3)


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert 0 <= derive_seed(7) < 2 ** 64


def test_dyad_stream_independent_of_n():
    u_small = dyad_uniforms(10, 42)
    u_big = dyad_uniforms(30, 42)
    assert np.array_equal(u_small, u_big[: u_small.size])
    assert dyad_index(0, 1) == 0 and dyad_index(1, 0) == 0 and dyad_index(2, 4) == 4 * 3 // 2 + 2


def test_vanishing_mu_gives_empty_networks():
    params = NodeParams(np.zeros(100), np.zeros(100))
    for seed in range(10):
        assert sample_network(params, GlobalParams(0.0, 1e-9), seed).n_edges == 0


def test_zero_params_state_frequencies():
    n = 100
    net = sample_network(NodeParams(np.zeros(n), np.zeros(n)), GlobalParams(0.0), 3)
    A = net.adjacency
    iu = np.triu_indices(n, 1)
    states = A[iu] + 2 * A.T[iu]
    m = iu[0].size
    sd = np.sqrt(0.25 * 0.75 / m)
    for s in range(4):
        assert abs(np.mean(states == s) - 0.25) < 4 * sd


def test_replay_identical():
    params, g = gen_params(ParamSpec("group1", 50), 11)
    assert sample_network(params, g, 5) == sample_network(params, g, 5)
    assert sample_network(params, g, 5) != sample_network(params, g, 6)


def test_single_dyad_frequencies_match_pmf():
    # a homogeneous network gives R iid copies of one dyad law
    n, R = 448, 100_000  # n(n-1)/2 = 100128 dyads
    g = GlobalParams(0.5, 0.4)
    pmf = dyad_pmf_sparse(0.0, 0.0, 0.5, 0.4).as_array()
    A = sample_network(NodeParams(np.zeros(n), np.zeros(n)), g, 17).adjacency
    iu = np.triu_indices(n, 1)
    states = (A[iu] + 2 * A.T[iu])[:R]
    for s in range(4):
        p = pmf[s]
        assert abs(np.mean(states == s) - p) < 4 * np.sqrt(p * (1 - p) / R)


def test_vectorized_state_law_matches_pmf():
    params = NodeParams(np.array([0.0, 0.4]), np.array([-0.3, 0.2]))
    g = GlobalParams(0.5, 0.4)
    pmf = dyad_pmf_sparse(0.0 + 0.2, 0.4 - 0.3, 0.5, 0.4).as_array()
    assert dyad_state_probs(params, g, np.array([0]), np.array([1]))[0] == pytest.approx(pmf, rel=1e-12)


def test_expected_edge_count():
    n, mu = 200, 0.5
    zero = NodeParams(np.zeros(n), np.zeros(n))
    g = GlobalParams(0.0, mu)
    pmf = dyad_pmf_sparse(0.0, 0.0, 0.0, mu).as_array()
    p_edge = pmf[1] + pmf[3]  # each ordered pair is present with this probability
    counts = [sample_network(zero, g, s).n_edges for s in range(20)]
    mean = n * (n - 1) * p_edge
    # per network: sum over dyads of (a + b); var per dyad from the joint pmf
    var_dyad = (pmf[1] + pmf[2] + 4 * pmf[3]) - (pmf[1] + pmf[2] + 2 * pmf[3]) ** 2
    sd = np.sqrt(n * (n - 1) / 2 * var_dyad / 20)
    assert abs(np.mean(counts) - mean) < 4 * sd


def test_flipping_one_dyad_leaves_others():
    # changing the law of one dyad must not move the draw of any other
    n = 20
    base = NodeParams(np.zeros(n), np.zeros(n))
    alpha = np.zeros(n)
    alpha[3] = 2.0
    changed = NodeParams(alpha, np.zeros(n))
    g = GlobalParams(0.2)
    A = sample_network(base, g, 8).adjacency
    B = sample_network(changed, g, 8).adjacency
    untouched = np.ones((n, n), bool)
    untouched[3, :] = untouched[:, 3] = False
    assert np.array_equal(A[untouched], B[untouched])


def test_perturb_params():
    params, _ = gen_params(ParamSpec("group1", 80), 0)
    p = perturb_params(params, 0.5, 3)
    assert np.all(np.abs(p.alpha - params.alpha) <= 0.5) and np.all(np.abs(p.beta - params.beta) <= 0.5)
    assert np.abs(p.alpha - params.alpha).max() > 0.3
    q = perturb_params(params, 1e-15, 3)
    assert np.allclose(q.alpha, params.alpha, atol=1e-14)
    assert np.array_equal(perturb_params(params, 0.5, 3).alpha, p.alpha)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2 ** 32))
def test_edgelist_roundtrip(tmp_path_factory, n, seed):
    params, g = gen_params(ParamSpec("group1", n), seed)
    net = sample_network(params, g, seed)
    path = tmp_path_factory.mktemp("el") / "net.txt"
    write_edgelist(net, path)
    assert read_edgelist(path) == net
    lines = path.read_text().splitlines()
    assert lines[0] == f"n {n}"
    assert all(1 <= int(x) <= n for line in lines[1:] for x in line.split())


def test_edgelist_errors_have_line_numbers(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("n 3\n1 2\n1 x\n")
    with pytest.raises(ValueError, match=":3:"):
        read_edgelist(p)
    p.write_text("3\n")
    with pytest.raises(ValueError, match=":1:"):
        read_edgelist(p)


def test_empty_network_edgelist(tmp_path):
    net = Network(4, np.empty((0, 2), dtype=np.int64))
    write_edgelist(net, tmp_path / "e.txt")
    assert read_edgelist(tmp_path / "e.txt") == net
