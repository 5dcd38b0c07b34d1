"""
The dyad law and what reciprocity does to it
============================================

Every unordered pair of nodes carries two directed edges. The model gives
the four joint states a log-linear law with an extra term on the mutual
state, then thins the non-empty states by a sparsity level mu.
"""

import math

import numpy as np

from expnet.model import GlobalParams, NodeParams, dyad_pmf_dense, dyad_pmf_sparse, total_loglik
from expnet.sampler import ParamSpec, gen_params, sample_network

# With rho = 0 the two directions are independent coin flips.
p = dyad_pmf_dense(math.log(2), 0.0, 0.0)
print("rho=0      ", np.round(p.as_array(), 4), " product of", 2 / 3, "and", 1 / 2)

# A positive rho moves mass onto the mutual state (1,1).
for rho in (-1.0, 0.0, math.log(3), 2.0):
    print(f"rho={rho:+.3f}", np.round(dyad_pmf_dense(0.0, 0.0, rho).as_array(), 4))

# Sparsity scales the three occupied states and leaves the rest on (0,0).
for mu in (1.0, 0.4, 0.05):
    print(f"mu={mu:<5}", np.round(dyad_pmf_sparse(0.0, 0.0, 0.0, mu).as_array(), 4))

# Only alpha_i + beta_j enters, so (alpha - x, beta + x) is the same model.
params, g = gen_params(ParamSpec("group1", 50), seed=1)
net = sample_network(params, g, seed=2)
for x in (0.0, 0.5, -2.0):
    print(f"shift {x:+.1f}: loglik = {total_loglik(net, params.shifted(x), g):.10f}")
