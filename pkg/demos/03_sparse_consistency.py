"""
Errors shrink as the sparse network grows
=========================================

A scaled-down version of the consistency study: mu = 10 n^(-2/3), gradient
fits stopped at gradient sup-norm 0.05, a handful of replications per size.
The rate columns carry unit constants, so compare their trend, not their level.
"""

import numpy as np

from expnet.harness import ExperimentConfig, collect_rows
from expnet.metrics import rate_predictor
from expnet.sampler import sparse_mu

cfg = ExperimentConfig.preset("consistency", n_list=[200, 400, 800], replications=4, master_seed=3)
rows = collect_rows(cfg)

print(f"{'n':>5} {'mu':>6} {'med mse':>9} {'med unif':>9} {'adj unif':>9} {'uniform_cont shape':>19}")
for n in cfg.n_list:
    cell = [r for r in rows if r["n"] == n]
    med = {c: np.median([r[c] for r in cell]) for c in ("mse_bound", "uniform_bound", "adj_uniform")}
    mu = sparse_mu(n)
    print(f"{n:>5} {mu:6.3f} {med['mse_bound']:9.4f} {med['uniform_bound']:9.4f} "
          f"{med['adj_uniform']:9.4f} {rate_predictor('uniform_cont', n, mu):19.2f}")
