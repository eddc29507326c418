"""
How fast does the empirical objective approach the population value?
====================================================================

For a fixed generator/discriminator pair, the gap between the m-sample
objective and its value on a large pool should shrink like 1/sqrt(m).

    python3 demos/generalization_gap.py [population]
"""
import sys

import numpy as np

from mrgan.analysis import objective_gap
from mrgan.config import preset
from mrgan.datasets import sample_mixture
from mrgan.objective import MeasuringFunction
from mrgan.runner import mixture_spec
from mrgan.training import build_networks

pop = int(sys.argv[1]) if len(sys.argv) > 1 else 102400     # the ring8-gap default, 100 x the largest m
cfg = preset("ring8-gap")
o = cfg.objective

# %%
data = sample_mixture(mixture_spec(cfg), pop, np.random.default_rng(cfg.dataset.seed)).samples
u, v = build_networks(cfg.train_config(), data.shape[1], np.random.default_rng(0))
table = objective_gap(u, v, data, MeasuringFunction(o.phi, o.delta), [16, 64, 256, 1024], pop, 50, o.lam,
                      o.rho, o.rule, o.knn_k, seed=0)

# %%
# gap * sqrt(m) should stay roughly flat.
print(table.to_csv())
print(f"scaling ratio {table.scaling_ratio:.2f}, inversions {table.inversions}")
