"""
An approximate equilibrium: eight point generators against D = 1/2
===================================================================

Fit one small generator to each ring centre, mix them uniformly, and check
that no trained discriminator beats the constant 1/2 critic by more than
epsilon.
"""
import numpy as np

from mrgan.analysis import build_uniform_mixture, verify_equilibrium
from mrgan.config import preset
from mrgan.objective import MeasuringFunction
from mrgan.runner import load_dataset, mixture_spec

cfg = preset("ring8-equilibrium")
spec = mixture_spec(cfg)
real = load_dataset(cfg).samples

# %%
mix = build_uniform_mixture(spec.centers(), fit_iters=1000, seed=0)
for row in mix.fit_report():
    print(f"component {row['component']}: fit error {row['error']:.4f}")

# %%
# Fewer adversaries and steps than the preset, so this runs in under a minute.
rep = verify_equilibrium(mix, real, MeasuringFunction("log_delta", 0.1), lam=0.5, epsilon=0.1,
                         adversary_budget=3, adversary_steps=500, rng=np.random.default_rng(0))
print(f"value 2phi(1/2) = {rep.value:.5f}")
print(f"D = 1/2 payoff  = {rep.half_payoff:.5f} +/- {rep.half_payoff_se:.5f}")
print(f"best adversary  = {rep.best_adversary:.5f} (bound {rep.value + rep.epsilon:.5f})")
print("equilibrium within epsilon:", rep.verdict)
