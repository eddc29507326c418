"""
Local stability of the Dirac fixtures
=====================================

A point-mass generator against a linear critic rotates forever around the
equilibrium. Adding the regularizer pulls the spectrum into the left half
plane and the trajectory spirals in at rate lambda.
"""
import numpy as np

from mrgan.analysis import (block_identities, dirac_gan, dirac_wgan, dirac_wgan_spectrum, fit_decay_rate,
                            hurwitz_check, integrate_dynamics, jacobian_at)

# %%
# Spectra at the equilibrium, computed with the library's own QR iteration
# and compared with the closed form -lam +/- sqrt(lam^2 - 1).
for lam in (0.0, 0.25, 0.5, 1.0, 2.0):
    model = dirac_wgan(lam)
    rep = hurwitz_check(jacobian_at(model, model.equilibrium()))
    print(f"lam={lam:4.2f}  eig {np.round(rep.spectrum, 6)}  closed form {np.round(dirac_wgan_spectrum(lam), 6)}"
          f"  hurwitz={rep.is_hurwitz}")

# %%
# Trajectories from (1, 1): distance to the equilibrium over time.
for lam in (0.0, 0.5):
    model = dirac_wgan(lam)
    tr = integrate_dynamics(model, [1.0, 1.0], 0.01, 2000, model.equilibrium())
    d = tr.distances
    line = "  ".join(f"t={t:4.1f}: {d[int(t / 0.01)]:.4f}" for t in (0, 5, 10, 15, 20))
    print(f"lam={lam}: {line}")
    if lam > 0:
        print(f"  fitted decay rate {fit_decay_rate(tr.times, d, 5, 20):.4f} (expected {lam})")

# %%
# For the sigmoid Dirac-GAN with the pairwise regularizer the generator
# block of the Jacobian vanishes and the off-diagonal blocks are antisymmetric.
model = dirac_gan(0.5, (0.3, -0.2))
ids = block_identities(jacobian_at(model, model.equilibrium()), model.n_u)
print({k: f"{v:.2e}" for k, v in ids.items()})
