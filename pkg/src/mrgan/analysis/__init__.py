"""Stability, generalization and equilibrium analysis of the regularized game."""
from .dirac import DiracModel, dirac_gan, dirac_wgan, dirac_wgan_spectrum
from .dynamics import (GanSystem, Trajectory, block_identities, fit_decay_rate, gradient_field,
                       integrate_dynamics, jacobian_at, jacobian_blocks)
from .eigen import EigenNonConvergence, HurwitzReport, eigenvalues, hessenberg, hqr, hurwitz_check
from .equilibrium import (EquilibriumReport, GeneratorMixture, build_uniform_mixture, fit_point_generator,
                          verify_equilibrium)
from .gap import GapRow, GapTable, objective_gap, objective_value
from .lipschitz import Estimate, LipschitzEstimates, estimate_lipschitz, running_ratio_max

__all__ = [
    "DiracModel", "dirac_gan", "dirac_wgan", "dirac_wgan_spectrum",
    "GanSystem", "Trajectory", "block_identities", "fit_decay_rate", "gradient_field",
    "integrate_dynamics", "jacobian_at", "jacobian_blocks",
    "EigenNonConvergence", "HurwitzReport", "eigenvalues", "hessenberg", "hqr", "hurwitz_check",
    "EquilibriumReport", "GeneratorMixture", "build_uniform_mixture", "fit_point_generator",
    "verify_equilibrium", "GapRow", "GapTable", "objective_gap", "objective_value",
    "Estimate", "LipschitzEstimates", "estimate_lipschitz", "running_ratio_max",
]
