"""Manifold-regularized GAN training and analysis in plain numpy."""
__version__ = "0.1.0"
