"""Mode-coverage diagnostics for mixture datasets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..datasets import MixtureSpec


@dataclass
class ModeReport:
    covered: int
    total: int
    hq_fraction: float
    occupancy: np.ndarray

    def to_dict(self):
        return {"covered": self.covered, "total": self.total, "hq_fraction": self.hq_fraction,
                "occupancy": self.occupancy.tolist()}


def mode_coverage(gen, spec: MixtureSpec, hq_radius_multiplier: float = 3.0,
                  min_share: float = 0.05) -> ModeReport:
    """Count modes receiving at least ``min_share`` of a uniform mode's expected sample count.

    A sample is high quality when it lies within ``hq_radius_multiplier *
    sigma`` of some mode centre (distances in the ambient space).
    """
    gen = np.asarray(getattr(gen, "samples", gen), dtype=float)
    if gen.ndim != 2 or gen.shape[1] != spec.d:
        raise ValueError(f"generated samples must have dimension {spec.d}")
    n = len(gen)
    centers = spec.centers()
    if n == 0:
        return ModeReport(0, spec.modes, 0.0, np.zeros(spec.modes))
    dist = np.linalg.norm(gen[:, None, :] - centers[None, :, :], axis=2)
    nearest = np.argmin(dist, 1)
    close = dist[np.arange(n), nearest] <= hq_radius_multiplier * spec.sigma
    counts = np.bincount(nearest[close], minlength=spec.modes)
    threshold = min_share * n / spec.modes
    return ModeReport(int(np.sum(counts >= threshold)), spec.modes, float(close.mean()), counts / n)
