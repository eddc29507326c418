"""Sampling gap between the empirical objective at batch size m and a large-sample surrogate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nets import IdentityEmbedding, MlpNetwork
from ..objective import MeasuringFunction, affinity_weights, manifold_regularizer, regularizer_large


def _d(v, z):
    out = v(z)
    return out[:, 0] if out.ndim == 2 else out


def objective_value(u, v, x, h, phi, psi, lam, rho, rule="full", k=8) -> float:
    """Empirical objective on paired samples; switches to the blocked regularizer for large batches."""
    y = u(h)
    val = float(np.mean(phi(_d(v, x)) + phi(1.0 - _d(v, y))))
    if lam > 0:
        if len(x) <= 4096:
            W = affinity_weights(x, rho, rule, k)
            val += lam * manifold_regularizer(x, y, psi, W)
        else:
            val += lam * regularizer_large(psi(x), psi(y), x, rho, rule, k)
    return val


@dataclass
class GapRow:
    m: int
    mean: float
    std: float
    scaled: float           # mean * sqrt(m)

    def to_dict(self):
        return {"m": self.m, "mean_gap": self.mean, "std_gap": self.std, "gap_sqrt_m": self.scaled}


@dataclass
class GapTable:
    population_m: int
    population_value: float
    trials: int
    rows: list[GapRow] = field(default_factory=list)

    @property
    def inversions(self) -> int:
        """Number of consecutive m pairs where the mean gap went up."""
        means = [r.mean for r in self.rows]
        return int(sum(b > a for a, b in zip(means, means[1:])))

    @property
    def scaling_ratio(self) -> float:
        """max / min of gap * sqrt(m); 1 for a perfect 1/sqrt(m) law."""
        s = [r.scaled for r in self.rows if r.scaled > 0]
        return float(max(s) / min(s)) if s else float("nan")

    def to_dict(self):
        return {"population_m": self.population_m, "population_value": self.population_value,
                "trials": self.trials, "rows": [r.to_dict() for r in self.rows],
                "inversions": self.inversions, "scaling_ratio": self.scaling_ratio}

    def to_csv(self) -> str:
        lines = ["m,mean_gap,std_gap,gap_sqrt_m"]
        lines += [f"{r.m},{r.mean!r},{r.std!r},{r.scaled!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def objective_gap(generator: MlpNetwork, discriminator: MlpNetwork, real_pool, phi: MeasuringFunction,
                  m_values=(16, 64, 256, 1024), population_m: int | None = None, trials: int = 50,
                  lam: float = 0.0, rho: float = 128.0, rule: str = "full", k: int = 8, psi=None,
                  seed: int = 0) -> GapTable:
    """|F_m - F_pop| for fixed networks, averaged over ``trials`` subsamples per m.

    ``real_pool`` holds the real samples (at least ``population_m`` rows,
    default 100 * max(m_values)). The surrogate F_pop is the empirical
    objective on the first ``population_m`` of them paired with as many
    latent codes; each trial draws m of those pairs without replacement, so
    m == population_m reproduces F_pop exactly.
    """
    psi = psi or IdentityEmbedding()
    m_values = [int(m) for m in m_values]
    if not m_values or min(m_values) < 2:
        raise ValueError("m values must be >= 2")
    population_m = population_m or 100 * max(m_values)
    pool = np.asarray(getattr(real_pool, "samples", real_pool), dtype=float)
    if len(pool) < population_m:
        raise ValueError(f"real pool has {len(pool)} samples, need {population_m}")
    if max(m_values) > population_m:
        raise ValueError("every m must be at most population_m")
    rng = np.random.default_rng(seed)
    X = pool[:population_m]
    H = rng.standard_normal((population_m, generator.in_dim))
    f_pop = objective_value(generator, discriminator, X, H, phi, psi, lam, rho, rule, k)
    table = GapTable(population_m, f_pop, trials)
    for m in m_values:
        gaps = np.empty(trials)
        for t in range(trials):
            idx = rng.choice(population_m, m, replace=False) if m < population_m else np.arange(m)
            gaps[t] = abs(objective_value(generator, discriminator, X[idx], H[idx], phi, psi, lam, rho, rule, k)
                          - f_pop)
        table.rows.append(GapRow(m, float(gaps.mean()), float(gaps.std(ddof=1)) if trials > 1 else 0.0,
                                 float(gaps.mean() * np.sqrt(m))))
    return table
