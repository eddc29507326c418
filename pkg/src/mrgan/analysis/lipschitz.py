"""Lipschitz and boundedness constants for the generator, embedding and measuring function."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nets import IdentityEmbedding, MlpNetwork
from ..objective import MeasuringFunction


@dataclass
class Estimate:
    value: float
    kind: str                       # exact | sampled-lower-bound
    history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def to_dict(self):
        return {"value": self.value, "kind": self.kind}


@dataclass
class LipschitzEstimates:
    L: Estimate             # generator w.r.t. its parameters
    L_prime: Estimate       # generator w.r.t. its input
    L_psi: Estimate
    L_phi: Estimate
    M: Estimate             # sup |phi'| on [0, 1]
    Delta: Estimate         # sup |phi| on [0, 1]

    def to_dict(self):
        return {k: getattr(self, k).to_dict() for k in ("L", "L_prime", "L_psi", "L_phi", "M", "Delta")}


def running_ratio_max(fa, fb, a, b) -> np.ndarray:
    """Running maximum of ||f(a_k) - f(b_k)|| / ||a_k - b_k||, skipping coincident pairs."""
    num = np.linalg.norm((fa - fb).reshape(len(fa), -1), axis=1)
    den = np.linalg.norm((a - b).reshape(len(a), -1), axis=1)
    ok = den > 0
    if not np.any(ok):
        raise ValueError("every probe pair is coincident")
    ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    return np.maximum.accumulate(ratio)


def _streams(rng, count):
    seeds = rng.integers(0, 2 ** 63 - 1, size=count)
    return [np.random.default_rng(int(s)) for s in seeds]


def estimate_lipschitz(generator: MlpNetwork, phi: MeasuringFunction, psi=None, probe_count: int = 1000,
                       rng: np.random.Generator | None = None, data=None, param_radius: float = 0.1,
                       input_radius: float = 1.0) -> LipschitzEstimates:
    """Sampled lower bounds for L, L', L_psi and exact constants for phi.

    Every probe array comes from its own stream, so with a fixed ``rng`` seed
    the first ``n`` probes are the same whatever ``probe_count`` is. Each
    estimate is a running maximum and never decreases as probes are added.
    ``M`` is the exact sup of |phi'| on [0, 1], which for log_delta is
    (1 - delta)/delta, slightly below ``L_phi = 1/delta``.
    """
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    rng = rng or np.random.default_rng(0)
    s_h, s_du, s_ha, s_hb, s_pt, s_pb = _streams(rng, 6)
    psi = psi or IdentityEmbedding()
    l, n_p = generator.in_dim, generator.n_params
    base = generator.flat()

    # L: G_{u}(h) vs G_{u'}(h), u and u' in a ball around the current parameters
    hs = s_h.standard_normal((probe_count, l))
    du = s_du.standard_normal((probe_count, 2, n_p)) * param_radius / np.sqrt(n_p)
    fa = np.array([generator.with_flat(base + du[k, 0])(hs[k:k + 1])[0] for k in range(probe_count)])
    fb = np.array([generator.with_flat(base + du[k, 1])(hs[k:k + 1])[0] for k in range(probe_count)])
    hist_L = running_ratio_max(fa, fb, du[:, 0], du[:, 1])

    # L': pairs of latent codes
    ha = s_ha.standard_normal((probe_count, l))
    hb = ha + s_hb.standard_normal((probe_count, l)) * input_radius
    hist_Lp = running_ratio_max(generator(ha), generator(hb), ha, hb)

    # L_psi: pairs around data points (or generator outputs when no data is given)
    pts = generator(s_pt.standard_normal((probe_count, l))) if data is None else \
        np.asarray(data, float)[s_pt.integers(0, len(data), probe_count)]
    pb = pts + s_pb.standard_normal(pts.shape) * 0.1
    hist_psi = running_ratio_max(np.asarray(psi(pts)), np.asarray(psi(pb)), pts, pb)
    psi_kind = "exact" if isinstance(psi, IdentityEmbedding) else "sampled-lower-bound"
    psi_val = 1.0 if isinstance(psi, IdentityEmbedding) else float(hist_psi[-1])

    return LipschitzEstimates(
        L=Estimate(float(hist_L[-1]), "sampled-lower-bound", hist_L),
        L_prime=Estimate(float(hist_Lp[-1]), "sampled-lower-bound", hist_Lp),
        L_psi=Estimate(psi_val, psi_kind, hist_psi),
        L_phi=Estimate(phi.lipschitz, "exact"),
        M=Estimate(phi.grad_bound, "exact"),
        Delta=Estimate(phi.bound, "exact"),
    )
