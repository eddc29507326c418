"""Uniform mixtures of point-mass generators and an empirical epsilon-equilibrium check."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..nets import IdentityEmbedding, MlpNetwork, project_unit_ball
from ..objective import MeasuringFunction, affinity_weights, manifold_regularizer, pair_nearest
from ..optim import Adam


@dataclass
class GeneratorMixture:
    components: list[MlpNetwork]
    targets: np.ndarray
    fit_errors: np.ndarray              # E ||G(h) - target|| per component
    eps_fit: float

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("a mixture needs at least one component")

    @property
    def T(self) -> int:
        return len(self.components)

    @property
    def converged(self) -> np.ndarray:
        return self.fit_errors <= self.eps_fit

    def sample(self, n: int, rng: np.random.Generator, return_components: bool = False):
        comp = rng.integers(0, self.T, size=n)
        l = self.components[0].in_dim
        h = rng.standard_normal((n, l))
        out = np.empty((n, self.components[0].out_dim))
        for t in range(self.T):
            sel = comp == t
            if np.any(sel):
                out[sel] = self.components[t](h[sel])
        return (out, comp) if return_components else out

    def fit_report(self) -> list[dict]:
        return [{"component": t, "target": self.targets[t].tolist(), "error": float(e),
                 "converged": bool(e <= self.eps_fit)} for t, e in enumerate(self.fit_errors)]


def fit_point_generator(target, latent_dim: int = 2, hidden=(16,), iters: int = 2000, lr: float = 1e-2,
                        batch_size: int = 128, seed: int = 0, activation: str = "tanh"):
    """Regress G(h) onto a fixed point with Adam; returns (generator, E||G(h) - target||)."""
    target = np.asarray(target, dtype=float)
    rng = np.random.default_rng(seed)
    g = MlpNetwork.init([latent_dim, *hidden, len(target)], rng, activation, "identity")
    params = g.params()
    opt = Adam(lr=lr)
    for _ in range(iters):
        h = rng.standard_normal((batch_size, latent_dim))
        tape = ad.Tape()
        ps = [tape.var(p) for p in params]
        loss = ad.mean(ad.sum(ad.square(g.on_tape(ps, h) - target[None, :]), axis=1))
        tape.backward(loss)
        params = opt.step(params, [tape.grad(p) for p in ps])
    g = g.with_params(params)
    err = float(np.mean(np.linalg.norm(g(rng.standard_normal((4096, latent_dim))) - target, axis=1)))
    return g, err


def build_uniform_mixture(point_targets, fit_iters: int = 2000, eps_fit: float = 0.01, latent_dim: int = 2,
                          hidden=(16,), lr: float = 1e-2, seed: int = 0) -> GeneratorMixture:
    targets = np.atleast_2d(np.asarray(point_targets, dtype=float))
    if len(targets) == 0:
        raise ValueError("need at least one target")
    comps, errs = [], []
    for t, x in enumerate(targets):
        g, e = fit_point_generator(x, latent_dim, hidden, fit_iters, lr, seed=seed * 1000 + t)
        comps.append(g)
        errs.append(e)
    return GeneratorMixture(comps, targets, np.array(errs), eps_fit)


@dataclass
class EquilibriumReport:
    value: float                        # 2 phi(1/2)
    epsilon: float
    half_payoff: float                  # D = 1/2 payoff including the regularizer
    half_payoff_se: float
    regularizer: float
    best_adversary: float
    adversary_values: list[float] = field(default_factory=list)
    lower_ok: bool = False
    upper_ok: bool = False

    @property
    def verdict(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {"value": self.value, "epsilon": self.epsilon,
                "half_payoff": self.half_payoff, "half_payoff_se": self.half_payoff_se,
                "regularizer": self.regularizer,
                "lower_bound": self.value - self.epsilon, "upper_bound": self.value + self.epsilon,
                "best_adversary": self.best_adversary, "adversary_values": self.adversary_values,
                "lower_ok": self.lower_ok, "upper_ok": self.upper_ok, "verdict": self.verdict}


def _gan_terms(v: MlpNetwork, x, y, phi) -> float:
    return float(np.mean(phi(v(x)[:, 0])) + np.mean(phi(1.0 - v(y)[:, 0])))


def _train_adversary(mixture, real, phi, rng, steps, batch_size, hidden, lr, ball):
    d = real.shape[1]
    v = MlpNetwork.init([d, *hidden, 1], rng, "tanh", "sigmoid")
    if ball:
        v = v.with_flat(project_unit_ball(v.flat()))
    params = v.params()
    opt = Adam(lr=lr)
    for _ in range(steps):
        x = real[rng.integers(0, len(real), batch_size)]
        y = mixture.sample(batch_size, rng)
        tape = ad.Tape()
        ps = [tape.var(p) for p in params]
        obj = ad.mean(phi.on_tape(v.on_tape(ps, x))) + ad.mean(phi.on_tape(1.0 - v.on_tape(ps, y)))
        tape.backward(obj)
        params = opt.step(params, [-tape.grad(p) for p in ps])
        if ball:
            params = v.with_flat(project_unit_ball(v.with_params(params).flat())).params()
    return v.with_params(params)


def verify_equilibrium(mixture: GeneratorMixture, real, phi: MeasuringFunction, psi=None, lam: float = 0.0,
                       epsilon: float = 0.1, adversary_budget: int = 10, adversary_steps: int = 2000,
                       rng: np.random.Generator | None = None, rho: float = 128.0, rule: str = "full",
                       batch_size: int = 256, pairing: str = "nearest", payoff_batches: int = 200,
                       eval_n: int = 20000, adversary_hidden=(32, 32), adversary_lr: float = 1e-3,
                       adversary_ball: bool = False) -> EquilibriumReport:
    """Check both sides of an epsilon-approximate equilibrium for (mixture, D = 1/2).

    The D = 1/2 payoff is 2 phi(1/2) plus lam times the mean regularizer over
    ``payoff_batches`` batches. With ``pairing="nearest"`` every generated
    sample is paired with its closest real sample in the batch, which mirrors
    coupling each component with the real point it imitates. The sup side is
    probed by training ``adversary_budget`` discriminators from random
    restarts and scoring each on ``eval_n`` fresh samples.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = rng or np.random.default_rng(0)
    psi = psi or IdentityEmbedding()
    real = np.asarray(getattr(real, "samples", real), dtype=float)
    value = phi.value_at_equilibrium
    half = MlpNetwork.zeros([real.shape[1], 1], "tanh", "sigmoid")     # outputs exactly 1/2

    payoffs, regs = [], []
    for _ in range(payoff_batches):
        x = real[rng.integers(0, len(real), batch_size)]
        y = mixture.sample(batch_size, rng)
        if pairing == "nearest":
            x = pair_nearest(x, y)
        reg = 0.0
        if lam > 0:
            reg = manifold_regularizer(x, y, psi, affinity_weights(x, rho, rule))
        regs.append(reg)
        payoffs.append(_gan_terms(half, x, y, phi) + lam * reg)
    payoffs = np.array(payoffs)
    reg_mean = float(np.mean(regs))
    half_payoff = float(payoffs.mean())
    se = float(payoffs.std(ddof=1) / np.sqrt(len(payoffs))) if len(payoffs) > 1 else 0.0

    scores = []
    x_eval = real[rng.integers(0, len(real), eval_n)]
    y_eval = mixture.sample(eval_n, rng)
    for _ in range(adversary_budget):
        v = _train_adversary(mixture, real, phi, rng, adversary_steps, batch_size, adversary_hidden,
                             adversary_lr, adversary_ball)
        scores.append(_gan_terms(v, x_eval, y_eval, phi) + lam * reg_mean)
    best = float(max(scores)) if scores else float("-inf")
    return EquilibriumReport(value, epsilon, half_payoff, se, reg_mean, best, [float(s) for s in scores],
                             lower_ok=abs(half_payoff - value) <= epsilon, upper_ok=best <= value + epsilon)
