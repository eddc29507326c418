"""Min-max training loop for (manifold-regularized) GANs."""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .nets import IdentityEmbedding, MlpNetwork, clip_weights, project_unit_ball
from .objective import MeasuringFunction, affinity_weights, objective_on_tape, pair_nearest
from .optim import make_optimizer

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("iter", "objective", "gen_loss", "disc_loss", "regularizer",
                   "mean_D_real", "mean_D_fake", "wall_ms")


@dataclass
class TrainConfig:
    latent_dim: int = 2
    gen_hidden: list[int] = field(default_factory=lambda: [32, 32])
    disc_hidden: list[int] = field(default_factory=lambda: [32, 32])
    activation: str = "tanh"
    phi: str = "log_delta"
    delta: float = 0.1
    lam: float = 0.0
    rho: float = 128.0
    rule: str = "full"
    knn_k: int = 8
    pairing: str = "index"          # index | nearest
    reg_form: str = "pairwise"      # pairwise | pointwise | conventional
    gen_optimizer: str = "adam"
    gen_lr: float = 1e-3
    disc_optimizer: str = "adam"
    disc_lr: float = 1e-3
    batch_size: int = 256
    iterations: int = 10_000
    seed: int = 0
    scheme: str = "simultaneous"    # simultaneous | alternating
    k_disc: int = 5
    clip: float | None = None
    project_unit_ball: bool = False
    log_every: int = 100
    timing: bool = False

    def validate(self) -> None:
        checks = [
            (self.latent_dim >= 1, "latent_dim", "must be >= 1"),
            (self.batch_size >= 2, "batch_size", "must be >= 2"),
            (self.iterations >= 1, "iterations", "must be >= 1"),
            (self.lam >= 0, "lam", "must be >= 0"),
            (self.rho > 0, "rho", "must be > 0"),
            (self.rule in ("full", "knn"), "rule", "must be 'full' or 'knn'"),
            (self.pairing in ("index", "nearest"), "pairing", "must be 'index' or 'nearest'"),
            (self.reg_form in ("pairwise", "pointwise", "conventional"), "reg_form", "unknown form"),
            (self.scheme in ("simultaneous", "alternating"), "scheme", "must be simultaneous or alternating"),
            (self.k_disc >= 1, "k_disc", "must be >= 1"),
            (self.clip is None or self.clip > 0, "clip", "must be positive"),
            (self.log_every >= 1, "log_every", "must be >= 1"),
        ]
        for ok, name, msg in checks:
            if not ok:
                raise ValueError(f"{name}: {msg}")
        MeasuringFunction(self.phi, self.delta)

    @property
    def measuring(self) -> MeasuringFunction:
        return MeasuringFunction(self.phi, self.delta)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    records: list[dict] = field(default_factory=list)

    def append(self, rec: dict) -> None:
        if self.records and rec["iter"] <= self.records[-1]["iter"]:
            raise ValueError("history iterations must increase")
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for r in self.records:
            w.writerow([r["iter"]] + [repr(float(r[c])) for c in HISTORY_COLUMNS[1:]])
        return buf.getvalue()


class TrainingAborted(RuntimeError):
    def __init__(self, iteration: int, generator: MlpNetwork, discriminator: MlpNetwork,
                 history: TrainHistory, reason: str):
        super().__init__(f"training aborted at iteration {iteration}: {reason}")
        self.iteration = iteration
        self.generator = generator
        self.discriminator = discriminator
        self.history = history


def sample_latent(rng: np.random.Generator, l: int, count: int) -> np.ndarray:
    if l < 1:
        raise ValueError("latent dimension must be >= 1")
    return rng.standard_normal((count, l))


def optimizer_step(opt, params, grads):
    return opt.step(params, grads)


def build_networks(config: TrainConfig, d: int, rng: np.random.Generator) -> tuple[MlpNetwork, MlpNetwork]:
    u = MlpNetwork.init([config.latent_dim, *config.gen_hidden, d], rng, config.activation, "identity")
    v = MlpNetwork.init([d, *config.disc_hidden, 1], rng, config.activation, "sigmoid")
    return u, v


class _Step:
    """One tape evaluation of the objective at the current parameters."""

    def __init__(self, config, u, v, x, h, y_override, psi):
        lam = config.lam
        if config.pairing == "nearest" and y_override is None:
            x = pair_nearest(x, u(h))
        W = affinity_weights(x, config.rho, config.rule, config.knn_k) if lam > 0 else None
        self.tape = tape = ad.Tape()
        self.up = [tape.var(p, "u") for p in u.params()]
        self.vp = [tape.var(p, "v") for p in v.params()]
        self.terms = objective_on_tape(u, v, self.up, self.vp, x, h, config.measuring, psi, W, lam,
                                       config.reg_form, y=y_override)
        self.x = x

    def backward(self, out):
        self.tape.backward(out)
        return [self.tape.grad(p) for p in self.up], [self.tape.grad(p) for p in self.vp]

    def record(self, it, t0, timing) -> dict:
        t = self.terms
        d_real, d_fake = t.d_real.value, t.d_fake.value
        return {"iter": it, "objective": float(t.total.value), "gen_loss": float(t.generator_loss.value),
                "disc_loss": float(t.discriminator_loss.value), "regularizer": float(t.reg.value),
                "mean_D_real": float(d_real.mean()), "mean_D_fake": float(d_fake.mean()),
                "wall_ms": (time.perf_counter() - t0) * 1e3 if timing else 0.0}


def train(config: TrainConfig, data, psi=None, init=None, y_hook=None, callback=None):
    """Train a generator/discriminator pair on ``data`` (an (n, d) array).

    Returns ``(generator, discriminator, history)``. ``init`` optionally
    supplies starting networks; ``y_hook(x, h)`` replaces the generated batch
    (test hook); ``callback(it, u, v)`` runs after every iteration.
    """
    config.validate()
    data = np.asarray(getattr(data, "samples", data), dtype=float)
    n, d = data.shape
    if n < config.batch_size:
        raise ValueError(f"dataset has {n} samples, fewer than batch size {config.batch_size}")
    rng = np.random.default_rng(config.seed)
    u, v = init if init is not None else build_networks(config, d, rng)
    if u.out_dim != d or v.in_dim != d:
        raise ValueError(f"network widths do not match data dimension {d}")
    psi = psi or IdentityEmbedding()
    opt_u = make_optimizer(config.gen_optimizer, config.gen_lr)
    opt_v = make_optimizer(config.disc_optimizer, config.disc_lr)
    history = TrainHistory()
    m = config.batch_size
    t0 = time.perf_counter()

    def draw():
        x = data[rng.choice(n, m, replace=False)]
        h = sample_latent(rng, config.latent_dim, m)
        return x, h, (y_hook(x, h) if y_hook else None)

    def post_v(net):
        if config.clip is not None:
            net = clip_weights(net, config.clip)
        if config.project_unit_ball:
            net = net.with_flat(project_unit_ball(net.flat()))
        return net

    def post_u(net):
        if config.project_unit_ball:
            net = net.with_flat(project_unit_ball(net.flat()))
        return net

    for it in range(1, config.iterations + 1):
        try:
            if config.scheme == "simultaneous":
                step = _Step(config, u, v, *draw(), psi)
                gu, gv = step.backward(step.terms.total)
                rec_step = step
                new_u = u.with_params(opt_u.step(u.params(), gu))
                # ascent on the objective for the discriminator
                new_v = v.with_params(opt_v.step(v.params(), [-g for g in gv]))
                u, v = post_u(new_u), post_v(new_v)
            else:
                for _ in range(config.k_disc):
                    step = _Step(config, u, v, *draw(), psi)
                    _, gv = step.backward(step.terms.discriminator_loss)
                    v = post_v(v.with_params(opt_v.step(v.params(), gv)))
                rec_step = _Step(config, u, v, *draw(), psi)
                gu, _ = rec_step.backward(rec_step.terms.generator_loss)
                u = post_u(u.with_params(opt_u.step(u.params(), gu)))
            if not (np.all(np.isfinite(u.flat())) and np.all(np.isfinite(v.flat()))):
                raise ad.NonFiniteError("parameters became non-finite")
        except (ad.NonFiniteError, FloatingPointError) as exc:
            raise TrainingAborted(it, u, v, history, str(exc)) from exc
        if it % config.log_every == 0 or it == config.iterations:
            history.append(rec_step.record(it, t0, config.timing))
        if callback is not None:
            callback(it, u, v)
    return u, v, history
