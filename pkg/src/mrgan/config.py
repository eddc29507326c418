"""Experiment configuration: JSON sections, validation with field paths, presets."""
from __future__ import annotations

import copy
import json
import types
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass

from .training import TrainConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class DatasetSection:
    kind: str = "ring8"             # ring8 | csv | idx
    n: int = 50_000
    seed: int = 2019
    modes: int = 8
    radius: float = 2.0
    sigma: float = 0.05
    embed: bool = True
    basis_seed: int = 2019
    path: str | None = None
    d: int | None = None            # csv width
    header: bool = False
    limit: int | None = None        # keep the first rows only


@dataclass
class GeneratorSection:
    latent_dim: int = 2
    hidden: list[int] = field(default_factory=lambda: [32, 32])
    activation: str = "tanh"


@dataclass
class DiscriminatorSection:
    hidden: list[int] = field(default_factory=lambda: [32, 32])
    activation: str = "tanh"


@dataclass
class EmbeddingSection:
    kind: str = "identity"          # identity | autoencoder
    widths: list[int] | None = None     # encoder widths, data dimension first
    iters: int = 2000
    lr: float = 1e-3


@dataclass
class ObjectiveSection:
    phi: str = "log_delta"
    delta: float = 0.1
    lam: float = 0.0
    rho: float = 128.0
    rule: str = "full"
    knn_k: int = 8
    pairing: str = "index"
    reg_form: str = "pairwise"


@dataclass
class OptimizerChoice:
    name: str = "adam"
    lr: float = 1e-3


@dataclass
class OptimizerSection:
    generator: OptimizerChoice = field(default_factory=OptimizerChoice)
    discriminator: OptimizerChoice = field(default_factory=OptimizerChoice)


@dataclass
class TrainingSection:
    batch_size: int = 256
    iterations: int = 10_000
    seed: int = 0
    scheme: str = "simultaneous"
    k_disc: int = 5
    clip: float | None = None
    project_unit_ball: bool = False
    log_every: int = 100
    timing: bool = False


@dataclass
class AnalysisSection:
    mode: str = "stability"         # stability | gap | equilibrium
    fixture: str = "dirac-wgan"     # dirac-wgan | dirac-gan | mlp
    lam: float = 0.0
    reg: str = "pointwise"
    target: list[float] = field(default_factory=lambda: [0.0])
    theta0: list[float] | None = None
    dt: float = 0.01
    steps: int = 2000
    fd_step: float = 1e-4
    m_values: list[int] = field(default_factory=lambda: [16, 64, 256, 1024])
    population_m: int | None = None
    trials: int = 50
    epsilon: float = 0.1
    adversary_budget: int = 10
    adversary_steps: int = 2000
    fit_iters: int = 1000
    eps_fit: float = 0.01


@dataclass
class GsSection:
    landmarks: int = 64
    gamma: float = 1.0 / 128
    i_max: int = 100
    repeats: int = 100
    samples: int = 2000
    seed: int = 0


@dataclass
class OutputSection:
    svg: bool = True
    gs: GsSection = field(default_factory=GsSection)
    eval_samples: int = 2000


@dataclass
class ExperimentConfig:
    version: int = SCHEMA_VERSION
    name: str = "custom"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    discriminator: DiscriminatorSection = field(default_factory=DiscriminatorSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    objective: ObjectiveSection = field(default_factory=ObjectiveSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def train_config(self) -> TrainConfig:
        o, t = self.objective, self.training
        return TrainConfig(
            latent_dim=self.generator.latent_dim, gen_hidden=list(self.generator.hidden),
            disc_hidden=list(self.discriminator.hidden), activation=self.generator.activation,
            phi=o.phi, delta=o.delta, lam=o.lam, rho=o.rho, rule=o.rule, knn_k=o.knn_k,
            pairing=o.pairing, reg_form=o.reg_form,
            gen_optimizer=self.optimizer.generator.name, gen_lr=self.optimizer.generator.lr,
            disc_optimizer=self.optimizer.discriminator.name, disc_lr=self.optimizer.discriminator.lr,
            batch_size=t.batch_size, iterations=t.iterations, seed=t.seed, scheme=t.scheme,
            k_disc=t.k_disc, clip=t.clip, project_unit_ball=t.project_unit_ball,
            log_every=t.log_every, timing=t.timing)

    def validate(self) -> "ExperimentConfig":
        _check_semantics(self)
        return self


# --- parsing ----------------------------------------------------------------

def _check_type(value, tp, path):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _check_type(value, inner[0], path)
    if is_dataclass(tp):
        return _build(tp, value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (item,) = typing.get_args(tp)
        return [_check_type(v, item, f"{path}[{k}]") for k, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise ConfigError(path, f"unsupported type {tp}")


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", f"expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")
    kwargs = {}
    for f in fields(cls):
        if f.name in data:
            sub = f"{path}.{f.name}" if path else f.name
            kwargs[f.name] = _check_type(data[f.name], hints[f.name], sub)
    return cls(**kwargs)


def _require(ok, path, msg):
    if not ok:
        raise ConfigError(path, msg)


def _check_semantics(c: ExperimentConfig) -> None:
    _require(c.version == SCHEMA_VERSION, "version", f"unsupported schema version {c.version}")
    ds = c.dataset
    _require(ds.kind in ("ring8", "csv", "idx"), "dataset.kind", "must be ring8, csv or idx")
    _require(ds.n >= 1, "dataset.n", "must be >= 1")
    _require(ds.sigma > 0, "dataset.sigma", "must be > 0")
    _require(ds.modes >= 1, "dataset.modes", "must be >= 1")
    if ds.kind in ("csv", "idx"):
        _require(ds.path is not None, "dataset.path", f"required for {ds.kind} data")
    if ds.kind == "csv":
        _require(ds.d is not None and ds.d >= 1, "dataset.d", "csv data needs its width")
    _require(ds.limit is None or ds.limit >= 1, "dataset.limit", "must be >= 1")
    _require(c.generator.latent_dim >= 1, "generator.latent_dim", "must be >= 1")
    for sec in ("generator", "discriminator"):
        s = getattr(c, sec)
        _require(all(w >= 1 for w in s.hidden), f"{sec}.hidden", "widths must be >= 1")
        _require(s.activation in ("tanh", "relu", "sigmoid"), f"{sec}.activation", "tanh, relu or sigmoid")
    _require(c.generator.activation == c.discriminator.activation, "discriminator.activation",
             "must match generator.activation")
    e = c.embedding
    _require(e.kind in ("identity", "autoencoder"), "embedding.kind",
             "must be identity or autoencoder (kernel embeddings are fitted per batch, not trained)")
    if e.kind == "autoencoder":
        _require(e.widths is not None and len(e.widths) >= 2, "embedding.widths", "encoder widths required")
    o = c.objective
    _require(o.phi in ("log_delta", "identity"), "objective.phi", "must be log_delta or identity")
    _require(0 < o.delta < 1, "objective.delta", "must lie in (0, 1)")
    _require(o.lam >= 0, "objective.lam", "must be >= 0")
    _require(o.rho > 0, "objective.rho", "must be > 0")
    _require(o.rule in ("full", "knn"), "objective.rule", "must be full or knn")
    _require(o.knn_k >= 1, "objective.knn_k", "must be >= 1")
    _require(o.pairing in ("index", "nearest"), "objective.pairing", "must be index or nearest")
    _require(o.reg_form in ("pairwise", "pointwise", "conventional"), "objective.reg_form", "unknown form")
    for side in ("generator", "discriminator"):
        ch = getattr(c.optimizer, side)
        _require(ch.name in ("adam", "rmsprop", "sgd"), f"optimizer.{side}.name", "adam, rmsprop or sgd")
        _require(ch.lr > 0, f"optimizer.{side}.lr", "must be > 0")
    t = c.training
    _require(t.batch_size >= 2, "training.batch_size", "must be >= 2")
    _require(t.iterations >= 1, "training.iterations", "must be >= 1")
    _require(t.scheme in ("simultaneous", "alternating"), "training.scheme", "simultaneous or alternating")
    _require(t.k_disc >= 1, "training.k_disc", "must be >= 1")
    _require(t.clip is None or t.clip > 0, "training.clip", "must be > 0")
    _require(t.log_every >= 1, "training.log_every", "must be >= 1")
    a = c.analysis
    _require(a.mode in ("stability", "gap", "equilibrium"), "analysis.mode", "stability, gap or equilibrium")
    _require(a.fixture in ("dirac-wgan", "dirac-gan", "mlp"), "analysis.fixture", "dirac-wgan, dirac-gan or mlp")
    _require(a.reg in ("pointwise", "pairwise"), "analysis.reg", "pointwise or pairwise")
    _require(a.lam >= 0, "analysis.lam", "must be >= 0")
    _require(a.dt > 0, "analysis.dt", "must be > 0")
    _require(a.steps >= 1, "analysis.steps", "must be >= 1")
    _require(a.fd_step > 0, "analysis.fd_step", "must be > 0")
    _require(len(a.m_values) > 0 and min(a.m_values) >= 2, "analysis.m_values", "values must be >= 2")
    _require(a.trials >= 1, "analysis.trials", "must be >= 1")
    _require(a.epsilon > 0, "analysis.epsilon", "must be > 0")
    _require(a.adversary_budget >= 0, "analysis.adversary_budget", "must be >= 0")
    g = c.output.gs
    _require(g.landmarks >= 2, "output.gs.landmarks", "must be >= 2")
    _require(g.gamma > 0, "output.gs.gamma", "must be > 0")
    _require(g.i_max >= 1, "output.gs.i_max", "must be >= 1")
    _require(g.repeats >= 1, "output.gs.repeats", "must be >= 1")
    _require(g.samples >= 2, "output.gs.samples", "must be >= 2")


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "").validate()


def loads(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# --- presets ------------------------------------------------------------------

_PRESETS = {
    "ring8-gan-baseline": {"objective": {"phi": "log_delta", "lam": 0.0}},
    "ring8-mrgan": {"objective": {"phi": "log_delta", "lam": 0.5, "rho": 128.0}},
    "dirac-wgan": {"analysis": {"mode": "stability", "fixture": "dirac-wgan", "lam": 0.0,
                                "theta0": [1.0, 1.0], "steps": 2000, "dt": 0.01}},
    "dirac-wgan-reg": {"analysis": {"mode": "stability", "fixture": "dirac-wgan", "lam": 0.5,
                                    "theta0": [1.0, 1.0], "steps": 2000, "dt": 0.01}},
    "dirac-gan": {"analysis": {"mode": "stability", "fixture": "dirac-gan", "lam": 0.5, "reg": "pairwise",
                               "theta0": [0.5, 0.5], "steps": 2000, "dt": 0.01}},
    "ring8-gap": {"analysis": {"mode": "gap", "trials": 50}, "objective": {"lam": 0.5}},
    "ring8-equilibrium": {"analysis": {"mode": "equilibrium", "epsilon": 0.1, "adversary_budget": 10,
                                       "adversary_steps": 2000}, "objective": {"lam": 0.5}},
    "mnist-small": {
        "dataset": {"kind": "idx", "path": "mnist-2k-images.idx", "limit": 2000},
        "generator": {"latent_dim": 16, "hidden": [128, 128]},
        "discriminator": {"hidden": [128, 128]},
        "objective": {"phi": "identity", "rho": 6.4, "lam": 0.0},
        "optimizer": {"generator": {"name": "rmsprop", "lr": 1e-4},
                      "discriminator": {"name": "rmsprop", "lr": 1e-4}},
        "training": {"batch_size": 64, "iterations": 5000, "scheme": "alternating", "k_disc": 5, "clip": 0.01},
        "output": {"svg": False, "gs": {"samples": 500, "repeats": 20}},
    },
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    if name not in _PRESETS:
        raise ConfigError("--preset", f"unknown preset {name!r} (known: {', '.join(preset_names())})")
    data = merge(ExperimentConfig().to_dict(), _PRESETS[name])
    data["name"] = name
    return config_from_dict(data)
