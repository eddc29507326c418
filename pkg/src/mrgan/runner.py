"""Experiment orchestration behind the command line: train, eval-gs, analyze, sweep, gen-data."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis.dirac import DiracModel, dirac_gan, dirac_wgan
from .analysis.dynamics import block_identities, fit_decay_rate, integrate_dynamics, jacobian_at
from .analysis.eigen import hurwitz_check
from .analysis.equilibrium import build_uniform_mixture, verify_equilibrium
from .analysis.gap import objective_gap
from .config import ConfigError, ExperimentConfig
from .datasets import Dataset, MixtureSpec, default_basis, load_csv, load_idx, sample_mixture, save_csv
from .metrics.geometry_score import geometry_score
from .metrics.modes import mode_coverage
from .nets import IdentityEmbedding, MlpNetwork, load_network, pretrain_autoencoder, save_network
from .objective import MeasuringFunction
from .plots import scatter_svg
from .training import TrainingAborted, build_networks, train

log = logging.getLogger(__name__)


class RunAborted(RuntimeError):
    def __init__(self, message: str, manifest: dict):
        super().__init__(message)
        self.manifest = manifest


# --- data -------------------------------------------------------------------------

def mixture_spec(cfg: ExperimentConfig) -> MixtureSpec:
    ds = cfg.dataset
    return MixtureSpec(ds.modes, ds.radius, ds.sigma, ds.embed, basis=default_basis(ds.basis_seed))


def load_dataset(cfg: ExperimentConfig, base_dir=".") -> Dataset:
    ds = cfg.dataset
    if ds.kind == "ring8":
        data = sample_mixture(mixture_spec(cfg), ds.n, np.random.default_rng(ds.seed))
    else:
        path = Path(ds.path)
        if not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise FileNotFoundError(f"dataset file not found: {path}")
        data = load_idx(path) if ds.kind == "idx" else load_csv(path, ds.d, ds.header)
    if ds.limit is not None:
        data = Dataset(data.samples[:ds.limit], data.provenance)
    if len(data) == 0:
        raise ConfigError("dataset", "dataset is empty")
    return data


def load_points(path, n: int = 2000, seed: int = 0) -> np.ndarray:
    """Samples from a CSV file, an IDX image file or a generator checkpoint (n fresh draws)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    name = path.name.lower()
    if name.endswith(".json"):
        net = load_network(path)
        return net(np.random.default_rng(seed).standard_normal((n, net.in_dim)))
    if name.endswith(".idx") or name.endswith(".gz") or "idx" in name:
        return load_idx(path).samples
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    d = len(first.strip().split(",")) if first.strip() else 0
    return load_csv(path, d).samples


def build_embedding(cfg: ExperimentConfig, data: np.ndarray):
    e = cfg.embedding
    if e.kind == "identity":
        return IdentityEmbedding()
    if e.widths[0] != data.shape[1]:
        raise ConfigError("embedding.widths", f"first width must equal the data dimension {data.shape[1]}")
    return pretrain_autoencoder(data, e.widths, iters=e.iters, lr=e.lr, seed=cfg.training.seed)


# --- files ------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Outputs:
    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[dict] = []

    def write(self, name: str, text: str, kind: str) -> Path:
        p = self.dir / name
        p.write_text(text, encoding="utf-8", newline="")
        self.files.append({"path": name, "kind": kind, "sha256": _sha256(p)})
        return p

    def network(self, name: str, net: MlpNetwork) -> Path:
        p = self.dir / name
        save_network(net, p)
        self.files.append({"path": name, "kind": "checkpoint", "sha256": _sha256(p)})
        return p

    def manifest(self, command: str, cfg: ExperimentConfig | None, status: str, extra=None) -> dict:
        m = {"tool": "mrgan", "version": __version__, "command": command, "status": status,
             "seed": cfg.training.seed if cfg is not None else None,
             "config": cfg.to_dict() if cfg is not None else None,
             "files": list(self.files)}
        if extra:
            m.update(extra)
        (self.dir / "manifest.json").write_text(json.dumps(m, indent=2) + "\n", encoding="utf-8")
        return m


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- commands ---------------------------------------------------------------------

def sample_generator(u: MlpNetwork, n: int, seed: int) -> np.ndarray:
    return u(np.random.default_rng(seed).standard_normal((n, u.in_dim)))


def run_train(cfg: ExperimentConfig, out_dir, base_dir=".") -> dict:
    """Train once and write config, history, checkpoints, evaluation and a manifest."""
    out = _Outputs(out_dir)
    out.write("config.json", cfg.to_json(), "config")
    data = load_dataset(cfg, base_dir).samples
    psi = build_embedding(cfg, data)
    tc = cfg.train_config()
    try:
        u, v, history = train(tc, data, psi=psi)
    except TrainingAborted as exc:
        out.write("history.csv", exc.history.to_csv(), "history")
        out.network("generator.json", exc.generator)
        out.network("discriminator.json", exc.discriminator)
        m = out.manifest("train", cfg, "aborted", {"error": str(exc), "iteration": exc.iteration})
        raise RunAborted(str(exc), m) from exc
    out.write("history.csv", history.to_csv(), "history")
    out.network("generator.json", u)
    out.network("discriminator.json", v)
    n_eval = cfg.output.eval_samples
    gen = sample_generator(u, n_eval, cfg.training.seed + 1)
    evaluation = {}
    if cfg.dataset.kind == "ring8":
        evaluation["modes"] = mode_coverage(gen, mixture_spec(cfg)).to_dict()
    out.write("samples.csv", _csv_text(gen), "samples")
    if cfg.output.svg:
        real = data[np.random.default_rng(cfg.training.seed).choice(len(data), min(n_eval, len(data)),
                                                                      replace=False)]
        out.write("scatter.svg", scatter_svg(real, gen, title=cfg.name), "plot")
    if evaluation:
        out.write("evaluation.json", _json(evaluation), "report")
    return out.manifest("train", cfg, "ok", {"evaluation": evaluation})


def _csv_text(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(samples, float):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def gs_real_subset(data, cfg: ExperimentConfig) -> np.ndarray:
    """The real points a sweep scores against: ``output.gs.samples`` rows drawn with ``output.gs.seed``."""
    g = cfg.output.gs
    return data[np.random.default_rng(g.seed).choice(len(data), min(g.samples, len(data)), replace=False)]


def gs_report(real, gen, cfg: ExperimentConfig, seed: int | None = None):
    g = cfg.output.gs
    return geometry_score(real, gen, L=g.landmarks, gamma=g.gamma, i_max=g.i_max, repeats=g.repeats,
                          seed=g.seed if seed is None else seed, report=True)


def run_eval_gs(real_path, gen_path, cfg: ExperimentConfig, out_dir=None, seed: int | None = None) -> dict:
    g = cfg.output.gs
    s = g.seed if seed is None else seed
    real = load_points(real_path, g.samples, s)
    gen = load_points(gen_path, g.samples, s + 1)
    if real.shape[1] != gen.shape[1]:
        raise ConfigError("eval-gs", f"dimension mismatch: real d={real.shape[1]}, generated d={gen.shape[1]}")
    rep = gs_report(real, gen, cfg, s).to_dict()
    if out_dir is not None:
        out = _Outputs(out_dir)
        out.write("gs.json", _json(rep), "report")
        out.manifest("eval-gs", cfg, "ok", {"inputs": [str(real_path), str(gen_path)]})
    return rep


def stability_report(cfg: ExperimentConfig) -> dict:
    a = cfg.analysis
    if a.fixture == "mlp":
        raise ConfigError("analysis.fixture", "stability analysis runs on the Dirac fixtures")
    target = np.asarray(a.target, float)
    model: DiracModel = (dirac_wgan(a.lam, target, a.reg) if a.fixture == "dirac-wgan"
                         else dirac_gan(a.lam, target, cfg.objective.delta, a.reg))
    theta_star = model.equilibrium()
    J = jacobian_at(model, theta_star, a.fd_step)
    hz = hurwitz_check(J)
    rep = {"mode": "stability", "fixture": a.fixture, "lam": a.lam, "reg": a.reg,
           "equilibrium": theta_star.tolist(), "jacobian": J.tolist(),
           "analytic_jacobian": model.analytic_jacobian(theta_star).tolist(),
           "blocks": block_identities(J, model.n_u), **hz.to_dict()}
    if a.theta0 is not None:
        theta0 = np.asarray(a.theta0, float)
        if theta0.shape != theta_star.shape:
            raise ConfigError("analysis.theta0", f"expected {theta_star.size} values")
        tr = integrate_dynamics(model, theta0, a.dt, a.steps, theta_star)
        d = tr.distances
        rep["trajectory"] = {"dt": a.dt, "steps": a.steps, "divergent": tr.divergent,
                             "initial_distance": float(d[0]), "final_distance": float(d[-1]),
                             "radius_ratio": float(d.min() / d.max()) if d.max() > 0 else 1.0}
        t_end = tr.times[-1]
        if t_end > 1.0 and np.all(d > 0):
            rep["trajectory"]["decay_rate"] = fit_decay_rate(tr.times, d, 0.25 * t_end, t_end)
    return rep


def gap_report(cfg: ExperimentConfig, base_dir=".") -> dict:
    a = cfg.analysis
    pop = a.population_m or 100 * max(a.m_values)
    data = load_dataset(cfg, base_dir).samples
    if len(data) < pop:
        if cfg.dataset.kind != "ring8":
            raise ConfigError("analysis.population_m", f"dataset has {len(data)} samples, need {pop}")
        data = sample_mixture(mixture_spec(cfg), pop, np.random.default_rng(cfg.dataset.seed)).samples
    u, v = build_networks(cfg.train_config(), data.shape[1], np.random.default_rng(cfg.training.seed))
    o = cfg.objective
    tab = objective_gap(u, v, data, MeasuringFunction(o.phi, o.delta), a.m_values, pop, a.trials, o.lam,
                        o.rho, o.rule, o.knn_k, seed=cfg.training.seed)
    return {"mode": "gap", **tab.to_dict()}


def equilibrium_report(cfg: ExperimentConfig, base_dir=".") -> dict:
    if cfg.dataset.kind != "ring8":
        raise ConfigError("dataset.kind", "the equilibrium check uses the ring mixture (targets = mode centres)")
    a, o = cfg.analysis, cfg.objective
    spec = mixture_spec(cfg)
    real = load_dataset(cfg, base_dir).samples
    mix = build_uniform_mixture(spec.centers(), fit_iters=a.fit_iters, eps_fit=a.eps_fit,
                                latent_dim=cfg.generator.latent_dim, seed=cfg.training.seed)
    rep = verify_equilibrium(mix, real, MeasuringFunction(o.phi, o.delta), lam=o.lam, epsilon=a.epsilon,
                             adversary_budget=a.adversary_budget, adversary_steps=a.adversary_steps,
                             rng=np.random.default_rng(cfg.training.seed), rho=o.rho, rule=o.rule)
    return {"mode": "equilibrium", "components": mix.fit_report(), **rep.to_dict()}


def run_analyze(mode: str, cfg: ExperimentConfig, out_dir=None, base_dir=".") -> dict:
    if mode == "stability":
        rep = stability_report(cfg)
    elif mode == "gap":
        rep = gap_report(cfg, base_dir)
    elif mode == "equilibrium":
        rep = equilibrium_report(cfg, base_dir)
    else:
        raise ConfigError("analyze", f"unknown mode {mode!r}")
    if out_dir is not None:
        out = _Outputs(out_dir)
        out.write("config.json", cfg.to_json(), "config")
        out.write(f"{mode}.json", _json(rep), "report")
        if mode == "gap":
            out.write("gap.csv", _gap_csv(rep), "table")
        out.manifest(f"analyze {mode}", cfg, "ok")
    return rep


def _gap_csv(rep) -> str:
    lines = ["m,mean_gap,std_gap,gap_sqrt_m"]
    lines += [f"{r['m']},{r['mean_gap']!r},{r['std_gap']!r},{r['gap_sqrt_m']!r}" for r in rep["rows"]]
    return "\n".join(lines) + "\n"


SWEEP_COLUMNS = ("lam", "rho", "seed", "gs", "modes_covered", "hq_fraction", "status", "error")


def sweep_grid(lambdas, rhos) -> list[tuple[float, float]]:
    """Row order: lambda-major over the given grid, then one lam = 0 anchor row unless already present."""
    lambdas, rhos = [float(x) for x in lambdas], [float(x) for x in rhos]
    if not lambdas or not rhos:
        raise ConfigError("sweep", "grid must be non-empty")
    rows = [(lam, rho) for lam in lambdas for rho in rhos]
    if 0.0 not in lambdas:
        rows.append((0.0, rhos[0]))
    return rows


def run_sweep(cfg: ExperimentConfig, lambdas, rhos, out_dir, base_dir=".") -> str:
    """One training run per (lam, rho); each row records GS and mode coverage, failures included."""
    out = _Outputs(out_dir)
    out.write("config.json", cfg.to_json(), "config")
    data = load_dataset(cfg, base_dir).samples
    g = cfg.output.gs
    real = gs_real_subset(data, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for lam, rho in sweep_grid(lambdas, rhos):
        row = {"lam": lam, "rho": rho, "seed": cfg.training.seed, "gs": "", "modes_covered": "",
               "hq_fraction": "", "status": "ok", "error": ""}
        try:
            row_cfg = replace(cfg, objective=replace(cfg.objective, lam=lam, rho=rho))
            psi = build_embedding(row_cfg, data)
            u, _, _ = train(row_cfg.train_config(), data, psi=psi)
            gen = sample_generator(u, g.samples, g.seed + 1)
            row["gs"] = repr(geometry_score(real, gen, g.landmarks, g.gamma, g.i_max, g.repeats, g.seed))
            if cfg.dataset.kind == "ring8":
                rep = mode_coverage(gen, mixture_spec(cfg))
                row["modes_covered"], row["hq_fraction"] = rep.covered, repr(rep.hq_fraction)
        except Exception as exc:       # a failed row is recorded and the sweep continues
            row["status"], row["error"] = "failed", f"{type(exc).__name__}: {exc}"
            log.warning("sweep row lam=%s rho=%s failed: %s", lam, rho, exc)
        w.writerow([row[c] for c in SWEEP_COLUMNS])
    table = buf.getvalue()
    out.write("sweep.csv", table, "table")
    out.manifest("sweep", cfg, "ok", {"lambdas": list(lambdas), "rhos": list(rhos)})
    return table


def run_gen_data(cfg: ExperimentConfig, out_path) -> Path:
    if cfg.dataset.kind != "ring8":
        raise ConfigError("dataset.kind", "gen-data writes the synthetic ring mixture only")
    data = load_dataset(cfg)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_csv(out_path, data.samples)
    return out_path
