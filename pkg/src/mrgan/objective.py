"""Measuring functions, affinity graphs and the empirical manifold-regularized objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import autodiff as ad
from .nets import IdentityEmbedding

REG_FORMS = ("pairwise", "pointwise", "conventional")
_PAIR_BLOCK = 1 << 22          # elements of the pairwise difference tensor per block


@dataclass(frozen=True)
class MeasuringFunction:
    """phi applied to discriminator outputs: ``log_delta`` or ``identity``."""

    kind: str = "log_delta"
    delta: float = 0.1

    def __post_init__(self):
        if self.kind not in ("log_delta", "identity"):
            raise ValueError(f"unknown measuring function {self.kind!r}")
        if self.kind == "log_delta" and not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return t
        return np.log(self.delta + (1.0 - self.delta) * t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return np.ones_like(t)
        return (1.0 - self.delta) / (self.delta + (1.0 - self.delta) * t)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return np.zeros_like(t)
        return -((1.0 - self.delta) / (self.delta + (1.0 - self.delta) * t)) ** 2

    def on_tape(self, t: ad.Var) -> ad.Var:
        if self.kind == "identity":
            return t
        return ad.log(t * (1.0 - self.delta) + self.delta)

    @property
    def lipschitz(self) -> float:
        return 1.0 if self.kind == "identity" else 1.0 / self.delta

    @property
    def bound(self) -> float:
        """Delta such that phi maps [0, 1] into [-Delta, Delta]."""
        return 1.0 if self.kind == "identity" else abs(float(np.log(self.delta)))

    @property
    def grad_bound(self) -> float:
        """sup |phi'| over [0, 1]."""
        return 1.0 if self.kind == "identity" else (1.0 - self.delta) / self.delta

    @property
    def value_at_equilibrium(self) -> float:
        """2 phi(1/2), the payoff of a discriminator that always outputs 1/2."""
        return 2.0 * float(self(0.5))

    def to_dict(self):
        return {"kind": self.kind, "delta": self.delta}


def measuring_apply(phi: MeasuringFunction, t) -> float | np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0) or np.any(np.isnan(t)):
        raise ValueError("measuring functions take arguments in [0, 1]")
    out = phi(t)
    return float(out) if out.ndim == 0 else out


@dataclass
class AffinityGraph:
    weights: np.ndarray
    rho: float
    rule: str = "full"
    k: int | None = None

    @property
    def m(self) -> int:
        return len(self.weights)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.weights.sum(1)) - self.weights


def affinity_weights(x, rho: float, rule: str = "full", k: int = 8) -> AffinityGraph:
    """Heat-kernel weights exp(-||x_i - x_j||^2 / rho) over a real-data batch.

    ``full`` connects every pair (including i == j); ``knn`` keeps an edge when
    either endpoint is among the other's ``k`` nearest neighbours and zeroes
    the diagonal.
    """
    if rho <= 0:
        raise ValueError("kernel scale rho must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = len(x)
    if m < 2:
        raise ValueError("need at least two samples")
    sq = np.sum(x * x, 1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * x @ x.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    W = np.exp(-d2 / rho)
    if rule == "full":
        return AffinityGraph(W, rho, "full")
    if rule != "knn":
        raise ValueError(f"unknown neighbourhood rule {rule!r}")
    kk = min(k, m - 1)
    order = np.argsort(d2 + np.diag(np.full(m, np.inf)), axis=1, kind="stable")[:, :kk]
    mask = np.zeros((m, m), dtype=bool)
    mask[np.repeat(np.arange(m), kk), order.ravel()] = True
    mask |= mask.T
    return AffinityGraph(np.where(mask, W, 0.0), rho, "knn", kk)


def regularizer_from_embeddings(fx, fy, W) -> float:
    """(1/m^2) sum_ij w_ij ||(fy_i - fx_i) - (fy_j - fx_j)||^2.

    Summed pair by pair rather than through the Laplacian quadratic form:
    with heat-kernel weights spanning many decades the quadratic form loses
    up to six digits to cancellation. Rows are processed in blocks so the
    (rows, m, d) difference tensor stays small.
    """
    W = np.asarray(getattr(W, "weights", W), dtype=float)
    f = np.asarray(fy, dtype=float) - np.asarray(fx, dtype=float)
    f = f.reshape(len(f), -1)
    if W.shape != (len(f), len(f)):
        raise ValueError(f"affinity matrix {W.shape} does not match {len(f)} samples")
    m, d = f.shape
    step = max(1, _PAIR_BLOCK // max(m * d, 1))
    total = 0.0
    for lo in range(0, m, step):
        diff = f[lo:lo + step, None, :] - f[None, :, :]
        total += float(np.sum(W[lo:lo + step] * np.einsum("ijk,ijk->ij", diff, diff)))
    return total / m ** 2


def manifold_regularizer(x, y, psi, W) -> float:
    fx, fy = psi(x), psi(y)
    if np.shape(fx) != np.shape(fy):
        raise ValueError(f"embedding outputs differ in shape: {np.shape(fx)} vs {np.shape(fy)}")
    return regularizer_from_embeddings(fx, fy, W)


def regularizer_on_tape(fx, fy, W, form: str = "pairwise") -> ad.Var:
    """Tape version of the regularizer; ``fx``/``fy`` are Vars or arrays of shape (m, k)."""
    tape = ad._tape_of(fx, fy)
    f = ad.sub(fy, fx)
    m = f.shape[0]
    if form == "pointwise":
        return ad.mul(ad.sum(ad.square(f)), 1.0 / m)
    Wm = np.asarray(getattr(W, "weights", W), dtype=float)
    if form == "conventional":
        f = tape.lift(fy)
    elif form != "pairwise":
        raise ValueError(f"unknown regularizer form {form!r}")
    lap = np.diag(Wm.sum(1)) - Wm
    centre = np.eye(m) - 1.0 / m
    g = ad.matmul(centre, f)
    return ad.mul(ad.sum(ad.mul(g, ad.matmul(lap, g))), 2.0 / m ** 2)


def regularizer_large(fx, fy, x, rho: float, rule: str = "full", k: int = 8, chunk: int = 2048) -> float:
    """Regularizer for batches too large for a dense m x m affinity matrix.

    Weights are rebuilt block by block from ``x``; the knn rule uses a
    k-d tree.
    """
    f = np.asarray(fy, float) - np.asarray(fx, float)
    f = f.reshape(len(f), -1)
    g = f - f.mean(0)
    x = np.asarray(x, float)
    m = len(x)
    gn = np.sum(g * g, 1)
    if rule == "knn":
        tree = cKDTree(x)
        kk = min(k, m - 1)
        _, idx = tree.query(x, kk + 1)
        rows = np.repeat(np.arange(m), kk + 1)
        cols = idx.ravel()
        keep = rows != cols
        pairs = set(zip(rows[keep].tolist(), cols[keep].tolist()))
        pairs |= {(j, i) for i, j in pairs}
        p = np.array(sorted(pairs))
        w = np.exp(-np.sum((x[p[:, 0]] - x[p[:, 1]]) ** 2, 1) / rho)
        total = np.sum(w * np.sum((g[p[:, 0]] - g[p[:, 1]]) ** 2, 1))
        return float(total / m ** 2)
    sq = np.sum(x * x, 1)
    quad = 0.0
    chunk = max(1, min(chunk, 4_000_000 // m))     # keep each block near 32 MB
    for s in range(0, m, chunk):
        xs = x[s:s + chunk]
        d2 = np.maximum(sq[s:s + chunk, None] + sq[None, :] - 2.0 * xs @ x.T, 0.0)
        Wb = np.exp(-d2 / rho)
        quad += np.sum(Wb.sum(1) * gn[s:s + chunk]) - np.sum(g[s:s + chunk] * (Wb @ g))
    return max(float(2.0 * quad / m ** 2), 0.0)


@dataclass
class Batch:
    """Real samples ``x`` paired by index with generated samples.

    Either ``h`` (latent codes, regenerated through the generator) or ``y``
    (fixed generated samples) must be supplied.
    """

    x: np.ndarray
    h: np.ndarray | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        n = len(self.x)
        for name in ("h", "y"):
            val = getattr(self, name)
            if val is not None:
                val = np.atleast_2d(np.asarray(val, dtype=float))
                if len(val) != n:
                    raise ValueError(f"batch.{name} has {len(val)} rows but x has {n}")
                setattr(self, name, val)
        if self.h is None and self.y is None:
            raise ValueError("batch needs latent codes h or generated samples y")

    @property
    def m(self) -> int:
        return len(self.x)

    def generated(self, u=None) -> np.ndarray:
        if u is not None and self.h is not None:
            return u(self.h)
        if self.y is None:
            raise ValueError("no generator given and batch has no generated samples")
        return self.y


def pair_nearest(x_pool, y) -> np.ndarray:
    """For every generated sample, the nearest real sample from ``x_pool``."""
    _, idx = cKDTree(np.asarray(x_pool, float)).query(np.asarray(y, float))
    return np.asarray(x_pool, float)[idx]


@dataclass
class ObjectiveTerms:
    real: ad.Var       # (1/m) sum phi(D(x_i))
    fake: ad.Var       # (1/m) sum phi(1 - D(y_i))
    reg: ad.Var
    total: ad.Var
    y: ad.Var
    d_real: ad.Var
    d_fake: ad.Var

    @property
    def generator_loss(self) -> ad.Var:
        return self.total - self.real

    @property
    def discriminator_loss(self) -> ad.Var:
        return ad.neg(self.real + self.fake)


def objective_on_tape(u, v, u_params, v_params, x, h, phi: MeasuringFunction, psi, W, lam: float,
                      reg_form: str = "pairwise", y=None) -> ObjectiveTerms:
    """Record every term of the empirical objective on one tape.

    ``u``/``v`` are networks (anything exposing ``on_tape(params, x)``);
    ``u_params``/``v_params`` are their tape variables. When ``y`` is given
    the generator is bypassed.
    """
    tape = (u_params + v_params)[0].tape
    if y is None:
        y = u.on_tape(u_params, h)
    else:
        y = tape.lift(y)
    x = tape.lift(x)
    m = x.shape[0]
    d_real = v.on_tape(v_params, x)
    d_fake = v.on_tape(v_params, y)
    real = ad.mul(ad.sum(phi.on_tape(d_real)), 1.0 / m)
    fake = ad.mul(ad.sum(phi.on_tape(1.0 - d_fake)), 1.0 / m)
    if lam == 0:
        reg = tape.const(0.0)
    else:
        psi = psi or IdentityEmbedding()
        reg = regularizer_on_tape(psi.on_tape(x), psi.on_tape(y), W, reg_form)
    total = real + fake + ad.mul(reg, lam)
    return ObjectiveTerms(real, fake, reg, total, y, d_real, d_fake)


def _disc_values(v, z):
    out = v(z)
    return out[..., 0] if out.ndim == 2 else out


def empirical_objective(u, v, batch: Batch, phi: MeasuringFunction, psi, W, lam: float) -> float:
    """(1/m) sum [phi(D(x_i)) + phi(1 - D(y_i))] + lam * regularizer."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    y = batch.generated(u)
    val = float(np.mean(phi(_disc_values(v, batch.x)) + phi(1.0 - _disc_values(v, y))))
    if lam > 0:
        val += lam * manifold_regularizer(batch.x, y, psi or IdentityEmbedding(), W)
    return val


def _grads(u, v, batch, phi, psi, W, lam, which, reg_form="pairwise"):
    tape = ad.Tape()
    up = [tape.var(p, "u") for p in u.params()]
    vp = [tape.var(p, "v") for p in v.params()]
    terms = objective_on_tape(u, v, up, vp, batch.x, batch.h, phi, psi, W, lam, reg_form)
    out = terms.generator_loss if which == "generator" else terms.discriminator_loss
    tape.backward(out)
    params = up if which == "generator" else vp
    return float(out.value), [tape.grad(p) for p in params]


def generator_loss(u, v, batch: Batch, phi, psi, W, lam: float, reg_form: str = "pairwise"):
    """Generator cost and its gradient with respect to ``u.params()``.

    Samples are regenerated from ``batch.h`` on the tape so the gradient
    flows through the generator (and through psi for learned embeddings).
    """
    if batch.h is None:
        raise ValueError("generator_loss needs latent codes in the batch")
    return _grads(u, v, batch, phi, psi, W, lam, "generator", reg_form)


def discriminator_loss(u, v, batch: Batch, phi):
    """Negated GAN terms (descent form) and the gradient with respect to ``v.params()``."""
    if batch.h is None:
        raise ValueError("discriminator_loss needs latent codes in the batch")
    return _grads(u, v, batch, phi, None, None, 0.0, "discriminator")
