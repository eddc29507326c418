"""Dense networks for the generator, discriminator and embedding maps."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .optim import Adam

ACTIVATIONS = ("tanh", "relu", "sigmoid", "identity")

_NP_ACT = {
    "tanh": np.tanh,
    "relu": lambda z: np.maximum(z, 0.0),
    "sigmoid": lambda z: 0.5 * (1.0 + np.tanh(0.5 * z)),
    "identity": lambda z: z,
}
_TAPE_ACT = {"tanh": ad.tanh, "relu": ad.relu, "sigmoid": ad.sigmoid, "identity": lambda z: z}

CHECKPOINT_FORMAT = "mrgan-mlp"
CHECKPOINT_VERSION = 1


@dataclass
class MlpNetwork:
    """Stack of affine layers; ``weights[k]`` has shape ``(widths[k], widths[k+1])``."""

    widths: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden: str = "tanh"
    output: str = "identity"

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("need at least an input and an output width")
        if self.hidden not in ACTIVATIONS or self.output not in ACTIVATIONS:
            raise ValueError(f"activations must be in {ACTIVATIONS}")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.widths[k], self.widths[k + 1]) or b.shape != (self.widths[k + 1],):
                raise ValueError(f"layer {k}: weight {W.shape}, bias {b.shape} "
                                 f"inconsistent with widths {self.widths}")
        if len(self.weights) != len(self.widths) - 1:
            raise ValueError("one weight matrix per consecutive width pair")

    @classmethod
    def init(cls, widths, rng: np.random.Generator, hidden="tanh", output="identity") -> "MlpNetwork":
        widths = [int(w) for w in widths]
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            s = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-s, s, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-s, s, size=fan_out))
        return cls(widths, weights, biases, hidden, output)

    @classmethod
    def zeros(cls, widths, hidden="tanh", output="identity") -> "MlpNetwork":
        widths = [int(w) for w in widths]
        return cls(widths, [np.zeros((a, b)) for a, b in zip(widths[:-1], widths[1:])],
                   [np.zeros(b) for b in widths[1:]], hidden, output)

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    def params(self) -> list[np.ndarray]:
        """Parameters in tape order: W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def with_params(self, params) -> "MlpNetwork":
        return MlpNetwork(list(self.widths), [np.array(p, dtype=float) for p in params[0::2]],
                          [np.array(p, dtype=float) for p in params[1::2]], self.hidden, self.output)

    @property
    def n_params(self) -> int:
        return int(np.sum([p.size for p in self.params()]))

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def with_flat(self, vec) -> "MlpNetwork":
        vec = np.asarray(vec, dtype=float)
        if vec.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {vec.size}")
        out, k = [], 0
        for p in self.params():
            out.append(vec[k:k + p.size].reshape(p.shape))
            k += p.size
        return self.with_params(out)

    def copy(self) -> "MlpNetwork":
        return self.with_params([p.copy() for p in self.params()])

    def _check_input(self, x):
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"input width {x.shape[-1]} does not match network input width {self.in_dim}")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_input(x)
        single = x.ndim == 1
        z = np.atleast_2d(x)
        n_layers = len(self.weights)
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = z @ W + b
            z = _NP_ACT[self.output if k == n_layers - 1 else self.hidden](z)
        return z[0] if single else z

    def on_tape(self, params: list[ad.Var] | None, x) -> ad.Var:
        """Forward pass recorded on a tape.

        ``params`` are tape variables in :meth:`params` order; pass ``None``
        to treat the weights as constants (gradients then flow only into
        ``x``). ``x`` is a Var or array of shape ``(n, in_dim)``.
        """
        self._check_input(np.asarray(x.value if isinstance(x, ad.Var) else x))
        if params is None:
            if not isinstance(x, ad.Var):
                raise TypeError("need tape variables for params or x")
            params = [x.tape.const(p) for p in self.params()]
        z = x
        n_layers = len(self.weights)
        for k in range(n_layers):
            z = ad.add(ad.matmul(z, params[2 * k]), params[2 * k + 1])
            z = _TAPE_ACT[self.output if k == n_layers - 1 else self.hidden](z)
        return z


def generator_forward(u: MlpNetwork, h) -> np.ndarray:
    return u(h)


def discriminator_forward(v: MlpNetwork, x) -> np.ndarray:
    """Discriminator outputs in (0, 1); one value per sample."""
    if v.output != "sigmoid" or v.out_dim != 1:
        raise ValueError("discriminator needs a single sigmoid output")
    out = v(x)
    return out[..., 0]


# --- embeddings -----------------------------------------------------------


class IdentityEmbedding:
    lipschitz = 1.0

    def __call__(self, x):
        return np.asarray(x, dtype=float)

    def on_tape(self, x: ad.Var) -> ad.Var:
        return x

    def to_dict(self):
        return {"kind": "identity"}


@dataclass
class AutoencoderEmbedding:
    encoder: MlpNetwork
    decoder: MlpNetwork
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    def __post_init__(self):
        if self.encoder.out_dim >= self.encoder.in_dim:
            raise ValueError("autoencoder bottleneck must be narrower than the data dimension")
        if self.decoder.in_dim != self.encoder.out_dim or self.decoder.out_dim != self.encoder.in_dim:
            raise ValueError("decoder widths do not mirror the encoder")

    def __call__(self, x):
        return self.encoder(x)

    def reconstruct(self, x):
        return self.decoder(self.encoder(x))

    def on_tape(self, x: ad.Var) -> ad.Var:
        return self.encoder.on_tape(None, x)

    def to_dict(self):
        return {"kind": "autoencoder", "encoder": network_to_dict(self.encoder),
                "decoder": network_to_dict(self.decoder)}


def gaussian_kernel(a, b, scale: float) -> np.ndarray:
    """exp(-||a_i - b_j||^2 / scale) for every row pair."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    d2 = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
    return np.exp(-np.maximum(d2, 0.0) / scale)


@dataclass
class KernelEmbedding:
    """psi(x) = sum_i alpha_i K(c_i, x) with a Gaussian kernel; one output coordinate."""

    centers: np.ndarray
    coefficients: np.ndarray
    scale: float
    objective: float = float("nan")
    history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.coefficients = np.asarray(self.coefficients, dtype=float).ravel()
        if len(self.centers) == 0:
            raise ValueError("kernel embedding needs at least one center")
        if len(self.coefficients) != len(self.centers):
            raise ValueError("one coefficient per center")
        if self.scale <= 0:
            raise ValueError("kernel scale must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = gaussian_kernel(x, self.centers, self.scale) @ self.coefficients
        return out[:, None] if x.ndim == 2 else out

    def on_tape(self, x: ad.Var) -> ad.Var:
        c = self.centers
        sq = ad.reshape(ad.sum(ad.square(x), axis=1), (x.shape[0], 1))
        d2 = sq - 2.0 * ad.matmul(x, c.T) + np.sum(c * c, 1)[None, :]
        K = ad.exp(d2 * (-1.0 / self.scale))
        return ad.matmul(K, self.coefficients[:, None])

    def to_dict(self):
        return {"kind": "kernel", "centers": self.centers.tolist(),
                "coefficients": self.coefficients.tolist(), "scale": self.scale}


def embed(spec, x) -> np.ndarray:
    return spec(x)


def pretrain_autoencoder(data, widths, iters: int = 2000, lr: float = 1e-3, seed: int = 0,
                         batch_size: int = 256, hidden: str = "tanh") -> AutoencoderEmbedding:
    """Fit an encoder/decoder pair by minimizing mean squared reconstruction error.

    ``widths`` lists the encoder, input first (e.g. ``[3, 16, 1]``); the
    decoder mirrors it.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("need a non-empty (n, d) data array")
    widths = list(widths)
    if widths[0] != data.shape[1]:
        raise ValueError(f"encoder input width {widths[0]} != data dimension {data.shape[1]}")
    rng = np.random.default_rng(seed)
    enc = MlpNetwork.init(widths, rng, hidden, "identity")
    dec = MlpNetwork.init(widths[::-1], rng, hidden, "identity")
    n_enc = len(enc.params())
    params = enc.params() + dec.params()
    opt = Adam(lr=lr)

    def loss_on(params, batch):
        tape = ad.Tape()
        vs = [tape.var(p) for p in params]
        rec = dec.on_tape(vs[n_enc:], enc.on_tape(vs[:n_enc], batch))
        loss = ad.mean(ad.square(rec - batch))
        return tape, vs, loss

    def full_loss(params):
        e, d = enc.with_params(params[:n_enc]), dec.with_params(params[n_enc:])
        return float(np.mean((d(e(data)) - data) ** 2))

    initial = full_loss(params)
    for _ in range(iters):
        batch = data if len(data) <= batch_size else data[rng.choice(len(data), batch_size, replace=False)]
        tape, vs, loss = loss_on(params, batch)
        tape.backward(loss)
        params = opt.step(params, [tape.grad(v) for v in vs])
    final = full_loss(params)
    return AutoencoderEmbedding(enc.with_params(params[:n_enc]), dec.with_params(params[n_enc:]),
                                initial_loss=initial, final_loss=final)


def kernel_fit_objective(alpha, Kx, Ky, W, disc_terms, lam) -> float:
    """Mean generator term plus lam times the pairwise regularizer for psi = K alpha."""
    f = (Ky - Kx) @ alpha
    m = len(f)
    diff = f[:, None] - f[None, :]
    return float(np.mean(disc_terms) + lam * np.sum(W * diff * diff) / m ** 2)


def fit_kernel_embedding(x, y, disc_terms, W, lam: float, scale: float, iters: int = 500,
                         init=None, tol: float = 0.0) -> KernelEmbedding:
    """Optimize the coefficients of a one-dimensional kernel expansion centred on ``x``.

    The cost is the regularized generator objective with ``psi(.) = sum_i
    alpha_i K(x_i, .)``. In ``alpha`` it is a convex quadratic, so gradient
    descent with step ``1/L`` (``L`` the largest Hessian eigenvalue) converges
    monotonically. Starting from zero (the default) the start is already a
    minimizer.
    """
    if scale <= 0:
        raise ValueError("kernel scale must be positive")
    x, y = np.atleast_2d(np.asarray(x, float)), np.atleast_2d(np.asarray(y, float))
    W = np.asarray(getattr(W, "weights", W), dtype=float)
    m = len(x)
    if m < 2 or len(y) != m or W.shape != (m, m) or len(disc_terms) != m:
        raise ValueError("x, y, disc_terms and W must describe the same m >= 2 samples")
    Kx, Ky = gaussian_kernel(x, x, scale), gaussian_kernel(y, x, scale)
    A = Ky - Kx
    lap = np.diag(W.sum(1)) - W
    # regularizer = (2/m^2) a^T A^T L A a
    H = (4.0 * lam / m ** 2) * (A.T @ lap @ A)
    alpha = np.zeros(m) if init is None else np.array(init, dtype=float)
    top = float(np.max(np.linalg.eigvalsh(H))) if lam > 0 else 0.0
    history = [kernel_fit_objective(alpha, Kx, Ky, W, disc_terms, lam)]
    if top > 0:
        step = 1.0 / top
        for _ in range(iters):
            g = H @ alpha
            if np.linalg.norm(g) <= tol:
                break
            alpha = alpha - step * g
            history.append(kernel_fit_objective(alpha, Kx, Ky, W, disc_terms, lam))
    return KernelEmbedding(x.copy(), alpha, scale, objective=history[-1], history=history)


def clip_weights(net: MlpNetwork, c: float) -> MlpNetwork:
    if c <= 0:
        raise ValueError("clip bound must be positive")
    return net.with_params([np.clip(p, -c, c) for p in net.params()])


def project_unit_ball(params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    norm = np.linalg.norm(params)
    return params if norm <= 1.0 else params / norm


# --- checkpoints ----------------------------------------------------------


def network_to_dict(net: MlpNetwork) -> dict:
    return {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "widths": list(net.widths),
            "hidden": net.hidden, "output": net.output, "params": net.flat().tolist()}


def network_from_dict(d: dict) -> MlpNetwork:
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')}")
    net = MlpNetwork.zeros(d["widths"], d["hidden"], d["output"])
    return net.with_flat(np.array(d["params"], dtype=float))


def save_network(net: MlpNetwork, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net)) + "\n", encoding="utf-8")


def load_network(path) -> MlpNetwork:
    return network_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
