"""Dirac-GAN fixtures: a point-mass generator against a one-layer critic.

The generator is a point ``theta`` in R^k, the real data a point ``x`` and
the critic ``D_v(z) = a(v . z)`` with ``a`` the logistic sigmoid (GAN) or the
identity (WGAN). The objective is

    F(theta, v) = phi(D_v(x)) + phi(1 - D_v(theta)) + lam * R(theta)

where ``R`` is the pairwise manifold regularizer (identically zero on a
point mass, since every paired difference is the same vector) or its
pointwise bound ``||theta - x||^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..objective import MeasuringFunction, regularizer_on_tape


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


@dataclass
class DiracModel:
    target: np.ndarray = field(default_factory=lambda: np.zeros(1))
    phi: MeasuringFunction = field(default_factory=MeasuringFunction)
    lam: float = 0.0
    reg: str = "pointwise"          # pointwise | pairwise
    critic: str = "sigmoid"         # sigmoid | linear

    def __post_init__(self):
        self.target = np.atleast_1d(np.asarray(self.target, dtype=float))
        if self.reg not in ("pointwise", "pairwise"):
            raise ValueError(f"unknown regularizer {self.reg!r}")
        if self.critic not in ("sigmoid", "linear"):
            raise ValueError(f"unknown critic {self.critic!r}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def k(self) -> int:
        return len(self.target)

    @property
    def n_u(self) -> int:
        return self.k

    @property
    def dim(self) -> int:
        return 2 * self.k

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"state must have shape ({self.dim},), got {theta.shape}")
        return theta[:self.k], theta[self.k:]

    def equilibrium(self) -> np.ndarray:
        """theta = x, v = 0: the critic outputs a constant and the generator sits on the data."""
        return np.concatenate([self.target, np.zeros(self.k)])

    # activation and its first two derivatives
    def _act(self, t):
        if self.critic == "linear":
            return t, 1.0, 0.0
        s = _sigmoid(t)
        d1 = s * (1.0 - s)
        return s, d1, d1 * (1.0 - 2.0 * s)

    def on_tape(self, tape: ad.Tape, u: ad.Var, v: ad.Var) -> ad.Var:
        x = self.target
        act = ad.sigmoid if self.critic == "sigmoid" else (lambda z: z)
        d_real = act(ad.sum(ad.mul(v, x)))
        d_fake = act(ad.sum(ad.mul(v, u)))
        out = self.phi.on_tape(d_real) + self.phi.on_tape(1.0 - d_fake)
        if self.lam > 0 and self.reg == "pointwise":
            out = out + ad.mul(ad.sum(ad.square(u - x)), self.lam)
        elif self.lam > 0:
            m = 4
            ys = ad.matmul(np.ones((m, 1)), ad.reshape(u, (1, self.k)))
            xs = np.tile(x, (m, 1))
            out = out + ad.mul(regularizer_on_tape(xs, ys, np.ones((m, m))), self.lam)
        return out

    def value_and_grad(self, theta):
        u0, v0 = self.split(theta)
        tape = ad.Tape()
        u, v = tape.var(u0, "u"), tape.var(v0, "v")
        out = self.on_tape(tape, u, v)
        tape.backward(out)
        return float(out.value), np.concatenate([tape.grad(u), tape.grad(v)])

    def objective(self, theta) -> float:
        u, v = self.split(theta)
        a_x = self._act(float(v @ self.target))[0]
        a_t = self._act(float(v @ u))[0]
        val = float(self.phi(a_x) + self.phi(1.0 - a_t))
        if self.reg == "pointwise":
            val += self.lam * float(np.sum((u - self.target) ** 2))
        return val

    def _g_terms(self, u, v):
        x = self.target
        a_t, a1_t, a2_t = self._act(float(v @ u))
        a_x, a1_x, a2_x = self._act(float(v @ x))
        p1, p2 = self.phi.derivative, self.phi.second_derivative
        g = float(p1(1.0 - a_t)) * a1_t
        dg = -float(p2(1.0 - a_t)) * a1_t ** 2 + float(p1(1.0 - a_t)) * a2_t
        f = float(p1(a_x)) * a1_x
        df = float(p2(a_x)) * a1_x ** 2 + float(p1(a_x)) * a2_x
        return g, dg, f, df

    def analytic_field(self, theta) -> np.ndarray:
        """(-dF/dtheta, +dF/dv) in closed form."""
        u, v = self.split(theta)
        g, _, f, _ = self._g_terms(u, v)
        fu = g * v
        if self.reg == "pointwise":
            fu = fu - 2.0 * self.lam * (u - self.target)
        fv = f * self.target - g * u
        return np.concatenate([fu, fv])

    def analytic_jacobian(self, theta) -> np.ndarray:
        u, v = self.split(theta)
        x = self.target
        g, dg, _, df = self._g_terms(u, v)
        eye = np.eye(self.k)
        j_uu = dg * np.outer(v, v)
        if self.reg == "pointwise":
            j_uu = j_uu - 2.0 * self.lam * eye
        j_uv = dg * np.outer(v, u) + g * eye
        j_vu = -dg * np.outer(u, v) - g * eye
        j_vv = df * np.outer(x, x) - dg * np.outer(u, u)
        return np.block([[j_uu, j_uv], [j_vu, j_vv]])


def dirac_gan(lam: float = 0.0, target=(0.0,), delta: float = 0.1, reg: str = "pairwise") -> DiracModel:
    return DiracModel(np.asarray(target, float), MeasuringFunction("log_delta", delta), lam, reg, "sigmoid")


def dirac_wgan(lam: float = 0.0, target=(0.0,), reg: str = "pointwise") -> DiracModel:
    """Identity measuring function with a linear critic.

    With x = 0 the field is theta' = v - 2 lam theta, v' = -theta, whose
    spectrum is -lam +/- sqrt(lam^2 - 1).
    """
    return DiracModel(np.asarray(target, float), MeasuringFunction("identity"), lam, reg, "linear")


def dirac_wgan_spectrum(lam: float) -> np.ndarray:
    """Closed-form eigenvalues of the one-dimensional Dirac-WGAN Jacobian."""
    disc = complex(lam * lam - 1.0) ** 0.5
    return np.array([-lam + disc, -lam - disc])
