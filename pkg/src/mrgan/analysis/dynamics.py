"""Simultaneous gradient flow of the min-max objective: fields, Jacobians, RK4 trajectories.

A *system* exposes ``dim``, ``n_u`` (the generator block comes first) and
``value_and_grad(theta) -> (F, dF/dtheta)``. The flow is

    u' = -dF/du,    v' = +dF/dv.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..nets import IdentityEmbedding, MlpNetwork
from ..objective import MeasuringFunction, objective_on_tape


@dataclass
class GanSystem:
    """An MLP generator/discriminator pair on a frozen batch (real ``x``, latents ``h``)."""

    generator: MlpNetwork
    discriminator: MlpNetwork
    x: np.ndarray
    h: np.ndarray
    phi: MeasuringFunction
    W: np.ndarray | None = None
    lam: float = 0.0
    psi: object = None
    reg_form: str = "pairwise"

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.h = np.atleast_2d(np.asarray(self.h, dtype=float))
        if len(self.x) == 0:
            raise ValueError("the frozen batch has no samples")
        if len(self.x) != len(self.h):
            raise ValueError("x and h must have the same number of rows")
        if self.lam > 0 and self.W is None:
            raise ValueError("lam > 0 needs an affinity matrix")

    @property
    def n_u(self) -> int:
        return self.generator.n_params

    @property
    def dim(self) -> int:
        return self.generator.n_params + self.discriminator.n_params

    def state(self) -> np.ndarray:
        return np.concatenate([self.generator.flat(), self.discriminator.flat()])

    def networks(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"state must have shape ({self.dim},), got {theta.shape}")
        return self.generator.with_flat(theta[:self.n_u]), self.discriminator.with_flat(theta[self.n_u:])

    def value_and_grad(self, theta):
        u, v = self.networks(theta)
        tape = ad.Tape()
        up = [tape.var(p, "u") for p in u.params()]
        vp = [tape.var(p, "v") for p in v.params()]
        terms = objective_on_tape(u, v, up, vp, self.x, self.h, self.phi, self.psi or IdentityEmbedding(),
                                  self.W, self.lam, self.reg_form)
        tape.backward(terms.total)
        g = np.concatenate([tape.grad(p).ravel() for p in up + vp])
        return float(terms.total.value), g


def gradient_field(system, theta) -> np.ndarray:
    """Velocity of the simultaneous flow: (-grad_u F, +grad_v F)."""
    _, g = system.value_and_grad(theta)
    g = g.copy()
    g[:system.n_u] *= -1.0
    return g


def jacobian_at(system, theta, fd_step: float = 1e-4, field=None) -> np.ndarray:
    """Central-difference Jacobian of the gradient field, one column per coordinate."""
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    field = field or (lambda t: gradient_field(system, t))
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = fd_step
        J[:, k] = (field(theta + e) - field(theta - e)) / (2.0 * fd_step)
    if not np.all(np.isfinite(J)):
        raise FloatingPointError("Jacobian has non-finite entries")
    return J


def jacobian_blocks(J, n_u: int) -> dict[str, np.ndarray]:
    return {"uu": J[:n_u, :n_u], "uv": J[:n_u, n_u:], "vu": J[n_u:, :n_u], "vv": J[n_u:, n_u:]}


def block_identities(J, n_u: int) -> dict[str, float]:
    """Residuals of J_uv = -J_vu^T and the relative size of J_uu."""
    b = jacobian_blocks(J, n_u)
    scale = float(np.linalg.norm(J))
    return {"antisymmetry": float(np.max(np.abs(b["uv"] + b["vu"].T))) if b["uv"].size else 0.0,
            "uu_norm": float(np.linalg.norm(b["uu"])),
            "uu_relative": float(np.linalg.norm(b["uu"]) / scale) if scale > 0 else 0.0,
            "jacobian_norm": scale}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    distances: np.ndarray | None
    divergent: bool

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(),
                "distances": None if self.distances is None else self.distances.tolist(),
                "divergent": self.divergent}


def integrate_dynamics(system, theta0, dt: float, steps: int, theta_star=None, ceiling: float = 1e6,
                       field=None) -> Trajectory:
    """Classical fourth-order Runge-Kutta on the gradient field.

    Integration stops early (flagged divergent) once the state norm exceeds
    ``ceiling`` or stops being finite.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = field or (lambda t: gradient_field(system, t))
    th = np.asarray(theta0, dtype=float).copy()
    states = [th.copy()]
    divergent = False
    for _ in range(steps):
        k1 = f(th)
        k2 = f(th + 0.5 * dt * k1)
        k3 = f(th + 0.5 * dt * k2)
        k4 = f(th + dt * k3)
        th = th + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(th)) or np.linalg.norm(th) > ceiling:
            divergent = True
            break
        states.append(th.copy())
    states = np.array(states)
    times = dt * np.arange(len(states))
    dist = None if theta_star is None else np.linalg.norm(states - np.asarray(theta_star, float), axis=1)
    return Trajectory(times, states, dist, divergent)


def fit_decay_rate(times, norms, t_min: float, t_max: float) -> float:
    """Least-squares slope c of log ||theta(t)|| ~ log k - c t over [t_min, t_max]."""
    times, norms = np.asarray(times), np.asarray(norms)
    sel = (times >= t_min) & (times <= t_max) & (norms > 0)
    if sel.sum() < 2:
        raise ValueError("not enough samples in the fitting window")
    slope, _ = np.polyfit(times[sel], np.log(norms[sel]), 1)
    return float(-slope)
