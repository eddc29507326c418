"""Reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Tape` records every primitive applied to its :class:`Var` objects in
evaluation order (a Wengert list). ``tape.backward(out)`` then sweeps the
list once in reverse and accumulates adjoints into every node that feeds
``out``.

    >>> tape = Tape()
    >>> p = tape.var(np.array([1.0, 2.0]))
    >>> loss = sum(square(p))
    >>> tape.backward(loss)
    >>> tape.grad(p)
    array([2., 4.])

Constants (plain arrays or floats) may be mixed freely with ``Var`` operands;
they are recorded as non-differentiable leaves.
"""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

__all__ = [
    "Tape", "Var", "ShapeError", "NonFiniteError",
    "matmul", "add", "sub", "mul", "neg", "tanh", "sigmoid", "relu", "log", "exp",
    "square", "sum", "mean", "reshape", "forward_backward", "finite_diff_grad",
]


class ShapeError(ValueError):
    """Operand shapes are incompatible; the message names the offending node."""


class NonFiniteError(FloatingPointError):
    """A node produced NaN or Inf; the message names the offending node."""


class Var:
    """A value recorded on a tape."""

    __slots__ = ("tape", "index", "value", "op")
    __array_priority__ = 100  # make ndarray <op> Var dispatch to Var

    def __init__(self, tape: "Tape", index: int, value: np.ndarray, op: str):
        self.tape = tape
        self.index = index
        self.value = value
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Var(#{self.index} {self.op}, shape={self.shape})"

    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __neg__(self): return neg(self)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)


class Tape:
    """Ordered record of primitive applications.

    Node ``k`` only ever references nodes ``< k``, so a single reverse pass
    over the node list is a valid topological sweep.
    """

    def __init__(self, check_finite: bool = True):
        self.check_finite = check_finite
        self.values: list[np.ndarray] = []
        self.ops: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.backward_fns: list[Callable | None] = []
        self.requires_grad: list[bool] = []
        self.adjoints: list[np.ndarray | None] = []
        self.visits = 0

    def __len__(self) -> int:
        return len(self.values)

    def var(self, value, name: str = "input", requires_grad: bool = True) -> Var:
        value = np.array(value, dtype=np.float64)
        return self._record(value, f"leaf:{name}", (), None, requires_grad)

    def const(self, value) -> Var:
        return self.var(value, name="const", requires_grad=False)

    def _record(self, value, op, parents, backward_fn, requires_grad) -> Var:
        index = len(self.values)
        if self.check_finite and not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite value at node #{index} ({op})")
        self.values.append(value)
        self.ops.append(op)
        self.parents.append(parents)
        self.backward_fns.append(backward_fn)
        self.requires_grad.append(requires_grad)
        self.adjoints.append(None)
        return Var(self, index, value, op)

    def lift(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise ValueError(f"{x!r} belongs to a different tape")
            return x
        return self.const(x)

    def apply(self, op: str, inputs: tuple[Var, ...], value: np.ndarray, backward_fn) -> Var:
        """Record ``value = op(*inputs)``; ``backward_fn(g)`` returns one adjoint per input."""
        needs = any(self.requires_grad[v.index] for v in inputs)
        return self._record(np.asarray(value, dtype=np.float64), op,
                            tuple(v.index for v in inputs),
                            backward_fn if needs else None, needs)

    def backward(self, out: Var) -> None:
        if out.value.size != 1:
            raise ShapeError(f"backward needs a scalar output, node #{out.index} has shape {out.shape}")
        self.adjoints = [None] * len(self.values)
        self.adjoints[out.index] = np.ones_like(out.value)
        self.visits = 0
        for k in range(out.index, -1, -1):
            g = self.adjoints[k]
            fn = self.backward_fns[k]
            if g is None or fn is None:
                continue
            self.visits += 1
            for p, gp in zip(self.parents[k], fn(g)):
                if gp is None or not self.requires_grad[p]:
                    continue
                if self.adjoints[p] is None:
                    self.adjoints[p] = gp
                else:
                    self.adjoints[p] = self.adjoints[p] + gp

    def grad(self, v: Var) -> np.ndarray:
        g = self.adjoints[v.index]
        return np.zeros_like(v.value) if g is None else g


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    raise TypeError("at least one operand must be a Var")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(op, a: Var, b: Var) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"node #{len(a.tape)} ({op}): cannot broadcast {a.shape} with {b.shape}") from None


def add(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    _broadcast_shape("add", a, b)
    sa, sb = a.shape, b.shape
    return tape.apply("add", (a, b), a.value + b.value,
                      lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    _broadcast_shape("sub", a, b)
    sa, sb = a.shape, b.shape
    return tape.apply("sub", (a, b), a.value - b.value,
                      lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    _broadcast_shape("mul", a, b)
    av, bv = a.value, b.value
    return tape.apply("mul", (a, b), av * bv,
                      lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def neg(a: Var) -> Var:
    return a.tape.apply("neg", (a,), -a.value, lambda g: (-g,))


def matmul(a, b) -> Var:
    tape = _tape_of(a, b)
    a, b = tape.lift(a), tape.lift(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"node #{len(tape)} (matmul): {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return tape.apply("matmul", (a, b), av @ bv, lambda g: (g @ bv.T, av.T @ g))


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    return a.tape.apply("tanh", (a,), y, lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Var) -> Var:
    # exp(-|x|) never overflows
    x = a.value
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return a.tape.apply("sigmoid", (a,), y, lambda g: (g * y * (1.0 - y),))


def relu(a: Var) -> Var:
    mask = a.value > 0
    return a.tape.apply("relu", (a,), np.where(mask, a.value, 0.0), lambda g: (g * mask,))


def log(a: Var) -> Var:
    x = a.value
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x)
    return a.tape.apply("log", (a,), y, lambda g: (g / x,))


def exp(a: Var) -> Var:
    with np.errstate(over="ignore"):
        y = np.exp(a.value)
    return a.tape.apply("exp", (a,), y, lambda g: (g * y,))


def square(a: Var) -> Var:
    x = a.value
    return a.tape.apply("square", (a,), x * x, lambda g: (2.0 * g * x,))


def sum(a: Var, axis: int | None = None) -> Var:  # noqa: A001 - mirrors numpy
    shape = a.shape
    if axis is None:
        return a.tape.apply("sum", (a,), np.sum(a.value), lambda g: (np.broadcast_to(g, shape).copy(),))
    ax = axis % len(shape)
    return a.tape.apply("sum", (a,), np.sum(a.value, axis=ax),
                        lambda g: (np.broadcast_to(np.expand_dims(g, ax), shape).copy(),))


def mean(a: Var, axis: int | None = None) -> Var:
    n = a.value.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / n)


def reshape(a: Var, shape) -> Var:
    old = a.shape
    try:
        y = a.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"node #{len(a.tape)} (reshape): {old} -> {shape}") from None
    return a.tape.apply("reshape", (a,), y, lambda g: (g.reshape(old),))


def forward_backward(fn: Callable[..., Var], inputs: Mapping[str, np.ndarray],
                     check_finite: bool = True) -> tuple[float, dict[str, np.ndarray]]:
    """Evaluate ``fn(**vars)`` on a fresh tape and return the loss and its gradients.

    Every entry of ``inputs`` becomes a differentiable leaf; the returned
    gradient dict has the same keys and shapes.
    """
    tape = Tape(check_finite=check_finite)
    leaves = {k: tape.var(v, name=k) for k, v in inputs.items()}
    out = fn(**leaves)
    if not isinstance(out, Var):
        # fn ignored its inputs entirely: constant loss
        return float(np.asarray(out)), {k: np.zeros_like(v.value) for k, v in leaves.items()}
    tape.backward(out)
    return float(out.value), {k: tape.grad(v) for k, v in leaves.items()}


def finite_diff_grad(f: Callable[[np.ndarray], float], p: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``p``."""
    if step <= 0:
        raise ValueError("step must be positive")
    p = np.array(p, dtype=np.float64)
    grad = np.empty_like(p)
    flat, gflat = p.reshape(-1), grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        fp = f(p)
        flat[k] = orig - step
        fm = f(p)
        flat[k] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteError(f"f is not finite around coordinate {k}")
        gflat[k] = (fp - fm) / (2.0 * step)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-wise relative difference, 0 when both are zero."""
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)
