"""Dense real eigenvalues: Householder reduction to Hessenberg form, then Francis double-shift QR."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EigenNonConvergence(ArithmeticError):
    def __init__(self, remaining: int, iterations: int):
        super().__init__(f"QR iteration did not converge: {remaining} eigenvalues unresolved "
                         f"after {iterations} iterations")
        self.remaining = remaining
        self.iterations = iterations


def hessenberg(A) -> np.ndarray:
    """Orthogonally similar upper Hessenberg matrix (Householder reflections)."""
    H = np.array(A, dtype=float, copy=True)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        H[k + 1:, k:] -= 2.0 * np.outer(v, v @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v)
        H[k + 2:, k] = 0.0
    return H


def _sign(a, b):
    return abs(a) if b >= 0 else -abs(a)


def hqr(H, max_iter: int = 60):
    """Eigenvalues of an upper Hessenberg matrix by implicit double-shift QR.

    Follows the classical EISPACK ``hqr`` scheme: deflate on negligible
    subdiagonal entries, resolve trailing 1x1 and 2x2 blocks directly, and
    apply exceptional shifts after 10 and 20 stalled iterations. Raises
    EigenNonConvergence when an eigenvalue needs more than ``max_iter``
    iterations.
    """
    n = H.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = H                     # 1-based indexing keeps the recurrences readable
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    anorm = sum(abs(a[i, j]) for i in range(1, n + 1) for j in range(max(i - 1, 1), n + 1))
    nn = n
    t = 0.0
    total = 0
    x = y = z = w = p = q = r = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) + s == s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn], wi[nn] = x + t, 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + _sign(z, p)
                        wr[nn - 1] = wr[nn] = x + z
                        if z:
                            wr[nn] = x - w / z
                        wi[nn - 1] = wi[nn] = 0.0
                    else:
                        wr[nn - 1] = wr[nn] = x + p
                        wi[nn] = z
                        wi[nn - 1] = -z
                    nn -= 2
                else:
                    if its == max_iter:
                        raise EigenNonConvergence(nn, total)
                    if its in (10, 20):
                        t += x
                        for i in range(1, nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        y = x = 0.75 * s
                        w = -0.4375 * s * s
                    its += 1
                    total += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i, i - 2] = 0.0
                        if i != m + 2:
                            a[i, i - 3] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = _sign(math.sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k, k - 1] = -a[k, k - 1]
                            else:
                                a[k, k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k, j] + q * a[k + 1, j]
                                if k != nn - 1:
                                    p += r * a[k + 2, j]
                                    a[k + 2, j] -= p * z
                                a[k + 1, j] -= p * y
                                a[k, j] -= p * x
                            for i in range(l, min(nn, k + 3) + 1):
                                p = x * a[i, k] + y * a[i, k + 1]
                                if k != nn - 1:
                                    p += z * a[i, k + 2]
                                    a[i, k + 2] -= p * r
                                a[i, k + 1] -= p * q
                                a[i, k] -= p
            if nn < 1 or l >= nn - 1:
                break
    return wr[1:] + 1j * wi[1:]


def eigenvalues(A, max_iter: int = 60) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    ev = hqr(hessenberg(A), max_iter)
    return ev[np.lexsort((ev.imag, ev.real))]


@dataclass
class HurwitzReport:
    is_hurwitz: bool
    spectrum: np.ndarray
    tolerance: float
    converged: bool = True
    message: str = ""

    @property
    def max_real(self) -> float:
        return float(np.max(self.spectrum.real)) if len(self.spectrum) else float("-inf")

    def to_dict(self) -> dict:
        return {"is_hurwitz": self.is_hurwitz, "converged": self.converged, "tolerance": self.tolerance,
                "max_real": self.max_real if self.converged else None,
                "spectrum": [[float(z.real), float(z.imag)] for z in self.spectrum], "message": self.message}


def hurwitz_check(J, tol: float = 1e-9, max_iter: int = 60) -> HurwitzReport:
    """All eigenvalues strictly left of ``-tol``? Non-convergence is reported, never guessed."""
    try:
        ev = eigenvalues(J, max_iter)
    except EigenNonConvergence as exc:
        return HurwitzReport(False, np.zeros(0, dtype=complex), tol, converged=False, message=str(exc))
    return HurwitzReport(bool(np.all(ev.real < -tol)), ev, tol)
