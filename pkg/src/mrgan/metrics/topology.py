"""Witness complexes, Z/2 persistent homology in dimension one, and relative living times."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


def select_landmarks_maxmin(points, L: int, rng: np.random.Generator | None = None,
                            first: int | None = None) -> np.ndarray:
    """Farthest-point sampling: each new landmark maximizes its distance to those chosen so far.

    The first landmark is ``first`` when given, otherwise drawn from ``rng``.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if L > n:
        raise ValueError(f"cannot pick {L} landmarks from {n} points")
    if L < 1:
        raise ValueError("need at least one landmark")
    if first is None:
        first = int((rng or np.random.default_rng()).integers(n))
    chosen = [first]
    mind = np.linalg.norm(points - points[first], axis=1)
    mind[first] = -1.0
    for _ in range(L - 1):
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, np.linalg.norm(points - points[nxt], axis=1))
        mind[chosen] = -1.0
    return np.array(chosen)


@dataclass
class WitnessComplex:
    """Filtered 2-skeleton on landmark vertices ``0..n_vertices-1`` (vertices enter at 0)."""

    n_vertices: int
    edges: np.ndarray               # (E, 2), i < j
    edge_times: np.ndarray
    triangles: np.ndarray           # (T, 3), i < j < k
    triangle_times: np.ndarray
    alpha_max: float

    @property
    def n_simplices(self) -> int:
        return self.n_vertices + len(self.edges) + len(self.triangles)

    def ordered(self):
        """Simplices in filtration order: (time, dimension, vertices)."""
        items = [(0.0, 0, (i,)) for i in range(self.n_vertices)]
        items += [(float(t), 1, tuple(int(a) for a in e)) for e, t in zip(self.edges, self.edge_times)]
        items += [(float(t), 2, tuple(int(a) for a in s)) for s, t in zip(self.triangles, self.triangle_times)]
        items.sort()
        return items


def _dedupe(landmarks: np.ndarray) -> np.ndarray:
    _, keep = np.unique(landmarks, axis=0, return_index=True)
    return landmarks[np.sort(keep)]


def witness_filtration(points, landmarks, alpha_max: float, steps: int | None = None,
                       chunk: int = 4096) -> WitnessComplex:
    """Relaxed witness complex up to dimension two.

    A simplex enters at the smallest alpha for which some witness ``w``
    (every point is a witness) has ``max_{v in simplex} d(w, v) <= alpha +
    d_k(w)``, where ``d_k`` is the distance to the k-th nearest landmark and k
    is the number of vertices. Triangle times are raised to their edges' times
    so faces never enter after cofaces. With ``steps`` the times are rounded up
    to a grid of ``steps`` levels on ``[0, alpha_max]``.
    """
    if alpha_max < 0:
        raise ValueError("alpha_max must be non-negative")
    if steps is not None and steps < 1:
        raise ValueError("steps must be >= 1")
    W = np.asarray(points, dtype=float)
    Lm = _dedupe(np.asarray(landmarks, dtype=float))
    nL = len(Lm)
    empty = np.zeros((0, 2), int), np.zeros(0), np.zeros((0, 3), int), np.zeros(0)
    if nL < 2:
        return WitnessComplex(nL, *empty, float(alpha_max))
    D = np.sqrt(np.maximum(np.sum(W * W, 1)[:, None] + np.sum(Lm * Lm, 1)[None, :] - 2.0 * W @ Lm.T, 0.0))
    Ds = np.sort(D, axis=1)
    d2 = Ds[:, 1]
    d3 = Ds[:, 2] if nL >= 3 else None

    pairs = np.array(list(combinations(range(nL), 2)))
    etime = np.full(len(pairs), np.inf)
    for s in range(0, len(W), chunk):
        Dc = D[s:s + chunk]
        t = np.maximum(Dc[:, pairs[:, 0]], Dc[:, pairs[:, 1]]) - d2[s:s + chunk, None]
        etime = np.minimum(etime, t.min(0))
    etime = np.maximum(etime, 0.0)
    keep = etime <= alpha_max
    edges, etime = pairs[keep], etime[keep]

    tris, ttime = np.zeros((0, 3), int), np.zeros(0)
    if d3 is not None and len(edges) >= 3:
        emap = {(int(a), int(b)): t for (a, b), t in zip(edges, etime)}
        nbrs = [set() for _ in range(nL)]
        for a, b in edges:
            nbrs[a].add(int(b))
            nbrs[b].add(int(a))
        cand = [(a, b, c) for a, b in emap for c in nbrs[a] & nbrs[b] if c > b]
        if cand:
            tris = np.array(sorted(cand))
            raw = np.full(len(tris), np.inf)
            for s in range(0, len(W), chunk):
                Dc = D[s:s + chunk]
                t = np.maximum(np.maximum(Dc[:, tris[:, 0]], Dc[:, tris[:, 1]]), Dc[:, tris[:, 2]])
                raw = np.minimum(raw, (t - d3[s:s + chunk, None]).min(0))
            faces = np.array([[emap[(a, b)], emap[(a, c)], emap[(b, c)]] for a, b, c in tris])
            ttime = np.maximum(np.maximum(raw, 0.0), faces.max(1))
            keep = ttime <= alpha_max
            tris, ttime = tris[keep], ttime[keep]

    if steps is not None and alpha_max > 0:
        grid = alpha_max / steps
        etime = np.minimum(np.ceil(etime / grid - 1e-12) * grid, alpha_max)
        ttime = np.minimum(np.ceil(ttime / grid - 1e-12) * grid, alpha_max)
    return WitnessComplex(nL, edges, etime, tris, ttime, float(alpha_max))


@dataclass
class PersistenceIntervals:
    intervals: np.ndarray           # (k, 2) birth, death with death > birth
    alpha_max: float
    pairs: list = field(default_factory=list, repr=False)   # (edge, triangle or None) in filtration indices

    def __len__(self) -> int:
        return len(self.intervals)


def persistence_h1(cx: WitnessComplex) -> PersistenceIntervals:
    """H1 intervals by column reduction over Z/2 with clearing.

    Triangle columns are reduced first; every pivot edge they produce is a
    cycle-creating edge, so its own column is skipped. Edge columns that
    reduce to zero open classes that survive to ``alpha_max``. Columns are
    Python ints used as bitsets over filtration indices. Zero-length
    intervals are dropped.
    """
    items = cx.ordered()
    index = {simp: k for k, (_, _, simp) in enumerate(items)}
    times = [t for t, _, _ in items]
    owner: dict[int, int] = {}
    cleared: set[int] = set()
    pairs: list[tuple[int, int | None]] = []
    for dim in (2, 1):
        for j, (_, d, simp) in enumerate(items):
            if d != dim or j in cleared:
                continue
            col = 0
            for face in combinations(simp, dim):
                col ^= 1 << index[face]
            while col:
                pivot = owner.get(col.bit_length() - 1)
                if pivot is None:
                    break
                col ^= pivot
            if col:
                low = col.bit_length() - 1
                owner[low] = col
                if dim == 2:
                    cleared.add(low)
                    pairs.append((low, j))
            elif dim == 1:
                pairs.append((j, None))
    pairs.sort(key=lambda p: p[0])
    ivals = []
    for e, t in pairs:
        death = cx.alpha_max if t is None else times[t]
        if death > times[e]:
            ivals.append((times[e], death))
    arr = np.array(sorted(ivals), dtype=float).reshape(-1, 2)
    return PersistenceIntervals(arr, cx.alpha_max, pairs)


@dataclass
class MrltProfile:
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def relative_living_times(ph: PersistenceIntervals, i_max: int = 100) -> np.ndarray:
    """Share of ``[0, alpha_max]`` during which exactly i intervals are alive (last bin: i_max-1 or more)."""
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    out = np.zeros(i_max)
    a = ph.alpha_max
    if a <= 0:
        out[0] = 1.0
        return out
    iv = np.clip(ph.intervals, 0.0, a)
    events = np.unique(np.concatenate([[0.0, a], iv.ravel()]))
    for lo, hi in zip(events[:-1], events[1:]):
        mid = 0.5 * (lo + hi)
        alive = int(np.sum((iv[:, 0] <= mid) & (mid < iv[:, 1])))
        out[min(alive, i_max - 1)] += (hi - lo) / a
    return out / out.sum()


def mrlt(intervals, i_max: int = 100) -> MrltProfile:
    """Relative living times of one diagram, or their mean over a list of diagrams."""
    if isinstance(intervals, PersistenceIntervals):
        return MrltProfile(relative_living_times(intervals, i_max))
    return MrltProfile(np.mean([relative_living_times(p, i_max) for p in intervals], axis=0))
