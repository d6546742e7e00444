"""Distances between paths and graph sets.

* :func:`hausdorff` -- certified sampled Hausdorff distance of GraphSets.
* :func:`d_tildeD` -- reparametrization-quotient distance of step paths,
  computed as a pinned discrete Frechet distance of value sequences.
* :func:`d_M2` -- Hausdorff distance of segment-completed graphs.
* :func:`d_J1_bracket` -- two-sided bracket for the strong J1 distance.
* :func:`classify_profile_mode` -- M1 / M2 / NONE label of a profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .paths import (
    GraphSet,
    PolylinePath,
    Profile,
    StepPath,
    completed_graph,
    hold_steps,
    value_sequence,
)

__all__ = [
    "MetricResult",
    "hausdorff",
    "frechet_values",
    "d_tildeD",
    "d_M2",
    "d_J1_bracket",
    "classify_profile_mode",
    "sup_distance",
]


@dataclass(frozen=True)
class MetricResult:
    value: float
    error_bound: float
    method: str

    def __post_init__(self):
        if self.value < 0 or self.error_bound < 0:
            raise ValueError("metric values and error bounds are nonnegative")
        if self.method not in ("exact", "sampled", "bracket"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self):
        return {"value": self.value, "error_bound": self.error_bound, "method": self.method}


# ---------------------------------------------------------------------------
# Hausdorff


def _sample_graphset(g: GraphSet, delta: float) -> np.ndarray:
    """Points of ``g`` whose covering radius is at most ``delta / 2``."""
    a, b, is_box = g.arrays()
    dim1 = a.shape[1]
    out = []
    seg = ~is_box
    if dim1 == 2:
        # boxes in one space dimension are vertical segments
        seg = np.ones_like(is_box)
    if np.any(seg):
        sa, sb = a[seg], b[seg]
        length = np.linalg.norm(sb - sa, axis=1)
        k = np.maximum(np.ceil(length / delta).astype(np.int64), 1)
        owner = np.repeat(np.arange(k.size), k + 1)
        start = np.repeat(np.cumsum(k + 1) - (k + 1), k + 1)
        frac = (np.arange(owner.size) - start) / k[owner]
        out.append(sa[owner] + frac[:, None] * (sb[owner] - sa[owner]))
    if dim1 > 2:
        h = delta / np.sqrt(dim1 - 1)
        for i in np.flatnonzero(is_box):
            axes = []
            for lo, hi in zip(a[i, 1:], b[i, 1:]):
                k = max(int(np.ceil((hi - lo) / h)), 1)
                axes.append(np.linspace(lo, hi, k + 1))
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim1 - 1)
            out.append(np.hstack([np.full((grid.shape[0], 1), a[i, 0]), grid]))
    return np.vstack(out)


@njit(cache=True)
def _point_prim_dist(x, a, b, is_box):
    n = x.size
    if is_box:
        s = (x[0] - a[0]) ** 2
        for k in range(1, n):
            if x[k] < a[k]:
                s += (a[k] - x[k]) ** 2
            elif x[k] > b[k]:
                s += (x[k] - b[k]) ** 2
        return np.sqrt(s)
    ll = 0.0
    dot = 0.0
    for k in range(n):
        e = b[k] - a[k]
        ll += e * e
        dot += (x[k] - a[k]) * e
    lam = 0.0
    if ll > 0.0:
        lam = min(1.0, max(0.0, dot / ll))
    s = 0.0
    for k in range(n):
        s += (x[k] - a[k] - lam * (b[k] - a[k])) ** 2
    return np.sqrt(s)


@njit(cache=True)
def _directed(pts, a, b, is_box, tmin, cmax):
    # primitives are sorted by start time; cmax[j] is the largest end time
    # among primitives 0..j, so t - cmax[j] and tmin[j] - t bound the distance
    # from below on either side.  Both sides grow outward, nearest time first.
    m = a.shape[0]
    worst = 0.0
    for i in range(pts.shape[0]):
        x = pts[i]
        t = x[0]
        k = np.searchsorted(tmin, t, side="right")
        best = np.inf
        for j in (k - 1, k):
            if 0 <= j < m:
                d = _point_prim_dist(x, a[j], b[j], is_box[j])
                if d < best:
                    best = d
        lo = k - 2
        hi = k + 1
        while best > worst:
            gap_lo = t - cmax[lo] if lo >= 0 else np.inf
            gap_hi = tmin[hi] - t if hi < m else np.inf
            if gap_lo <= gap_hi:
                if gap_lo >= best:
                    break
                j = lo
                lo -= 1
            else:
                if gap_hi >= best:
                    break
                j = hi
                hi += 1
            d = _point_prim_dist(x, a[j], b[j], is_box[j])
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


def _prepared(g: GraphSet):
    a, b, is_box = g.arrays()
    tlo = np.minimum(a[:, 0], b[:, 0])
    thi = np.maximum(a[:, 0], b[:, 0])
    order = np.argsort(tlo, kind="stable")
    return (np.ascontiguousarray(a[order]), np.ascontiguousarray(b[order]),
            is_box[order], tlo[order], np.maximum.accumulate(thi[order]))


def hausdorff(A: GraphSet, B: GraphSet, delta: float) -> MetricResult:
    """Hausdorff distance between two GraphSets by certified sampling.

    Each primitive is sampled so every point lies within ``delta / 2`` of a
    sample; distances from samples to the other set are exact.  Since
    ``x -> dist(x, S)`` is 1-Lipschitz, the returned value underestimates the
    true distance by at most ``delta / 2``.

    Parameters
    ----------
    A, B : GraphSet
    delta : float
        Sampling step, positive.

    Returns
    -------
    MetricResult
        ``method='sampled'`` and ``error_bound = delta / 2``.

    Raises
    ------
    ValueError
        If either set is empty, dimensions differ, or ``delta <= 0``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if len(A) == 0 or len(B) == 0:
        raise ValueError("empty GraphSet")
    pa, pb = _prepared(A), _prepared(B)
    if pa[0].shape[1] != pb[0].shape[1]:
        raise ValueError("dimension mismatch")
    h1 = _directed(_sample_graphset(A, delta), *pb)
    h2 = _directed(_sample_graphset(B, delta), *pa)
    return MetricResult(float(max(h1, h2)), delta / 2, "sampled")


# ---------------------------------------------------------------------------
# reparametrization quotient distance


@njit(cache=True)
def _frechet(p, q):
    n, m = p.shape[0], q.shape[0]
    d = p.shape[1]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                s += (p[i, k] - q[j, k]) ** 2
            c = np.sqrt(s)
            if i == 0 and j == 0:
                best = c
            elif i == 0:
                best = max(cur[j - 1], c)
            elif j == 0:
                best = max(prev[j], c)
            else:
                best = max(min(prev[j], cur[j - 1], prev[j - 1]), c)
            cur[j] = best
        prev, cur = cur, prev
    return prev[m - 1]


def frechet_values(p, q) -> float:
    """Discrete Frechet distance of two point sequences, endpoints pinned."""
    p = np.ascontiguousarray(np.asarray(p, dtype=float).reshape(len(p), -1))
    q = np.ascontiguousarray(np.asarray(q, dtype=float).reshape(len(q), -1))
    if p.shape[0] == 0 or q.shape[0] == 0:
        raise ValueError("empty sequence")
    return float(_frechet(p, q))


def _split_terminal(u: StepPath):
    seq = value_sequence(u)
    if u.has_terminal_jump:
        return seq[:-1], seq[-1]
    return seq, seq[-1]


def d_tildeD(u1, u2, delta: float | None = None) -> MetricResult:
    """Quotient distance ``inf_lambda sup_t |u1(lambda(t)) - u2(t)|``.

    For step paths this equals the discrete Frechet distance between the
    value sequences with both ends pinned; a jump at ``t = 1`` can only face
    the other path's value at 1.  Polylines are first held as step paths at
    resolution ``delta / 2``, which moves the result by at most ``delta``.
    """
    if u1.dim != u2.dim:
        raise ValueError("dimension mismatch")
    err = 0.0
    if isinstance(u1, PolylinePath) or isinstance(u2, PolylinePath):
        if delta is None:
            raise ValueError("delta is required for polyline arguments")
        if isinstance(u1, PolylinePath):
            err += delta / 2
        if isinstance(u2, PolylinePath):
            err += delta / 2
        u1 = hold_steps(u1, delta / 2)
        u2 = hold_steps(u2, delta / 2)
    s1, e1 = _split_terminal(u1)
    s2, e2 = _split_terminal(u2)
    val = max(frechet_values(s1, s2), float(np.linalg.norm(e1 - e2)))
    return MetricResult(val, err, "exact" if err == 0 else "sampled")


def sup_distance(u1: StepPath, u2: StepPath) -> float:
    """``sup_t |u1(t) - u2(t)|`` for step paths (identity reparametrization)."""
    times = np.union1d(u1.times, u2.times)
    grid = np.r_[0.0, times]
    i1 = np.searchsorted(u1.times, grid, side="right")
    i2 = np.searchsorted(u2.times, grid, side="right")
    v1 = value_sequence(u1)[i1]
    v2 = value_sequence(u2)[i2]
    return float(np.max(np.linalg.norm(v1 - v2, axis=1)))


def d_M2(u1, u2, delta: float) -> MetricResult:
    """M2 distance: Hausdorff distance of segment-completed graphs."""
    if u1.dim != u2.dim:
        raise ValueError("dimension mismatch")
    return hausdorff(completed_graph(u1, "segment"), completed_graph(u2, "segment"), delta)


# ---------------------------------------------------------------------------
# J1 bracket


@njit(cache=True)
def _j1_dp(v1, v2, t1, t2):
    # state (i, j): i jumps of u1 and j jumps of u2 already passed
    a, b = t1.size, t2.size
    e1 = np.empty(a + 2)
    e2 = np.empty(b + 2)
    e1[0], e1[a + 1] = 0.0, 1.0
    e2[0], e2[b + 1] = 0.0, 1.0
    e1[1:a + 1] = t1
    e2[1:b + 1] = t2
    D = np.full((a + 1, b + 1), np.inf)
    for i in range(a + 1):
        for j in range(b + 1):
            s = 0.0
            for k in range(v1.shape[1]):
                s += (v1[i, k] - v2[j, k]) ** 2
            here = np.sqrt(s)
            if i == 0 and j == 0:
                D[i, j] = here
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = min(best, max(D[i - 1, j - 1], abs(t1[i - 1] - t2[j - 1])))
            if i > 0:
                tau = t1[i - 1]
                disp = max(0.0, e2[j] - tau, tau - e2[j + 1])
                best = min(best, max(D[i - 1, j], disp))
            if j > 0:
                tau = t2[j - 1]
                disp = max(0.0, e1[i] - tau, tau - e1[i + 1])
                best = min(best, max(D[i, j - 1], disp))
            D[i, j] = max(best, here)
    return D[a, b]


def d_J1_bracket(u1: StepPath, u2: StepPath) -> tuple[float, float]:
    """Bracket ``(m, 2m)`` containing the strong J1 distance.

    ``m`` minimizes, over monotone couplings of the jumps, the larger of the
    value mismatch and the time displacement of the reparametrization.  The
    J1 distance adds these two sup terms, so it lies in ``[m, 2m]``.
    """
    if u1.dim != u2.dim:
        raise ValueError("dimension mismatch")
    s1, e1 = _split_terminal(u1)
    s2, e2 = _split_terminal(u2)
    t1 = u1.times[:-1] if u1.has_terminal_jump else u1.times
    t2 = u2.times[:-1] if u2.has_terminal_jump else u2.times
    m = _j1_dp(np.ascontiguousarray(s1), np.ascontiguousarray(s2),
               np.ascontiguousarray(t1), np.ascontiguousarray(t2))
    m = max(float(m), float(np.linalg.norm(e1 - e2)))
    return m, 2 * m


# ---------------------------------------------------------------------------
# profile classifier


def classify_profile_mode(P: Profile, tol: float = 1e-9) -> str:
    """Convergence-mode label of a profile.

    Writes ``P(t) = phi(t) P(1) + r(t)`` with ``r`` orthogonal to ``P(1)``.
    The profile stays on the segment ``[0, P(1)]`` when ``|r| <= tol`` and
    ``phi`` stays in ``[-tol, 1 + tol]``; on the segment, a nondecreasing
    ``phi`` gives 'M1' and otherwise 'M2'.  Leaving the segment gives 'NONE'.
    """
    path = P.path if isinstance(P, Profile) else P
    if isinstance(path, StepPath):
        pts = value_sequence(path)
    else:
        pts = path.values
    omega = pts[-1]
    nn = float(omega @ omega)
    if nn == 0.0:
        raise ValueError("profile has zero terminal direction")
    phi = pts @ omega / nn
    resid = pts - phi[:, None] * omega[None, :]
    if np.max(np.linalg.norm(resid, axis=1)) > tol:
        return "NONE"
    if phi.min() < -tol or phi.max() > 1 + tol:
        return "NONE"
    if np.all(np.diff(phi) >= -tol):
        return "M1"
    return "M2"
