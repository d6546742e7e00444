"""Decorated cadlag space: excursion triples and their projections.

An element ``(u, S, {e^tau})`` carries, for each time ``tau`` in a finite set
``S`` containing the discontinuities of ``u``, an excursion path ``e^tau``
running from ``u(tau-)`` to ``u(tau)``.  The pseudometric adds the Hausdorff
distance of the box-valued projection and the quotient distance of the
spliced path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .metrics import MetricResult, d_tildeD, hausdorff
from .paths import (
    GraphSet,
    Path,
    PolylinePath,
    Profile,
    StepPath,
    completed_graph,
    evaluate,
    hold_steps,
    path_from_dict,
    path_to_dict,
    value_sequence,
)

__all__ = [
    "Decorated",
    "EElement",
    "pi_E",
    "pi_D",
    "eelement_graph",
    "d_Fprime",
    "nearest_profile",
    "chi",
    "embed_step_trivial",
    "decorate_levy",
    "psi_max",
    "decorated_to_dict",
    "decorated_from_dict",
]

ENDPOINT_TOL = 1e-12


def _endpoint_ok(a, b):
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) <= ENDPOINT_TOL * scale


def _snap(e: Path, start, end) -> Path:
    """Overwrite the first and last values of an excursion with exact endpoints."""
    if isinstance(e, StepPath):
        vals = np.array(e.values)
        if vals.shape[0]:
            vals[-1] = end
            return StepPath(start, e.times, vals)
        return StepPath(start)
    vals = np.array(e.values)
    vals[0], vals[-1] = start, end
    return PolylinePath(e.times, vals)


def _discontinuities(u: Path) -> np.ndarray:
    if isinstance(u, PolylinePath):
        return np.empty(0)
    seq = value_sequence(u)
    moved = np.any(seq[1:] != seq[:-1], axis=1)
    t = u.times[moved]
    return t[t < 1.0]


@dataclass(frozen=True, eq=False)
class Decorated:
    """Excursion triple ``(u, S, {e^tau})`` with finite ``S``.

    ``S`` is stored sorted and ``excursions[i]`` belongs to ``S[i]``.
    """

    u: Path
    S: np.ndarray
    excursions: tuple

    def __init__(self, u: Path, S, excursions: Sequence[Path], check: bool = True):
        S = np.array(S, dtype=float).reshape(-1)
        excursions = tuple(excursions)
        if len(excursions) != S.size:
            raise ValueError("one excursion per time in S")
        order = np.argsort(S, kind="stable")
        S = S[order]
        excursions = tuple(excursions[i] for i in order)
        if S.size and (S[0] <= 0.0 or S[-1] >= 1.0 or np.any(np.diff(S) <= 0)):
            raise ValueError("S must be distinct times in (0, 1)")
        missing = np.setdiff1d(_discontinuities(u), S)
        if missing.size:
            raise ValueError(f"S misses discontinuities of u, e.g. {missing[0]}")
        for tau, e in zip(S, excursions if check else ()):
            if e.dim != u.dim:
                raise ValueError("excursion dimension mismatch")
            if not (_endpoint_ok(evaluate(e, 0.0), evaluate(u, tau, "left"))
                    and _endpoint_ok(evaluate(e, 1.0), evaluate(u, tau))):
                raise ValueError(f"excursion at {tau} does not join u(tau-) to u(tau)")
        S.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "excursions", excursions)

    @property
    def dim(self) -> int:
        return self.u.dim


@dataclass(frozen=True, eq=False)
class EElement:
    """Box-valued projection: ``u``, ``S`` and a box ``[lo, hi]`` per time in S."""

    u: Path
    S: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def _range(e: Path):
    pts = value_sequence(e) if isinstance(e, StepPath) else e.values
    return pts.min(axis=0), pts.max(axis=0)


def pi_E(x: Decorated) -> EElement:
    """Replace each excursion by the product of its coordinate ranges."""
    d = x.dim
    lo = np.empty((x.S.size, d))
    hi = np.empty((x.S.size, d))
    for i, e in enumerate(x.excursions):
        lo[i], hi[i] = _range(e)
    return EElement(x.u, x.S, lo, hi)


def eelement_graph(e: EElement) -> GraphSet:
    """Graph of the set-valued function: path pieces plus a box at each tau."""
    u = e.u
    if isinstance(u, PolylinePath):
        base = completed_graph(u, "segment")
    else:
        knots = np.r_[0.0, u.times]
        ends = np.r_[u.times, 1.0]
        seq = value_sequence(u)
        keep = ends > knots
        ha = np.hstack([knots[keep, None], seq[keep]])
        hb = np.hstack([ends[keep, None], seq[keep]])
        # closure point at t = 1
        ta = np.r_[1.0, seq[-1]][None, :]
        base = GraphSet.from_arrays(np.vstack([ha, ta]), np.vstack([hb, ta]),
                                    np.r_[np.zeros(ha.shape[0], dtype=np.bool_), True])
    if e.S.size == 0:
        return base
    ba = np.hstack([e.S[:, None], e.lo])
    bb = np.hstack([e.S[:, None], e.hi])
    return base.union(GraphSet.from_arrays(ba, bb, np.ones(e.S.size, dtype=np.bool_)))


def _append(times, values, t, v):
    if times and t <= times[-1]:
        values[-1] = v
    else:
        times.append(t)
        values.append(v)


def pi_D(x: Decorated, delta: float | None = None) -> Path:
    """Splice every excursion into the path and rescale time to ``[0, 1]``.

    The excursion at the ``m``-th time of ``S`` (time order, ``m`` from 1)
    occupies an inserted interval of length ``m**-2``.  Continuous pieces are
    held as steps at value resolution ``delta`` (required only when a
    polyline is present).
    """
    u = x.u
    if x.S.size == 0:
        return u
    ustep = hold_steps(u, delta)
    ranks = np.arange(1, x.S.size + 1, dtype=float)
    lengths = ranks ** -2
    total = 1.0 + lengths.sum()
    shift = np.r_[0.0, np.cumsum(lengths)]
    times, values = [], []
    seq = value_sequence(ustep)
    for t, v in zip(ustep.times, seq[1:]):
        m = np.searchsorted(x.S, t, side="left")
        if m < x.S.size and x.S[m] == t:
            continue
        # t = 1 must stay terminal; (1 + shift) / total can round below 1
        _append(times, values, 1.0 if t == 1.0 else (t + shift[m]) / total, v)
    # excursion pieces; merge by time afterwards
    pieces = [(np.array(times), np.array(values).reshape(-1, x.dim))]
    for m, (tau, e) in enumerate(zip(x.S, x.excursions)):
        es = hold_steps(e, delta)
        start = tau + shift[m]
        pieces.append(((start + es.times * lengths[m]) / total, es.values))
    allt = np.concatenate([p[0] for p in pieces])
    allv = np.vstack([p[1] for p in pieces])
    order = np.argsort(allt, kind="stable")
    times, values = [], []
    for t, v in zip(allt[order], allv[order]):
        _append(times, values, float(t), v)
    if times and times[-1] > 1.0:
        times[-1] = 1.0
    return StepPath(seq[0], times, np.array(values).reshape(-1, x.dim))


def d_Fprime(x: Decorated, y: Decorated, delta: float) -> MetricResult:
    """Pseudometric ``d_E(pi_E x, pi_E y) + d_D(pi_D x, pi_D y)``."""
    if x.dim != y.dim:
        raise ValueError("dimension mismatch")
    he = hausdorff(eelement_graph(pi_E(x)), eelement_graph(pi_E(y)), delta)
    hd = d_tildeD(pi_D(x, delta), pi_D(y, delta), delta)
    return MetricResult(he.value + hd.value, he.error_bound + hd.error_bound, "sampled")


# ---------------------------------------------------------------------------
# embeddings


def _profiles_list(profiles) -> list[Profile]:
    if isinstance(profiles, Mapping):
        profiles = list(profiles.values())
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one profile")
    return profiles


def nearest_profile(y, profiles, tol: float = 1e-12) -> Profile | None:
    """Profile whose direction is closest to ``y / |y|``.

    Returns ``None`` (the zero profile) when ``y = 0`` or when two distinct
    directions are equally close within ``tol``.
    """
    profiles = _profiles_list(profiles)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ny = np.linalg.norm(y)
    if ny == 0.0:
        return None
    dists = np.array([np.linalg.norm(y / ny - p.omega) for p in profiles])
    order = np.argsort(dists, kind="stable")
    if len(profiles) > 1 and dists[order[1]] - dists[order[0]] <= tol:
        return None
    return profiles[order[0]]


def _scaled_excursion(start, jump, profile: Profile | None, linear_cells: int = 256,
                      end=None) -> Path:
    """``start + |jump| P(t) + t (jump - |jump| P(1))`` as a path.

    ``end`` overrides the rounded ``start + jump`` as the exact final value.
    """
    size = float(np.linalg.norm(jump))
    end = start + jump if end is None else end
    if profile is None:
        return PolylinePath([0.0, 1.0], np.vstack([start, end]))
    P = profile.path
    corr = jump - size * profile.omega
    if isinstance(P, PolylinePath):
        vals = start + size * P.values + P.times[:, None] * corr
        return _snap(PolylinePath(P.times, vals), start, end)
    if not np.any(corr):
        vals = start + size * P.values
        return _snap(StepPath(start, P.times, vals), start, end)
    # step profile plus a linear drift: hold the drift on a fine grid
    grid = np.arange(1, linear_cells + 1) / linear_cells
    t = np.union1d(P.times, grid)
    k = np.searchsorted(P.times, t, side="right")
    pv = value_sequence(P)[k]
    vals = start + size * pv + t[:, None] * corr
    return _snap(StepPath(start, t, vals), start, end)


def chi(u: Path, profiles) -> Decorated:
    """Decorate every jump of ``u`` with the nearest-direction profile."""
    profiles = _profiles_list(profiles)
    S = _discontinuities(u)
    exc = []
    for tau in S:
        left = evaluate(u, tau, "left")
        right = evaluate(u, tau)
        jump = right - left
        exc.append(_scaled_excursion(left, jump, nearest_profile(jump, profiles), end=right))
    return Decorated(u, S, exc)


def embed_step_trivial(w: StepPath, n: int) -> Decorated:
    """Attach two-valued excursions at every grid time ``j / n``, ``1 <= j < n``.

    Raises
    ------
    ValueError
        If ``w`` jumps at a time that is not a multiple of ``1 / n``.
    """
    scaled = w.times * n
    if np.any(np.abs(scaled - np.round(scaled)) > 1e-9 * n):
        raise ValueError("step path has a jump off the 1/n grid")
    S = np.arange(1, n) / n
    grid_idx = np.round(scaled).astype(np.int64)
    seq = value_sequence(w)
    # value on [(j-1)/n, j/n) and at j/n
    pos = np.searchsorted(grid_idx, np.arange(0, n + 1), side="right")
    on_grid = seq[pos]
    exc = []
    for j in range(1, n):
        before, after = on_grid[j - 1], on_grid[j]
        if np.array_equal(before, after):
            exc.append(StepPath(before))
        else:
            exc.append(StepPath(before, [0.5], after[None, :]))
    return Decorated(w, S, exc, check=False)


def decorate_levy(L, profiles) -> Decorated:
    """Attach ``|jump| P_i`` at each listed jump of a sampled Levy path.

    Discontinuities of the realized path that come from the grid-sampled
    continuous component get straight-line excursions.
    """
    profiles = _profiles_list(profiles)
    u = L.realized
    dirs = L.spectral.directions
    S = _discontinuities(u)
    listed = dict(zip(np.asarray(L.jump_times, dtype=float), np.asarray(L.jump_index)))
    exc = []
    for tau in S:
        left = evaluate(u, tau, "left")
        jump = evaluate(u, tau) - left
        if tau in listed:
            omega = dirs[listed[tau]]
            match = [p for p in profiles if np.array_equal(p.omega, omega)]
            if not match:
                raise ValueError(f"no profile for jump direction {omega}")
            P = match[0]
            vals_path = P.path
            size = float(np.linalg.norm(jump))
            if isinstance(vals_path, StepPath):
                e = StepPath(left, vals_path.times, left + size * vals_path.values)
            else:
                e = PolylinePath(vals_path.times, left + size * vals_path.values)
            exc.append(_snap(e, left, left + jump))
        else:
            exc.append(PolylinePath([0.0, 1.0], np.vstack([left, left + jump])))
    return Decorated(u, S, exc)


def psi_max(x: Decorated) -> StepPath:
    """Running maximum of the box-valued projection (one dimension only)."""
    if x.dim != 1:
        raise ValueError("maximum functional needs dim = 1")
    u = x.u
    if not isinstance(u, StepPath):
        raise ValueError("maximum functional needs a step path")
    e = pi_E(x)
    box_max = dict(zip(e.S, e.hi[:, 0]))
    times = np.union1d(u.times, e.S)
    k = np.searchsorted(u.times, times, side="right")
    vals = value_sequence(u)[k, 0]
    tops = np.array([max(v, box_max.get(t, v)) for t, v in zip(times, vals)])
    run = np.maximum.accumulate(np.r_[u.u0[0], tops])
    changed = run[1:] != run[:-1]
    return StepPath(u.u0, times[changed], run[1:][changed][:, None])


# ---------------------------------------------------------------------------
# JSON


def decorated_to_dict(x: Decorated) -> dict:
    obj = path_to_dict(x.u)
    obj["excursions"] = [{"t": float(t), "path": path_to_dict(e)}
                         for t, e in zip(x.S, x.excursions)]
    return obj


def decorated_from_dict(obj: dict) -> Decorated:
    u = path_from_dict(obj)
    ex = obj.get("excursions", [])
    return Decorated(u, [e["t"] for e in ex], [path_from_dict(e["path"]) for e in ex])
