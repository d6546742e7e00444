"""Cadlag path representations on [0, 1] and their completed graphs.

Two concrete path kinds are used throughout the package:

* :class:`StepPath` -- a piecewise constant, right-continuous function with
  finitely many jumps.  Jumps are stored as post-jump values so that left
  and right evaluation are table lookups.
* :class:`PolylinePath` -- a continuous piecewise-linear function.

A jump exactly at ``t = 1`` is allowed for step paths (the terminal jump of
processes such as ``t -> sum_{j < [nt]} ...``); every other jump time lies in
the open interval ``(0, 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

__all__ = [
    "StepPath",
    "PolylinePath",
    "Path",
    "Segment",
    "TimeBox",
    "GraphSet",
    "Profile",
    "evaluate",
    "completed_graph",
    "affine_transform",
    "value_sequence",
    "hold_steps",
    "zero_profile",
    "path_to_dict",
    "path_from_dict",
    "dumps_path",
    "loads_path",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepPath:
    """Piecewise constant cadlag path ``[0, 1] -> R^d``.

    Parameters
    ----------
    u0 : array_like, shape (d,)
        Value on ``[0, t_1)``.
    times : array_like, shape (k,)
        Strictly increasing jump times in ``(0, 1]``.
    values : array_like, shape (k, d)
        Post-jump values; ``values[i]`` holds on ``[times[i], times[i+1])``.
    """

    u0: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def __init__(self, u0, times=(), values=None):
        u0 = np.atleast_1d(np.asarray(u0, dtype=float))
        if u0.ndim != 1 or u0.size == 0:
            raise ValueError("u0 must be a nonempty vector")
        d = u0.size
        times = np.asarray(times, dtype=float).reshape(-1)
        if values is None:
            values = np.empty((0, d))
        values = np.asarray(values, dtype=float).reshape(times.size, d)
        if times.size:
            if not (times[0] > 0.0 and times[-1] <= 1.0):
                raise ValueError("jump times must lie in (0, 1]")
            if np.any(np.diff(times) <= 0.0):
                raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "u0", _frozen(u0))
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def dim(self) -> int:
        return self.u0.size

    @property
    def kind(self) -> str:
        return "step"

    @property
    def has_terminal_jump(self) -> bool:
        return bool(self.times.size and self.times[-1] == 1.0)

    def __repr__(self):
        return f"StepPath(dim={self.dim}, jumps={self.times.size})"


@dataclass(frozen=True, eq=False)
class PolylinePath:
    """Continuous piecewise-linear path with breakpoints from 0 to 1."""

    times: np.ndarray
    values: np.ndarray

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.size < 2 or values.shape[0] != times.size:
            raise ValueError("need at least two breakpoints with matching values")
        if times[0] != 0.0 or times[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def u0(self) -> np.ndarray:
        return self.values[0]

    @property
    def kind(self) -> str:
        return "polyline"

    def __repr__(self):
        return f"PolylinePath(dim={self.dim}, breakpoints={self.times.size})"


Path = Union[StepPath, PolylinePath]


def evaluate(u: Path, t: float, side: str = "right") -> np.ndarray:
    """Evaluate ``u(t)`` (``side='right'``) or the left limit ``u(t-)``.

    Raises
    ------
    ValueError
        If ``t`` is outside ``[0, 1]`` or a left limit is requested at 0.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time {t} outside [0, 1]")
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if side == "left" and t == 0.0:
        raise ValueError("left limit undefined at t = 0")
    if isinstance(u, StepPath):
        k = np.searchsorted(u.times, t, side="right" if side == "right" else "left")
        return u.u0.copy() if k == 0 else u.values[k - 1].copy()
    return np.array([np.interp(t, u.times, u.values[:, i]) for i in range(u.dim)])


def value_sequence(u: StepPath) -> np.ndarray:
    """Values ``u0, u(t_1), ..., u(t_k)`` of a step path, shape (k+1, d)."""
    return np.vstack([u.u0[None, :], u.values])


def affine_transform(u: Path, scale: float, offset) -> Path:
    """Return ``t -> scale * u(t) + offset`` with the same jump times."""
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (u.dim,))
    if isinstance(u, StepPath):
        return StepPath(scale * u.u0 + offset, u.times, scale * u.values + offset)
    return PolylinePath(u.times, scale * u.values + offset)


def hold_steps(u: Path, delta: float | None = None) -> StepPath:
    """Step path approximating ``u`` to within ``delta`` in sup norm.

    Step paths are returned unchanged.  Polylines are subdivided so that
    consecutive held values differ by at most ``delta`` and then held
    constant on each piece; the final breakpoint becomes a terminal jump.
    """
    if isinstance(u, StepPath):
        return u
    if delta is None or delta <= 0:
        raise ValueError("a positive delta is needed to hold a polyline")
    ts, vs = [], []
    for i in range(u.times.size - 1):
        a, b = u.times[i], u.times[i + 1]
        va, vb = u.values[i], u.values[i + 1]
        pieces = max(1, int(np.ceil(np.linalg.norm(vb - va) / delta)))
        s = np.arange(1, pieces + 1) / pieces
        ts.append(a + s * (b - a))
        vs.append(va + s[:, None] * (vb - va))
    times = np.concatenate(ts)
    values = np.vstack(vs)
    times[-1] = 1.0
    values[-1] = u.values[-1]
    return StepPath(u.values[0], times, values)


# ---------------------------------------------------------------------------
# graph geometry


@dataclass(frozen=True, eq=False)
class Segment:
    """Closed segment between two points of ``[0, 1] x R^d``."""

    p: np.ndarray
    q: np.ndarray

    def __init__(self, p, q):
        p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        if p.shape != q.shape or p.ndim != 1 or p.size < 2:
            raise ValueError("segment endpoints must be points of R^(1+d)")
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "q", _frozen(q))


@dataclass(frozen=True, eq=False)
class TimeBox:
    """Vertical box ``{t} x [lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    t: float
    lo: np.ndarray
    hi: np.ndarray

    def __init__(self, t, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        object.__setattr__(self, "t", float(t))
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))


class GraphSet:
    """Finite union of segments and time boxes in ``[0, 1] x R^d``.

    Stored as packed arrays ``(a, b, is_box)``: a segment is ``a -> b`` and a
    box at time ``t`` has corners ``a = (t, lo)`` and ``b = (t, hi)``.
    """

    def __init__(self, primitives: Iterable = ()):
        primitives = list(primitives)
        if not primitives:
            self._a = np.empty((0, 0))
            self._b = np.empty((0, 0))
            self._box = np.empty(0, dtype=np.bool_)
            return
        first = primitives[0]
        dim1 = first.p.size if isinstance(first, Segment) else first.lo.size + 1
        n = len(primitives)
        a = np.empty((n, dim1))
        b = np.empty((n, dim1))
        is_box = np.zeros(n, dtype=np.bool_)
        for i, pr in enumerate(primitives):
            if isinstance(pr, Segment):
                a[i], b[i] = pr.p, pr.q
            else:
                a[i, 0] = b[i, 0] = pr.t
                a[i, 1:], b[i, 1:] = pr.lo, pr.hi
                is_box[i] = True
        self._set(a, b, is_box)

    def _set(self, a, b, is_box):
        self._a, self._b, self._box = _frozen(a), _frozen(b), np.asarray(is_box, dtype=np.bool_)
        self._box.setflags(write=False)

    @classmethod
    def from_arrays(cls, a, b, is_box) -> "GraphSet":
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        is_box = np.asarray(is_box, dtype=np.bool_)
        if a.shape != b.shape or a.ndim != 2 or is_box.shape != (a.shape[0],):
            raise ValueError("inconsistent primitive arrays")
        if np.any(is_box & np.any(a > b, axis=1)):
            raise ValueError("box needs lo <= hi componentwise")
        g = cls()
        g._set(a, b, is_box)
        return g

    def __len__(self):
        return self._box.size

    @property
    def primitives(self) -> tuple:
        out = []
        for a, b, box in zip(self._a, self._b, self._box):
            out.append(TimeBox(a[0], a[1:], b[1:]) if box else Segment(a, b))
        return tuple(out)

    def union(self, other: "GraphSet") -> "GraphSet":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        return GraphSet.from_arrays(np.vstack([self._a, other._a]), np.vstack([self._b, other._b]),
                                    np.r_[self._box, other._box])

    def arrays(self):
        """Packed primitives ``(a, b, is_box)``."""
        if len(self) == 0:
            raise ValueError("empty GraphSet")
        return self._a, self._b, self._box


def completed_graph(u: Path, completion: str = "segment") -> GraphSet:
    """Graph of ``u`` with each discontinuity filled in.

    Parameters
    ----------
    completion : {'segment', 'box'}
        Fill a jump with the straight segment between ``u(t-)`` and ``u(t)``
        or with the product box spanned by them.
    """
    if completion not in ("segment", "box"):
        raise ValueError("completion must be 'segment' or 'box'")
    prims = []
    if isinstance(u, PolylinePath):
        for i in range(u.times.size - 1):
            prims.append(Segment(np.r_[u.times[i], u.values[i]],
                                 np.r_[u.times[i + 1], u.values[i + 1]]))
        return GraphSet(prims)
    return _step_graph(u, completion)


def _step_graph(u: StepPath, completion: str) -> GraphSet:
    knots = np.r_[0.0, u.times]
    ends = np.r_[u.times, 1.0]
    seq = value_sequence(u)
    keep = ends > knots
    ha = np.hstack([knots[keep, None], seq[keep]])
    hb = np.hstack([ends[keep, None], seq[keep]])
    left, right = seq[:-1], seq[1:]
    if completion == "segment":
        ja = np.hstack([u.times[:, None], left])
        jb = np.hstack([u.times[:, None], right])
        jbox = np.zeros(u.times.size, dtype=np.bool_)
    else:
        ja = np.hstack([u.times[:, None], np.minimum(left, right)])
        jb = np.hstack([u.times[:, None], np.maximum(left, right)])
        jbox = np.ones(u.times.size, dtype=np.bool_)
    return GraphSet.from_arrays(np.vstack([ha, ja]), np.vstack([hb, jb]),
                                np.r_[np.zeros(ha.shape[0], dtype=np.bool_), jbox])


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True, eq=False)
class Profile:
    """Normalized excursion shape: ``P(0) = 0`` and ``|P(1)|`` is 0 or 1."""

    path: Path

    def __post_init__(self):
        p0 = evaluate(self.path, 0.0)
        p1 = evaluate(self.path, 1.0)
        if np.max(np.abs(p0)) > 1e-12:
            raise ValueError("profile must start at 0")
        n1 = np.linalg.norm(p1)
        if not (n1 == 0.0 or abs(n1 - 1.0) <= 1e-9):
            raise ValueError(f"profile must end on the unit sphere or at 0, got |P(1)|={n1}")

    @property
    def omega(self) -> np.ndarray:
        return evaluate(self.path, 1.0)

    @property
    def dim(self) -> int:
        return self.path.dim

    @property
    def is_zero(self) -> bool:
        return not np.any(self.omega)


def zero_profile(dim: int) -> Profile:
    return Profile(StepPath(np.zeros(dim)))


# ---------------------------------------------------------------------------
# JSON


def path_to_dict(u: Path) -> dict:
    pts = [{"t": float(t), "v": [float(x) for x in v]} for t, v in zip(u.times, u.values)]
    return {"dim": u.dim, "u0": [float(x) for x in u.u0], "kind": u.kind, "points": pts}


def path_from_dict(obj: dict) -> Path:
    try:
        d = int(obj["dim"])
        kind = obj.get("kind", "step")
        pts = obj.get("points", [])
        times = [p["t"] for p in pts]
        values = np.array([p["v"] for p in pts], dtype=float).reshape(len(pts), d)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed path object: {exc!r}") from None
    if kind == "step":
        return StepPath(np.asarray(obj["u0"], dtype=float).reshape(d), times, values)
    if kind == "polyline":
        return PolylinePath(times, values)
    raise ValueError(f"unknown path kind {kind!r}")


def dumps_path(u: Path) -> str:
    return json.dumps(path_to_dict(u))


def loads_path(text: str) -> Path:
    return path_from_dict(json.loads(text))
