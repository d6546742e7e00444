"""Interval maps, observables, inducing, and the path processes built on them.

Two orbit generators are provided.  :func:`iterate` applies a map in double
precision.  :func:`sample_orbit` draws an orbit of a random initial point;
for the doubling and tripling maps it works symbolically: the digits of a
Lebesgue-random point are i.i.d., and ``T^j x`` is recovered from the digit
tail by a backward linear recursion, so long orbits keep full relative
precision instead of collapsing onto 0 after about 53 steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy import signal

from .fprime import _scaled_excursion, nearest_profile
from .metrics import _frechet, d_tildeD
from .paths import PolylinePath, Profile, StepPath, value_sequence, zero_profile

__all__ = [
    "Doubling",
    "Tripling",
    "LSV",
    "Gauss",
    "DoubleLSV",
    "GaussDigit",
    "PowerPole",
    "TwoPole",
    "HolderVector",
    "InducedScheme",
    "OrbitSample",
    "Orbit",
    "NonReturnError",
    "make_scheme",
    "doubling_scheme",
    "tripling_scheme",
    "lsv_scheme",
    "gauss_scheme",
    "double_lsv_scheme",
    "iterate",
    "first_return",
    "induced_observable",
    "Pi",
    "sample_orbit",
    "returns_of",
    "wn_path",
    "wnv_path",
    "un_path",
    "bn",
    "sample_muX",
    "induced_values",
    "xi_zeta_distances",
    "doubling_conditional_distances",
    "excursion_spans",
    "wn_endpoints",
    "hypothesis_main_stat",
    "vl_residual",
    "residual_exponent",
    "center_observable",
]


class NonReturnError(RuntimeError):
    """Raised when an orbit does not return to the inducing set within the cap."""


# ---------------------------------------------------------------------------
# maps

_DOUBLING, _TRIPLING, _LSV, _GAUSS, _DOUBLE_LSV = range(5)


@dataclass(frozen=True)
class Doubling:
    name = "doubling"
    code = _DOUBLING
    alpha = 0.0


@dataclass(frozen=True)
class Tripling:
    name = "tripling"
    code = _TRIPLING
    alpha = 0.0


@dataclass(frozen=True)
class LSV:
    """``x (1 + 2^{1/alpha} x^{1/alpha})`` on ``[0, 1/2)`` and ``2x - 1`` on ``[1/2, 1]``."""

    alpha: float
    name = "lsv"
    code = _LSV

    def __post_init__(self):
        if not 1 < self.alpha < 2:
            raise ValueError("LSV needs alpha in (1, 2)")


@dataclass(frozen=True)
class Gauss:
    name = "gauss"
    code = _GAUSS
    alpha = 0.0


@dataclass(frozen=True)
class DoubleLSV:
    """Two neutral fixed points: the LSV branch at 0 and its mirror image at 1."""

    alpha: float
    name = "double-lsv"
    code = _DOUBLE_LSV

    def __post_init__(self):
        if not 1 < self.alpha < 2:
            raise ValueError("DoubleLSV needs alpha in (1, 2)")


@njit(cache=True)
def _step(code, alpha, x):
    if code == _DOUBLING:
        y = 2.0 * x
        return y - 1.0 if y >= 1.0 else y
    if code == _TRIPLING:
        y = 3.0 * x
        return y - math.floor(y)
    if code == _LSV:
        if x < 0.5:
            return x * (1.0 + (2.0 * x) ** (1.0 / alpha))
        return 2.0 * x - 1.0
    if code == _GAUSS:
        y = 1.0 / x
        return y - math.floor(y)
    if x < 0.5:
        return x * (1.0 + (2.0 * x) ** (1.0 / alpha))
    z = 1.0 - x
    return 1.0 - z * (1.0 + (2.0 * z) ** (1.0 / alpha))


@njit(cache=True)
def _orbit(code, alpha, x, n):
    out = np.empty(n + 1)
    out[0] = x
    for j in range(n):
        if code == _GAUSS and x == 0.0:
            return out[: j + 1]
        x = _step(code, alpha, x)
        out[j + 1] = x
    return out


@njit(cache=True)
def _first_entry(code, alpha, x, lo, hi, cap):
    # smallest n >= 1 with T^n x in the union of [lo_i, hi_i]
    for n in range(1, cap + 1):
        if code == _GAUSS and x == 0.0:
            return -1, x
        x = _step(code, alpha, x)
        for i in range(lo.size):
            if lo[i] <= x <= hi[i]:
                return n, x
    return -1, x


def _check_point(m, x):
    if m.code == _GAUSS:
        if not 0.0 < x < 1.0:
            raise ValueError("Gauss map needs x in (0, 1)")
    elif not 0.0 <= x <= 1.0:
        raise ValueError("point outside [0, 1]")


def iterate(m, x: float, n: int) -> np.ndarray:
    """Orbit ``x, Tx, ..., T^n x`` in double precision."""
    _check_point(m, x)
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = _orbit(m.code, float(m.alpha), float(x), int(n))
    if out.size < n + 1:
        raise ValueError("orbit hit the point 0 where the Gauss map is undefined")
    return out


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class GaussDigit:
    """``v(x) = floor(1/x)``."""

    dim = 1

    def __call__(self, x):
        return np.floor(1.0 / np.asarray(x, dtype=float))[:, None] if np.ndim(x) else \
            np.array([math.floor(1.0 / x)], dtype=float)


@dataclass(frozen=True)
class PowerPole:
    """``v(x) = x^{-1/alpha}``."""

    alpha: float
    dim = 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (x ** (-1.0 / self.alpha))[..., None]


@dataclass(frozen=True)
class TwoPole:
    """``v(x) = |x - 1/8|^{-1/alpha} - |x - 3/8|^{-1/alpha}``."""

    alpha: float
    dim = 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = -1.0 / self.alpha
        return (np.abs(x - 0.125) ** p - np.abs(x - 0.375) ** p)[..., None]


@dataclass(frozen=True)
class HolderVector:
    """Linear interpolation between ``at_zero`` and ``at_one``, minus ``center``."""

    at_zero: tuple
    at_one: tuple
    center: tuple = None

    def __post_init__(self):
        if len(self.at_zero) != len(self.at_one):
            raise ValueError("endpoint values must have equal length")
        if self.center is None:
            object.__setattr__(self, "center", tuple(0.0 for _ in self.at_zero))

    @property
    def dim(self):
        return len(self.at_zero)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        w0 = np.asarray(self.at_zero, dtype=float)
        w1 = np.asarray(self.at_one, dtype=float)
        return (1 - x) * w0 + x * w1 - np.asarray(self.center, dtype=float)


def center_observable(m, obs: HolderVector, n_iter: int, rng: np.random.Generator,
                      burn_in: int = 10_000) -> HolderVector:
    """Observable shifted by its Birkhoff average along one long orbit."""
    x0 = float(rng.uniform(0.1, 0.9))
    x = _orbit(m.code, float(m.alpha), x0, burn_in)[-1]
    total = np.zeros(obs.dim)
    chunk = 1_000_000
    done = 0
    raw = HolderVector(obs.at_zero, obs.at_one)
    while done < n_iter:
        k = min(chunk, n_iter - done)
        orb = _orbit(m.code, float(m.alpha), x, k)
        total += raw(orb[:-1]).sum(axis=0)
        x = orb[-1]
        done += k
    return HolderVector(obs.at_zero, obs.at_one, tuple(float(c) for c in total / n_iter))


# ---------------------------------------------------------------------------
# schemes


@dataclass(frozen=True, eq=False)
class InducedScheme:
    """A map with an inducing set ``X`` (closed intervals), observable and profiles."""

    map: object
    X: tuple
    observable: object
    profiles: tuple
    alpha: float

    def __post_init__(self):
        if not self.X or sum(b - a for a, b in self.X) <= 0:
            raise ValueError("X must have positive measure")
        object.__setattr__(self, "profiles", tuple(self.profiles))

    @property
    def dim(self) -> int:
        return self.observable.dim

    @property
    def measure_X(self) -> float:
        return float(sum(b - a for a, b in self.X))

    def in_X(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.X:
            out |= (x >= a) & (x <= b)
        return out

    def _bounds(self):
        lo = np.array([a for a, _ in self.X], dtype=float)
        hi = np.array([b for _, b in self.X], dtype=float)
        return lo, hi


def _geometric_step_profile(ratio: float) -> Profile:
    """Step profile through ``1 - ratio^j`` (j = 1, 2, ...) ending at exactly 1.

    Jump ``j`` sits at ``1 - 2^{-j}``; only the order of values matters for
    the quotient distance.
    """
    vals = []
    j = 1
    while True:
        v = 1.0 - ratio ** j
        if v == 1.0 or j > 200:
            break
        vals.append(v)
        j += 1
    vals.append(1.0)
    k = len(vals)
    if k <= 48:
        times = 1.0 - 2.0 ** -np.arange(1, k + 1)
    else:
        times = np.arange(1, k + 1) / (k + 1)
    return Profile(StepPath([0.0], times, np.array(vals)[:, None]))


def doubling_scheme(alpha: float) -> InducedScheme:
    """Doubling map, ``v(x) = x^{-1/alpha}``, ``X = [1/2, 1]``."""
    if not 0 < alpha < 1:
        raise ValueError("doubling example needs alpha in (0, 1)")
    c = 2.0 ** (-1.0 / alpha)
    return InducedScheme(Doubling(), ((0.5, 1.0),), PowerPole(alpha),
                         (_geometric_step_profile(c),), alpha)


def tripling_scheme(alpha: float) -> InducedScheme:
    """Tripling map with the two-pole observable, ``X = M \\ ([1/9,2/9] u [1/3,4/9])``."""
    if not 0 < alpha < 1:
        raise ValueError("tripling example needs alpha in (0, 1)")
    c = 3.0 ** (-1.0 / alpha)
    P1 = _geometric_step_profile(-c)
    Pm = Profile(StepPath([0.0], P1.path.times, -P1.path.values))
    X = ((0.0, 1 / 9), (2 / 9, 1 / 3), (4 / 9, 1.0))
    return InducedScheme(Tripling(), X, TwoPole(alpha), (P1, Pm), alpha)


def _linear_profile(omega) -> Profile:
    omega = np.asarray(omega, dtype=float)
    return Profile(PolylinePath([0.0, 1.0], np.vstack([np.zeros_like(omega), omega])))


def lsv_scheme(alpha: float, at_zero=(1.0,), at_one=(-1.0,), center_iterations: int = 10**7,
               seed: int = 0) -> InducedScheme:
    """LSV map induced on ``[1/2, 1]`` with a centered bounded observable."""
    m = LSV(alpha)
    obs = center_observable(m, HolderVector(tuple(at_zero), tuple(at_one)), center_iterations,
                            np.random.default_rng(seed))
    w = np.asarray(obs(0.0)).ravel()
    return InducedScheme(m, ((0.5, 1.0),), obs, (_linear_profile(w / np.linalg.norm(w)),), alpha)


def double_lsv_scheme(alpha: float, at_zero=(1.0, 0.0), at_one=(0.0, 1.0),
                      center_iterations: int = 10**7, seed: int = 0) -> InducedScheme:
    """Two-neutral-point map induced on ``[1/4, 3/4]``; profiles ``t omega_0``, ``t omega_1``."""
    m = DoubleLSV(alpha)
    obs = center_observable(m, HolderVector(tuple(at_zero), tuple(at_one)), center_iterations,
                            np.random.default_rng(seed))
    w0 = np.asarray(obs(0.0)).ravel()
    w1 = np.asarray(obs(1.0)).ravel()
    profiles = (_linear_profile(w0 / np.linalg.norm(w0)), _linear_profile(w1 / np.linalg.norm(w1)))
    return InducedScheme(m, ((0.25, 0.75),), obs, profiles, alpha)


def gauss_scheme() -> InducedScheme:
    """Gauss map with the digit observable; induced on the whole interval."""
    pair = Profile(StepPath([0.0], [1.0], [[1.0]]))
    return InducedScheme(Gauss(), ((0.0, 1.0),), GaussDigit(), (pair,), 1.0)


def make_scheme(name: str, alpha: float | None = None, **kw) -> InducedScheme:
    name = name.lower()
    if name == "doubling":
        return doubling_scheme(0.75 if alpha is None else alpha)
    if name == "tripling":
        return tripling_scheme(0.5 if alpha is None else alpha)
    if name == "lsv":
        return lsv_scheme(1.5 if alpha is None else alpha, **kw)
    if name == "double-lsv":
        return double_lsv_scheme(1.5 if alpha is None else alpha, **kw)
    if name == "gauss":
        return gauss_scheme()
    raise ValueError(f"unknown map {name!r}")


# ---------------------------------------------------------------------------
# normalization


def bn(scheme: InducedScheme, n) -> float:
    """Normalizing sequence ``b_n``.

    Doubling: ``(1 - c)^{-1} n^{1/alpha}`` with ``c = 2^{-1/alpha}``.
    Tripling: ``(72/7)^{1/alpha} (c^{-1} + 1)^{-1} n^{1/alpha}`` with
    ``c = 3^{-1/alpha}``; the tail of the induced observable is
    ``mu_X(|Z| > t) = (72/7) ((c^{-1} + 1) t)^{-alpha}`` because each of the
    four singular points is approached from both sides.
    Other maps: ``n^{1/alpha}`` (slowly varying factor set to 1).
    """
    if n < 1:
        raise ValueError("n must be positive")
    a = scheme.alpha
    code = scheme.map.code
    if code == _DOUBLING:
        c = 2.0 ** (-1.0 / a)
        return n ** (1.0 / a) / (1.0 - c)
    if code == _TRIPLING:
        c = 3.0 ** (-1.0 / a)
        return (72.0 / 7.0) ** (1.0 / a) / (1.0 / c + 1.0) * n ** (1.0 / a)
    return float(n) ** (1.0 / a)


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True, eq=False)
class Orbit:
    """Points ``T^j x`` for ``j = 0..n`` and their membership in ``X``."""

    points: np.ndarray
    in_X: np.ndarray

    @property
    def n(self) -> int:
        return self.points.size - 1


_TRIPLING_PAIRS = np.array([(a, b) for a in range(3) for b in range(3)
                            if (a, b) not in ((0, 1), (1, 0))])


def _digit_orbit(base: int, n: int, rng, first_digits=None, tail_digits: int = 64):
    digits = rng.integers(0, base, size=n + 1 + tail_digits).astype(np.int8)
    if first_digits is not None:
        digits[: len(first_digits)] = first_digits
    # y_j = (d_j + y_{j+1}) / base, run backwards from a uniform tail
    rev = digits[::-1].astype(float)
    y_end = rng.random()
    y, _ = signal.lfilter([1.0 / base], [1.0, -1.0 / base], rev, zi=[y_end / base])
    y = y[::-1][: n + 1]
    return np.ascontiguousarray(y), digits


def sample_orbit(scheme: InducedScheme, n: int, rng: np.random.Generator,
                 start: str = "M", burn_in: int = 1000) -> Orbit:
    """Orbit of length ``n`` from a random point.

    ``start='M'`` draws the initial point from the invariant measure on the
    whole interval, ``start='X'`` from the normalized restriction to ``X``.
    Doubling and tripling orbits are exact in law (symbolic digits); Gauss
    starts exactly from its invariant density; the LSV-type maps use a
    burn-in orbit from a uniform point.
    """
    code = scheme.map.code
    if code == _DOUBLING:
        y, d = _digit_orbit(2, n, rng, [1] if start == "X" else None)
        return Orbit(y, d[: n + 1] == 1)
    if code == _TRIPLING:
        first = _TRIPLING_PAIRS[rng.integers(len(_TRIPLING_PAIRS))] if start == "X" else None
        y, d = _digit_orbit(3, n, rng, first)
        a, b = d[: n + 1], d[1: n + 2]
        return Orbit(y, ~(((a == 0) & (b == 1)) | ((a == 1) & (b == 0))))
    if code == _GAUSS:
        # X is the whole interval, so both starts use the Gauss measure
        x0 = 2.0 ** rng.random() - 1.0
        pts = iterate(scheme.map, x0, n)
        return Orbit(pts, scheme.in_X(pts))
    x0 = float(rng.random())
    pre = _orbit(code, float(scheme.map.alpha), x0, burn_in)
    x = pre[-1]
    if start == "X":
        lo, hi = scheme._bounds()
        if not scheme.in_X(x):
            r, x = _first_entry(code, float(scheme.map.alpha), x, lo, hi, 10**7)
            if r < 0:
                raise NonReturnError("no entry to X within the cap")
    pts = _orbit(code, float(scheme.map.alpha), x, n)
    return Orbit(pts, scheme.in_X(pts))


def sample_muX(scheme: InducedScheme, rng: np.random.Generator) -> float:
    """One point distributed as ``mu_X`` (exact for doubling/tripling/Gauss)."""
    code = scheme.map.code
    if code in (_DOUBLING, _TRIPLING):
        lengths = np.array([b - a for a, b in scheme.X])
        i = rng.choice(lengths.size, p=lengths / lengths.sum())
        a, b = scheme.X[i]
        return float(a + (b - a) * rng.random())
    return float(sample_orbit(scheme, 0, rng, start="X").points[0])


def returns_of(orbit: Orbit) -> np.ndarray:
    """Times ``j >= 1`` at which the orbit is in ``X``."""
    return np.flatnonzero(orbit.in_X[1:]) + 1


# ---------------------------------------------------------------------------
# inducing


@dataclass(frozen=True, eq=False)
class OrbitSample:
    """One excursion: start point, return time, induced value and its two paths."""

    x0: float
    R: int
    V: np.ndarray
    xi: StepPath
    zeta: object
    orbit: np.ndarray = field(repr=False)


def first_return(scheme: InducedScheme, x: float, cap: int = 10**7):
    """Return time ``R(x)`` and the orbit ``x, Tx, ..., T^R x``.

    Raises
    ------
    ValueError
        If ``x`` is not in ``X``.
    NonReturnError
        If no return happens within ``cap`` iterates.
    """
    _check_point(scheme.map, x)
    if not scheme.in_X(x):
        raise ValueError("x is not in the inducing set")
    lo, hi = scheme._bounds()
    R, _ = _first_entry(scheme.map.code, float(scheme.map.alpha), float(x), lo, hi, int(cap))
    if R < 0:
        raise NonReturnError(f"no return to X within {cap} iterates from x={x!r}")
    return int(R), iterate(scheme.map, x, R)


def Pi(y, profiles) -> Profile:
    """Nearest-direction profile; the zero profile on ties or ``y = 0``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    p = nearest_profile(y, profiles)
    return zero_profile(y.size) if p is None else p


def _zeta(V, profiles):
    V = np.atleast_1d(V)
    return _scaled_excursion(np.zeros_like(V), V, nearest_profile(V, profiles))


def induced_observable(scheme: InducedScheme, x: float, cap: int = 10**7) -> OrbitSample:
    """Excursion data for ``x`` in ``X``: ``R``, ``V``, ``xi`` and ``zeta``."""
    R, orb = first_return(scheme, x, cap)
    vals = scheme.observable(orb[:R])
    partial = np.cumsum(vals, axis=0)
    V = partial[-1]
    xi = StepPath(np.zeros(scheme.dim), np.arange(1, R + 1) / R, partial)
    return OrbitSample(float(x), R, V.copy(), xi, _zeta(V, scheme.profiles), orb)


def induced_values(scheme: InducedScheme, orbit: Orbit):
    """Return times ``R_j`` and induced values ``V_j`` along an orbit started in X.

    Only complete excursions are reported.
    """
    ret = np.r_[0, returns_of(orbit)]
    vals = scheme.observable(orbit.points[: ret[-1]])
    V = np.add.reduceat(vals, ret[:-1], axis=0)
    return np.diff(ret), V


# ---------------------------------------------------------------------------
# processes


def _orbit_points(scheme, x0, n):
    if isinstance(x0, Orbit):
        if x0.n < n:
            raise ValueError("orbit too short")
        return x0.points[: n + 1], x0.in_X[: n + 1]
    pts = iterate(scheme.map, float(x0), n)
    return pts, scheme.in_X(pts)


def _grid_path(partial, n, b):
    return StepPath(np.zeros(partial.shape[1]), np.arange(1, n + 1) / n, partial / b)


def wn_path(scheme: InducedScheme, x0, n: int):
    """``W_n(t) = b_n^{-1} sum_{j < [nt]} v(T^j x)`` and the return times in ``[1, n]``.

    ``x0`` is a starting point (iterated in double precision) or an
    :class:`Orbit`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    pts, inx = _orbit_points(scheme, x0, n)
    partial = np.cumsum(scheme.observable(pts[:n]), axis=0)
    return _grid_path(partial, n, bn(scheme, n)), np.flatnonzero(inx[1:]) + 1


def _induced_sequence(scheme, x0, n):
    if isinstance(x0, Orbit):
        R, V = induced_values(scheme, x0)
        if R.size < n:
            raise ValueError("orbit has fewer than n complete excursions")
        return R[:n], V[:n]
    Rs, Vs = [], []
    x = float(x0)
    for _ in range(n):
        s = induced_observable(scheme, x)
        Rs.append(s.R)
        Vs.append(s.V)
        x = float(s.orbit[-1])
    return np.array(Rs), np.array(Vs).reshape(n, scheme.dim)


def wnv_path(scheme: InducedScheme, x0, n: int) -> StepPath:
    """``W_n^V(t) = b_n^{-1} sum_{j < [nt]} V(f^j x)`` for ``x0`` in ``X``."""
    if n < 1:
        raise ValueError("n must be positive")
    _, V = _induced_sequence(scheme, x0, n)
    return _grid_path(np.cumsum(V, axis=0), n, bn(scheme, n))


def un_path(scheme: InducedScheme, x0, n: int):
    """``U_n(t) = b_n^{-1} sum_{k < N_[nt]} V(f^k x)`` with jumps at ``R_j / n``.

    Returns
    -------
    path : StepPath
    laps : ndarray
        Lap numbers ``N_k`` for ``k = 0..n``.
    times : ndarray
        Jump times ``t_{n,j} = R_j / n`` with ``R_j <= n``.
    """
    pts, inx = _orbit_points(scheme, x0, n)
    if not inx[0]:
        raise ValueError("U_n needs a starting point in X")
    laps = np.r_[0, np.cumsum(inx[1:])]
    ret = np.flatnonzero(inx[1:]) + 1
    vals = scheme.observable(pts[: max(ret[-1], 1)] if ret.size else pts[:1])
    if ret.size:
        V = np.add.reduceat(vals, np.r_[0, ret[:-1]], axis=0)
        partial = np.cumsum(V, axis=0)
    else:
        partial = np.empty((0, scheme.dim))
    times = ret / n
    path = StepPath(np.zeros(scheme.dim), times, partial / bn(scheme, n))
    return path, laps, times


# ---------------------------------------------------------------------------
# excursion-shape statistics


@njit(cache=True)
def _xi_zeta_kernel(vals, starts, ends, prof_seq, prof_off, prof_term, prof_dir):
    # one-dimensional fast path: zeta = |V| P with P(1) = sign(V)
    n = starts.size
    out = np.full(n, np.nan)
    for j in range(n):
        s, e = starts[j], ends[j]
        R = e - s
        xi = np.empty((R, 1))
        acc = 0.0
        xi[0, 0] = 0.0
        for l in range(R - 1):
            acc += vals[s + l]
            xi[l + 1, 0] = acc
        V = acc + vals[e - 1]
        if V == 0.0:
            continue
        sgn = 1.0 if V > 0 else -1.0
        k = -1
        for i in range(prof_dir.size):
            if prof_dir[i] == sgn:
                k = i
        if k < 0:
            continue
        a, b = prof_off[k], prof_off[k + 1]
        m = b - a - 1 if prof_term[k] else b - a
        zeta = np.empty((m, 1))
        for i in range(m):
            zeta[i, 0] = abs(V) * prof_seq[a + i]
        d = _frechet(xi, zeta)
        if prof_term[k]:
            d = max(d, abs(V - abs(V) * prof_seq[b - 1]))
        out[j] = d
    return out


def _excursion_distances(scheme, vals, ret):
    R = np.diff(ret)
    out = np.full(R.size, np.nan)
    if scheme.dim == 1:
        seqs, offs, term, dirs = [], [0], [], []
        for p in scheme.profiles:
            if isinstance(p.path, StepPath):
                sq = value_sequence(p.path)[:, 0]
                seqs.append(sq)
                offs.append(offs[-1] + sq.size)
                term.append(p.path.has_terminal_jump)
                dirs.append(float(p.omega[0]))
        if seqs:
            out = _xi_zeta_kernel(np.ascontiguousarray(vals[:, 0]), ret[:-1], ret[1:],
                                  np.concatenate(seqs), np.array(offs), np.array(term),
                                  np.array(dirs))
    for j in np.flatnonzero(np.isnan(out)):
        s, e = ret[j], ret[j + 1]
        partial = np.cumsum(vals[s:e], axis=0)
        xi = StepPath(np.zeros(scheme.dim), np.arange(1, e - s + 1) / (e - s), partial)
        out[j] = d_tildeD(xi, _zeta(partial[-1], scheme.profiles), 1e-6).value
    return out, R


def xi_zeta_distances(scheme: InducedScheme, orbit: Orbit, count: int | None = None):
    """``d_tildeD(xi, zeta)`` and ``R`` for consecutive excursions of an X-orbit."""
    ret = np.r_[0, returns_of(orbit)]
    if count is not None:
        ret = ret[: count + 1]
    return _excursion_distances(scheme, scheme.observable(orbit.points[: ret[-1]]), ret)


def doubling_conditional_distances(scheme: InducedScheme, R_lo: int, R_hi: int, count: int,
                                   rng: np.random.Generator):
    """``d_tildeD(xi, zeta)`` for doubling excursions with prescribed return times.

    ``R`` is drawn uniformly from ``R_lo..R_hi`` and ``x - 1/2 = 2^{-R} y``
    with ``y`` uniform on ``[1/2, 1]``, which is ``mu_X`` conditioned on
    ``R``.  Along the excursion ``T^l x = 2^{l - R} y`` for ``1 <= l < R``,
    so the values are computed without iterating.
    """
    if scheme.map.code != _DOUBLING:
        raise ValueError("doubling scheme required")
    if not 1 <= R_lo <= R_hi:
        raise ValueError("need 1 <= R_lo <= R_hi")
    R = rng.integers(R_lo, R_hi + 1, size=count)
    y = 0.5 + 0.5 * rng.random(count)
    ret = np.r_[0, np.cumsum(R)]
    pts = np.empty(ret[-1])
    for j in range(count):
        pts[ret[j]] = 0.5 + 2.0 ** -float(R[j]) * y[j]
        pts[ret[j] + 1: ret[j + 1]] = 2.0 ** (np.arange(1, R[j]) - float(R[j])) * y[j]
    d, _ = _excursion_distances(scheme, scheme.observable(pts), ret)
    return d, R


@njit(cache=True)
def _span_kernel(vals, starts, ends):
    n = starts.size
    V = np.empty(n)
    span = np.empty(n)
    for j in range(n):
        acc, hi, lo = 0.0, 0.0, 0.0
        for i in range(starts[j], ends[j]):
            acc += vals[i]
            hi = max(hi, acc)
            lo = min(lo, acc)
        V[j] = acc
        span[j] = hi - lo
    return V, span


def excursion_spans(scheme: InducedScheme, orbit: Orbit):
    """``|V|`` and the span of ``{0, v_1, ..., v_R}`` for each complete excursion.

    The orbit may start anywhere; the part before the first return is skipped.
    Partial sums restart at every excursion so large earlier values do not
    cost precision.
    """
    if scheme.dim != 1:
        raise ValueError("spans are defined for scalar observables")
    ret = returns_of(orbit)
    vals = np.ascontiguousarray(scheme.observable(orbit.points[: ret[-1]])[:, 0])
    V, span = _span_kernel(vals, ret[:-1], ret[1:])
    return np.abs(V), span


def hypothesis_main_stat(scheme: InducedScheme, n: int, rng: np.random.Generator) -> float:
    """One draw of ``b_n^{-1} max_{0 <= j <= n} d_tildeD(xi, zeta)(f^j x)``, ``x ~ mu_X``."""
    if n < 1:
        raise ValueError("n must be positive")
    steps = int(2 * n / scheme.measure_X) + 1000
    while True:
        orbit = sample_orbit(scheme, steps, rng, start="X")
        if returns_of(orbit).size >= n + 1:
            break
        steps *= 2
    d, _ = xi_zeta_distances(scheme, orbit, n + 1)
    return float(np.max(d) / bn(scheme, n))


def vl_residual(scheme: InducedScheme, x: float, lambdas: Sequence[float]):
    """Largest deviation of ``v_l`` from ``lambda_i P_i(l/R) R`` over one excursion.

    The branch ``i`` is the profile nearest to the direction of ``V``; when
    there is none (``V = 0`` or a tie) the point counts as ``X_0`` and the
    residual is ``max_l |v_l|``.

    Returns
    -------
    residual : float
    R : int
    branch : int or None
    """
    s = induced_observable(scheme, x)
    partial = value_sequence(s.xi)
    p = nearest_profile(s.V, scheme.profiles)
    if p is None:
        return float(np.max(np.linalg.norm(partial, axis=1))), s.R, None
    i = next(k for k, q in enumerate(scheme.profiles) if q is p)
    ell = np.arange(s.R + 1)
    path = p.path
    if isinstance(path, StepPath):
        idx = np.searchsorted(path.times, ell / s.R, side="right")
        prof = value_sequence(path)[idx]
    else:
        prof = np.stack([np.interp(ell / s.R, path.times, path.values[:, k])
                         for k in range(path.dim)], axis=1)
    main = lambdas[i] * prof * s.R
    return float(np.max(np.linalg.norm(partial - main, axis=1))), s.R, i


def residual_exponent(R, residuals) -> float:
    """Least-squares slope of ``log(residual)`` against ``log(R)``."""
    R = np.asarray(R, dtype=float)
    r = np.asarray(residuals, dtype=float)
    ok = (R > 0) & (r > 0)
    return float(np.polyfit(np.log(R[ok]), np.log(r[ok]), 1)[0])


def wn_endpoints(scheme: InducedScheme, n: int, count: int, rng: np.random.Generator,
                 start: str = "M") -> np.ndarray:
    """``count`` independent draws of ``W_n(1)``, shape (count, d)."""
    b = bn(scheme, n)
    out = np.empty((count, scheme.dim))
    for i in range(count):
        orb = sample_orbit(scheme, n - 1, rng, start=start)
        out[i] = scheme.observable(orb.points).sum(axis=0) / b
    return out
