"""Stable laws with finitely supported spectral measure.

The characteristic exponent of ``G`` with index ``alpha`` and spectral
measure ``nu = sum_i a_i delta_{omega_i}`` is

    -sum_i a_i |s.omega_i|^alpha (1 - i sgn(s.omega_i) tan(pi alpha/2))
        cos(pi alpha/2) Gamma(1 - alpha),

which is the exponent of a Levy measure ``nu(d omega) alpha r^(-alpha-1) dr``
(compensated when ``alpha > 1``).  Marginals are sums of independent
totally skewed scalar stables along the atoms; paths come from a LePage
series with the truncated small jumps replaced by their mean and, for
``alpha > 1``, a Gaussian of matching covariance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .paths import StepPath, path_from_dict, path_to_dict

__all__ = [
    "SpectralMeasure",
    "LevyPath",
    "char_fn",
    "sample_marginal",
    "sample_path",
    "path_endpoints",
    "hill_estimator",
    "ks_two_sample",
    "scale_constant",
    "levy_to_dict",
    "levy_from_dict",
]


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Atoms ``omega_i`` (unit vectors, rows) with weights ``a_i`` summing to 1."""

    directions: np.ndarray
    weights: np.ndarray

    def __init__(self, directions, weights):
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        if directions.shape[0] == 1 and np.ndim(weights) == 1 and len(weights) > 1:
            directions = directions.T
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if directions.shape[0] != weights.size:
            raise ValueError("one weight per direction")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(np.abs(np.linalg.norm(directions, axis=1) - 1.0) > 1e-12):
            raise ValueError("directions must be unit vectors")
        if len({tuple(r) for r in directions}) != directions.shape[0]:
            raise ValueError("directions must be distinct")
        directions.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def mean_direction(self) -> np.ndarray:
        return self.weights @ self.directions

    @classmethod
    def from_dict(cls, obj) -> "SpectralMeasure":
        atoms = obj["atoms"] if isinstance(obj, dict) else obj
        return cls([a["omega"] for a in atoms], [a["weight"] for a in atoms])

    def to_dict(self) -> dict:
        return {"atoms": [{"omega": [float(x) for x in w], "weight": float(a)}
                          for w, a in zip(self.directions, self.weights)]}

    @classmethod
    def one_sided(cls) -> "SpectralMeasure":
        return cls([[1.0]], [1.0])

    @classmethod
    def symmetric(cls) -> "SpectralMeasure":
        return cls([[1.0], [-1.0]], [0.5, 0.5])


def _check_alpha(alpha):
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if alpha == 1:
        raise ValueError("alpha = 1 is not supported")


def scale_constant(alpha: float) -> float:
    """``Gamma(1 - alpha) cos(pi alpha / 2)``, positive for alpha != 1."""
    _check_alpha(alpha)
    return math.gamma(1 - alpha) * math.cos(math.pi * alpha / 2)


def char_fn(alpha: float, nu: SpectralMeasure, s) -> np.ndarray | complex:
    """Characteristic function ``E exp(i s.G)`` at one or several points ``s``."""
    const = scale_constant(alpha)
    s = np.asarray(s, dtype=float)
    single = s.ndim == 0 or (s.ndim == 1 and s.size == nu.dim)
    pts = s.reshape(-1, nu.dim)
    proj = pts @ nu.directions.T
    tan = math.tan(math.pi * alpha / 2)
    terms = np.abs(proj) ** alpha * (1 - 1j * np.sign(proj) * tan)
    out = np.exp(-const * terms @ nu.weights)
    return complex(out[0]) if single else out


def sample_marginal(alpha: float, nu: SpectralMeasure, rng: np.random.Generator, size=None):
    """Draws of ``G`` as a sum of skewed scalar stables along the atoms.

    Returns shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
    """
    const = scale_constant(alpha)
    n = 1 if size is None else int(size)
    out = np.zeros((n, nu.dim))
    for omega, a in zip(nu.directions, nu.weights):
        scale = (a * const) ** (1 / alpha)
        draws = stats.levy_stable.rvs(alpha, 1.0, loc=0.0, scale=scale, size=n, random_state=rng)
        out += draws[:, None] * omega[None, :]
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class LevyPath:
    """Sampled stable path on ``[0, 1]``.

    ``jump_times``, ``jump_sizes`` and ``jump_index`` list the series jumps
    (size times ``spectral.directions[index]``).  The remaining small-jump
    part is carried by ``grid_values``, its value at ``j / m`` for
    ``j = 0..m``.  ``realized`` adds both: a step path whose jumps are the
    listed jumps and the grid increments.
    """

    alpha: float
    spectral: SpectralMeasure
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    jump_index: np.ndarray
    grid_values: np.ndarray
    threshold: float
    realized: StepPath = field(repr=False)


def _series(alpha, nu, K, rng, n):
    """Series jumps for ``n`` independent paths: sizes (n, K), directions (n, K)."""
    gam = np.cumsum(rng.exponential(size=(n, K)), axis=1)
    sizes = gam ** (-1.0 / alpha)
    idx = rng.choice(nu.weights.size, size=(n, K), p=nu.weights)
    return sizes, idx, sizes[:, -1]


def _small_jump_moments(alpha, nu, eps):
    """Mean vector and covariance of the omitted jumps below ``eps`` on [0, 1].

    For ``alpha < 1`` the mean of the jumps themselves; for ``alpha > 1``
    the compensator of the listed large jumps, which is minus their mean.
    """
    eps = np.asarray(eps, dtype=float)
    w = nu.mean_direction
    if alpha < 1:
        mean = (alpha / (1 - alpha)) * eps ** (1 - alpha)
    else:
        mean = -(alpha / (alpha - 1)) * eps ** (1 - alpha)
    var = (alpha / (2 - alpha)) * eps ** (2 - alpha)
    cov = (nu.directions.T * nu.weights) @ nu.directions
    return mean[..., None] * w, var, cov


def path_endpoints(alpha: float, nu: SpectralMeasure, K: int, rng: np.random.Generator,
                   size: int, chunk: int = 256) -> np.ndarray:
    """Values at ``t = 1`` of ``size`` independent series paths, shape (size, d)."""
    _check_alpha(alpha)
    out = np.empty((size, nu.dim))
    for start in range(0, size, chunk):
        n = min(chunk, size - start)
        sizes, idx, eps = _series(alpha, nu, K, rng, n)
        tot = np.zeros((n, nu.dim))
        for i, omega in enumerate(nu.directions):
            tot += np.where(idx == i, sizes, 0.0).sum(axis=1)[:, None] * omega
        mean, var, cov = _small_jump_moments(alpha, nu, eps)
        tot += mean
        if alpha > 1:
            L = np.linalg.cholesky(cov + 1e-300 * np.eye(nu.dim))
            tot += (rng.standard_normal((n, nu.dim)) @ L.T) * np.sqrt(var)[:, None]
        out[start:start + n] = tot
    return out


def sample_path(alpha: float, nu: SpectralMeasure, K: int, m: int,
                rng: np.random.Generator) -> LevyPath:
    """LePage series path with ``K`` listed jumps and an ``m``-cell grid part.

    Jump sizes are ``Gamma_k^(-1/alpha)`` for the arrival times ``Gamma_k`` of
    a unit Poisson process, with uniform times and i.i.d. directions from
    ``nu``.  Jumps below the smallest listed size are replaced by their
    mean drift (all alpha) plus, for ``alpha > 1``, a Brownian part of the
    same covariance, both sampled on the grid ``j / m``.
    """
    _check_alpha(alpha)
    if K < 1 or m < 1:
        raise ValueError("K and m must be positive")
    sizes, idx, eps = _series(alpha, nu, K, rng, 1)
    sizes, idx, eps = sizes[0], idx[0], float(eps[0])
    times = rng.random(K)
    order = np.argsort(times)
    times, sizes, idx = times[order], sizes[order], idx[order]
    mean, var, cov = _small_jump_moments(alpha, nu, eps)
    grid_t = np.arange(m + 1) / m
    grid = grid_t[:, None] * mean[None, :]
    if alpha > 1:
        L = np.linalg.cholesky(cov + 1e-300 * np.eye(nu.dim))
        incr = rng.standard_normal((m, nu.dim)) @ L.T * math.sqrt(var / m)
        grid[1:] += np.cumsum(incr, axis=0)
    # merge listed jumps and grid increments into one step path
    jumps = sizes[:, None] * nu.directions[idx]
    all_t = np.r_[times, grid_t[1:]]
    all_d = np.vstack([jumps, np.diff(grid, axis=0)])
    o = np.argsort(all_t, kind="stable")
    all_t, all_d = all_t[o], all_d[o]
    keep = np.r_[all_t[1:] != all_t[:-1], True]
    vals = np.cumsum(all_d, axis=0)
    realized = StepPath(np.zeros(nu.dim), all_t[keep], vals[keep])
    return LevyPath(alpha, nu, times, sizes, idx, grid, eps, realized)


def levy_to_dict(L: LevyPath) -> dict:
    """JSON object with the jump list, grid part and realized path."""
    return {
        "alpha": float(L.alpha),
        "spectral": L.spectral.to_dict(),
        "threshold": float(L.threshold),
        "jumps": [{"t": float(t), "size": float(r), "atom": int(i)}
                  for t, r, i in zip(L.jump_times, L.jump_sizes, L.jump_index)],
        "grid": L.grid_values.tolist(),
        "path": path_to_dict(L.realized),
    }


def levy_from_dict(obj: dict) -> LevyPath:
    jumps = obj["jumps"]
    return LevyPath(
        float(obj["alpha"]),
        SpectralMeasure.from_dict(obj["spectral"]),
        np.array([j["t"] for j in jumps], dtype=float),
        np.array([j["size"] for j in jumps], dtype=float),
        np.array([j["atom"] for j in jumps], dtype=np.int64),
        np.asarray(obj["grid"], dtype=float),
        float(obj["threshold"]),
        path_from_dict(obj["path"]),
    )


# ---------------------------------------------------------------------------
# diagnostics


def hill_estimator(samples, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest samples.

    Raises
    ------
    ValueError
        On nonpositive samples or ``k`` not below the sample count.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    if not 1 <= k < x.size:
        raise ValueError("need 1 <= k < number of samples")
    top = np.sort(x)[::-1][: k + 1]
    h = float(np.mean(np.log(top[:k])) - np.log(top[k]))
    if h <= 0:
        warnings.warn("degenerate tail: Hill statistic is zero", RuntimeWarning)
        return 0.0
    return 1.0 / h


def ks_two_sample(xs, ys) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise ValueError("empty sample")
    res = stats.ks_2samp(xs, ys, method="asymp")
    return float(res.statistic), float(res.pvalue)
