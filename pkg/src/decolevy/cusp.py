"""Excursion profiles attached to flat cusps of a billiard table.

A profile is built from the boundary traces ``v_plus(theta)`` and
``v_minus(theta)`` of the observable at the two sides of a cusp:

    P(t) ~ 1/2 int_0^{pi t} {v_plus(theta) + v_minus(pi - theta)} sin(theta)^{1/alpha} dtheta,

normalized so that ``|P(1)| = 1``.  The variable ``t`` in ``[0, 1]`` runs
over ``theta = pi t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .metrics import classify_profile_mode
from .paths import PolylinePath, Profile

__all__ = [
    "CuspData",
    "DegenerateProfileError",
    "cusp_profile",
    "cusp_integral",
    "quadrature_error",
    "classify_cusp",
    "mode_traces",
    "read_traces_csv",
]

DEGENERATE_TOL = 1e-8


class DegenerateProfileError(ValueError):
    """The cusp integral vanishes at ``t = 1``, so no profile can be normalized."""


@dataclass(frozen=True, eq=False)
class CuspData:
    """Cusp exponent and boundary traces tabulated on a common grid of ``[0, pi]``.

    Parameters
    ----------
    alpha : float
        Tail index ``beta / (beta - 1)``, in ``(1, 2)``.
    theta : array (k,)
        Increasing grid from 0 to pi.
    v_plus, v_minus : array (k, d)
    """

    alpha: float
    theta: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray

    def __post_init__(self):
        if not 1 < self.alpha < 2:
            raise ValueError("alpha must lie in (1, 2)")
        theta = np.asarray(self.theta, dtype=float)
        vp = np.asarray(self.v_plus, dtype=float)
        vm = np.asarray(self.v_minus, dtype=float)
        vp = vp[:, None] if vp.ndim == 1 else vp
        vm = vm[:, None] if vm.ndim == 1 else vm
        if theta.ndim != 1 or theta.size < 2 or np.any(np.diff(theta) <= 0):
            raise ValueError("theta must be a strictly increasing grid")
        if abs(theta[0]) > 1e-12 or abs(theta[-1] - math.pi) > 1e-9:
            raise ValueError("theta grid must run from 0 to pi")
        if vp.shape != vm.shape or vp.shape[0] != theta.size:
            raise ValueError("traces must be tabulated on the theta grid with equal shapes")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "v_plus", vp)
        object.__setattr__(self, "v_minus", vm)

    @classmethod
    def from_beta(cls, beta: float, theta, v_plus, v_minus) -> "CuspData":
        if not beta > 2:
            raise ValueError("beta must exceed 2")
        return cls(beta / (beta - 1), theta, v_plus, v_minus)

    @property
    def dim(self) -> int:
        return self.v_plus.shape[1]


def cusp_integral(data: CuspData, m: int):
    """Unnormalized profile on ``m + 1`` uniform points of ``t``.

    Returns
    -------
    t : array (m+1,)
    values : array (m+1, d)
    """
    if m < 8:
        raise ValueError("need at least 8 quadrature cells")
    t = np.linspace(0.0, 1.0, m + 1)
    theta = math.pi * t
    weight = np.sin(theta) ** (1.0 / data.alpha)
    weight[-1] = 0.0
    cols = []
    for k in range(data.dim):
        vp = np.interp(theta, data.theta, data.v_plus[:, k])
        vm = np.interp(math.pi - theta, data.theta, data.v_minus[:, k])
        cols.append(0.5 * cumulative_trapezoid((vp + vm) * weight, theta, initial=0.0))
    return t, np.stack(cols, axis=1)


def quadrature_error(data: CuspData, m: int) -> float:
    """Richardson estimate of the trapezoid error in the unnormalized ``P(1)``.

    The weight ``sin^{1/alpha}`` is not smooth at 0 and pi, so the error
    decays like ``h^q`` with ``q = 1 + 1/alpha`` rather than ``h^2``.
    """
    q = min(2.0, 1.0 + 1.0 / data.alpha)
    fine = cusp_integral(data, 2 * m)[1][-1]
    coarse = cusp_integral(data, m)[1][-1]
    return float(np.linalg.norm(fine - coarse) / (1.0 - 2.0 ** -q))


def cusp_profile(data: CuspData, m: int = 2048) -> Profile:
    """Normalized cusp profile as a polyline on ``m`` cells.

    Raises
    ------
    DegenerateProfileError
        If ``|P(1)| < 1e-8`` before normalization.
    """
    t, vals = cusp_integral(data, m)
    end = float(np.linalg.norm(vals[-1]))
    if end < DEGENERATE_TOL:
        raise DegenerateProfileError(f"|P(1)| = {end:.3e} is below {DEGENERATE_TOL}")
    return Profile(PolylinePath(t, vals / end))


def classify_cusp(data: CuspData, m: int = 2048) -> str:
    """Convergence mode of the cusp profile, with tolerance from the quadrature error."""
    t, vals = cusp_integral(data, m)
    end = float(np.linalg.norm(vals[-1]))
    if end < DEGENERATE_TOL:
        raise DegenerateProfileError(f"|P(1)| = {end:.3e} is below {DEGENERATE_TOL}")
    tol = max(quadrature_error(data, m) / end, 1e-9)
    return classify_profile_mode(Profile(PolylinePath(t, vals / end)), tol=tol)


def mode_traces(alpha: float = 1.5, k: int = 1025) -> dict:
    """Three trace sets with the three convergence modes.

    ``"a"``: constant positive traces, monotone profile (M1).
    ``"b"``: ``cos(2 theta) + 1/2`` on both sides; the profile rises, dips
    back to 0 without going negative and ends at its maximum (M2).
    ``"c"``: ``cos(theta) + 0.3`` on one side; the profile peaks above its
    final value (NONE).

    Returns
    -------
    dict
        name -> (CuspData, expected label)
    """
    theta = np.linspace(0.0, math.pi, k)
    one = np.ones(k)
    b = np.cos(2 * theta) + 0.5
    return {
        "a": (CuspData(alpha, theta, one, one), "M1"),
        "b": (CuspData(alpha, theta, b, b), "M2"),
        "c": (CuspData(alpha, theta, np.cos(theta) + 0.3, np.zeros(k)), "NONE"),
    }


def read_traces_csv(path, beta: float) -> CuspData:
    """Read ``theta, v_plus_1..v_plus_d, v_minus_1..v_minus_d`` columns."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] < 3 or arr.shape[1] % 2 == 0:
        raise ValueError("traces CSV needs theta plus an equal number of v_plus and v_minus columns")
    d = (arr.shape[1] - 1) // 2
    return CuspData.from_beta(beta, arr[:, 0], arr[:, 1:1 + d], arr[:, 1 + d:])
