import numpy as np
import pytest
from hypothesis import given, strategies as st

from decolevy.fprime import (
    Decorated,
    chi,
    d_Fprime,
    decorate_levy,
    decorated_from_dict,
    decorated_to_dict,
    embed_step_trivial,
    nearest_profile,
    pi_D,
    pi_E,
    psi_max,
)
from decolevy.metrics import d_tildeD
from decolevy.paths import PolylinePath, Profile, StepPath, evaluate, value_sequence
from decolevy.stable import SpectralMeasure, sample_path
from strategies import step_paths

P_UP = Profile(StepPath([0.0], [0.5], [[1.0]]))
P_DOWN = Profile(StepPath([0.0], [0.5], [[-1.0]]))
P_OVER = Profile(StepPath([0.0], [0.4, 0.8], [[1.5], [1.0]]))


def _one_jump():
    u = StepPath([0.0], [0.5], [[1.0]])
    e = StepPath([0.0], [0.3, 0.6], [[2.0], [1.0]])
    return Decorated(u, [0.5], [e])


def test_decorated_validation():
    u = StepPath([0.0], [0.5], [[1.0]])
    with pytest.raises(ValueError):
        Decorated(u, [], [])
    with pytest.raises(ValueError):
        Decorated(u, [0.5], [StepPath([0.0], [0.5], [[0.7]])])
    with pytest.raises(ValueError):
        Decorated(u, [0.5, 1.0], [StepPath([0.0], [0.5], [[1.0]]), StepPath([1.0])])
    # extra times in S carry constant excursions
    x = Decorated(u, [0.2, 0.5], [StepPath([0.0]), StepPath([0.0], [0.5], [[1.0]])])
    assert x.S.tolist() == [0.2, 0.5]


def test_pi_E_boxes():
    e = pi_E(_one_jump())
    assert e.lo[0, 0] == 0.0 and e.hi[0, 0] == 2.0


def test_pi_D_splices_excursion_values():
    x = _one_jump()
    spliced = pi_D(x)
    assert np.array_equal(value_sequence(spliced)[:, 0], [0.0, 2.0, 1.0])
    assert pi_D(Decorated(StepPath([0.0]), [], [])).u0[0] == 0.0


def test_pi_D_reparametrized_excursions_are_at_distance_zero():
    x = _one_jump()
    e2 = StepPath([0.0], [0.05, 0.99], [[2.0], [1.0]])
    y = Decorated(x.u, [0.5], [e2])
    assert d_tildeD(pi_D(x), pi_D(y)).value == 0.0


def test_d_Fprime_detects_overshoot_difference():
    x = _one_jump()
    y = Decorated(x.u, [0.5], [StepPath([0.0], [0.5], [[1.0]])])
    r = d_Fprime(x, y, 1e-3)
    # box height differs by 1 and the spliced paths differ by 1
    assert abs(r.value - 2.0) <= r.error_bound + 1e-9
    assert d_Fprime(x, x, 1e-3).value == 0.0


def test_nearest_profile_ties_and_zero():
    assert nearest_profile([-3.2], [P_UP, P_DOWN]) is P_DOWN
    assert nearest_profile([0.0], [P_UP, P_DOWN]) is None
    a = Profile(StepPath([0.0, 0.0], [0.5], [[1.0, 0.0]]))
    b = Profile(StepPath([0.0, 0.0], [0.5], [[0.0, 1.0]]))
    assert nearest_profile([2.0, 1.0], [a, b]) is a
    assert nearest_profile([1.0, 1.0], [a, b]) is None


@given(step_paths(terminal=False))
def test_chi_endpoints_exact(u):
    x = chi(u, [P_OVER, P_DOWN])
    for tau, e in zip(x.S, x.excursions):
        assert np.array_equal(evaluate(e, 0.0), evaluate(u, tau, "left"))
        assert np.array_equal(evaluate(e, 1.0), evaluate(u, tau))


def test_chi_overshoot_span():
    u = StepPath([0.0], [0.5], [[2.0]])
    x = chi(u, [P_OVER])
    assert pi_E(x).hi[0, 0] == pytest.approx(3.0)


@given(st.integers(1, 12), st.data())
def test_psi_of_trivial_embedding_is_running_max(n, data):
    vals = data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
    w = StepPath([0.0], np.arange(1, n + 1) / n, np.array(vals)[:, None])
    m = psi_max(embed_step_trivial(w, n))
    run = np.maximum.accumulate(value_sequence(w)[:, 0])
    for t in np.linspace(0, 1, 4 * n + 1):
        k = np.searchsorted(w.times, t, side="right")
        assert evaluate(m, t)[0] == pytest.approx(run[k])


def test_embed_rejects_off_grid_jumps():
    with pytest.raises(ValueError):
        embed_step_trivial(StepPath([0.0], [0.33], [[1.0]]), 4)


def test_decorate_levy_preserves_jump_sizes():
    rng = np.random.default_rng(3)
    nu = SpectralMeasure.symmetric()
    L = sample_path(0.75, nu, 50, 20, rng)
    x = decorate_levy(L, [P_OVER, Profile(StepPath([0.0], [0.4, 0.8], [[-1.5], [-1.0]]))])
    for tau, e in zip(x.S, x.excursions):
        jump = evaluate(L.realized, tau) - evaluate(L.realized, tau, "left")
        assert np.linalg.norm(evaluate(e, 1.0) - evaluate(e, 0.0)) == pytest.approx(np.linalg.norm(jump))


def test_decorated_json_round_trip():
    x = chi(StepPath([0.0], [0.2, 0.7], [[1.0], [-1.0]]), [P_OVER, P_DOWN])
    y = decorated_from_dict(decorated_to_dict(x))
    assert np.array_equal(y.S, x.S)
    assert d_Fprime(x, y, 1e-3).value == pytest.approx(0.0, abs=1e-12)


def test_polyline_excursions_need_delta():
    u = StepPath([0.0], [0.5], [[1.0]])
    x = Decorated(u, [0.5], [PolylinePath([0.0, 1.0], [[0.0], [1.0]])])
    with pytest.raises(ValueError):
        pi_D(x)
    assert pi_D(x, 0.01).has_terminal_jump is False


def test_shift_distance_pays_the_last_increment_before_one():
    # On [(n-1)/n, 1) the shifted and unshifted processes differ by v(T^{n-1} x) - v(x); the pinned
    # terminal jump forces d_tildeD to pay it, so the bound must use max(|v|(T^{n-1}x), |v|(T^n x)).
    from decolevy.dynamics import Orbit, bn, doubling_scheme, sample_orbit, wn_path

    s = doubling_scheme(0.75)
    rng = np.random.default_rng(1)
    n = 200
    b = bn(s, n)
    for _ in range(20):
        orb = sample_orbit(s, n + 1, rng)
        w0, _ = wn_path(s, Orbit(orb.points[: n + 1], orb.in_X[: n + 1]), n)
        w1, _ = wn_path(s, Orbit(orb.points[1:], orb.in_X[1:]), n)
        v = s.observable(orb.points[[0, n - 1, n]])[:, 0]
        x, y = embed_step_trivial(w1, n), embed_step_trivial(w0, n)
        assert d_tildeD(pi_D(x), pi_D(y)).value >= abs(v[1] - v[0]) / b - 1e-12
        bound = 1 / n + 2 / b * (abs(v[0]) + max(abs(v[1]), abs(v[2])))
        r = d_Fprime(x, y, 0.02 / n)
        assert r.value + r.error_bound <= bound
