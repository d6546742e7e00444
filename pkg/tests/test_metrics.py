import numpy as np
import pytest
from hypothesis import given, strategies as st

from decolevy.metrics import (
    MetricResult,
    classify_profile_mode,
    d_J1_bracket,
    d_M2,
    d_tildeD,
    frechet_values,
    hausdorff,
    sup_distance,
)
from decolevy.paths import (
    GraphSet,
    PolylinePath,
    Profile,
    StepPath,
)
from hausdorff_cases import HAUSDORFF_CASES, seg
from oracles import brute_force_dtilde, compose, point_segment_distance, sup_gap
from strategies import step_paths


# ---------------------------------------------------------------------------
# d_tildeD


def test_dtilde_examples():
    a = StepPath([0.0], [0.5], [[1.0]])
    b = StepPath([0.0], [0.2], [[0.9]])
    assert d_tildeD(a, b).value == pytest.approx(0.1)
    assert d_tildeD(a, b).method == "exact"
    # an up-down excursion cannot be matched by a constant path
    c = StepPath([0.0], [0.3, 0.6], [[1.0], [0.0]])
    assert d_tildeD(c, StepPath([0.0])).value == pytest.approx(1.0)


def test_dtilde_terminal_jump_only_faces_value_at_one():
    # same value sequence, but one path reaches 1 only at t = 1
    a = StepPath([0.0], [0.5], [[1.0]])
    b = StepPath([0.0], [1.0], [[1.0]])
    assert d_tildeD(a, b).value == pytest.approx(1.0)
    assert d_tildeD(b, b).value == 0.0


def test_dtilde_reparametrization_invariance_example():
    a = StepPath([0.0], [0.1, 0.4, 0.9], [[2.0], [-1.0], [0.5]])
    b = compose(a, [0.0, 0.1, 0.4, 0.9, 1.0], [0.0, 0.5, 0.6, 0.61, 1.0])
    assert d_tildeD(a, b).value == 0.0


@given(step_paths(), step_paths())
def test_dtilde_symmetric_and_below_sup(u, v):
    d1 = d_tildeD(u, v).value
    assert d1 == pytest.approx(d_tildeD(v, u).value)
    assert d1 <= sup_distance(u, v) + 1e-12
    assert d1 <= sup_gap(u, v) + 1e-12


@given(step_paths(), step_paths(), step_paths())
def test_dtilde_triangle_inequality(u, v, w):
    assert d_tildeD(u, w).value <= d_tildeD(u, v).value + d_tildeD(v, w).value + 1e-9


@given(step_paths(max_jumps=5, terminal=False), st.data())
def test_dtilde_zero_on_reparametrization_orbit(u, data):
    k = u.times.size
    new = sorted(set(data.draw(st.lists(st.floats(0.01, 0.99), min_size=k, max_size=k))))
    if len(new) != k:
        return
    w = compose(u, np.r_[0.0, u.times, 1.0], np.r_[0.0, new, 1.0])
    assert d_tildeD(u, w).value == 0.0


@given(step_paths(max_jumps=4), step_paths(max_jumps=4), st.integers(0, 2**31 - 1))
def test_dtilde_not_above_brute_force(u, v, seed):
    assert d_tildeD(u, v).value <= brute_force_dtilde(u, v, 200, seed) + 1e-12


def test_dtilde_polyline_is_sampled_with_error_bound():
    p = PolylinePath([0.0, 0.5, 1.0], [[0.0], [1.0], [0.0]])
    s = StepPath([0.0], [0.5], [[1.0]])
    r = d_tildeD(p, s, 1e-3)
    assert r.method == "sampled" and r.error_bound == pytest.approx(5e-4)
    # true distance: the polyline returns to 0 while the step path stays at 1
    assert abs(r.value - 1.0) <= r.error_bound + 1e-12
    with pytest.raises(ValueError):
        d_tildeD(p, s)


def test_frechet_values_example():
    assert frechet_values([[0.0], [1.0], [2.0]], [[0.0], [2.0]]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        frechet_values(np.empty((0, 1)), [[0.0]])


# ---------------------------------------------------------------------------
# Hausdorff


@pytest.mark.parametrize("A,B,true", HAUSDORFF_CASES)
def test_hausdorff_known_distances(A, B, true):
    r = hausdorff(A, B, 1e-3)
    assert r.method == "sampled" and r.error_bound == 5e-4
    assert abs(r.value - true) <= r.error_bound + 1e-7
    # the value is a lower bound
    assert r.value <= true + 1e-9


def test_hausdorff_error_bound_halves():
    A, B = HAUSDORFF_CASES[8][:2]
    r1, r2 = hausdorff(A, B, 0.02), hausdorff(A, B, 0.01)
    assert r2.error_bound == pytest.approx(r1.error_bound / 2)
    assert abs(r2.value - r1.value) <= r1.error_bound


def test_hausdorff_errors():
    with pytest.raises(ValueError):
        hausdorff(GraphSet(), seg([0, 0], [1, 0]), 0.1)
    with pytest.raises(ValueError):
        hausdorff(seg([0, 0], [1, 0]), seg([0, 0], [1, 0]), 0.0)
    with pytest.raises(ValueError):
        hausdorff(seg([0, 0], [1, 0]), seg([0, 0, 0], [1, 0, 0]), 0.1)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(-2, 2)), min_size=2, max_size=5),
       st.lists(st.tuples(st.floats(0, 1), st.floats(-2, 2)), min_size=2, max_size=5))
def test_hausdorff_against_dense_oracle(pa, pb):
    A, B = seg(*pa), seg(*pb)
    r = hausdorff(A, B, 0.01)

    def directed(P, Q):
        worst = 0.0
        for i in range(len(P) - 1):
            for s in np.linspace(0, 1, 201):
                x = (1 - s) * np.array(P[i]) + s * np.array(P[i + 1])
                worst = max(worst, min(point_segment_distance(x, Q[j], Q[j + 1])
                                       for j in range(len(Q) - 1)))
        return worst

    dense = max(directed(pa, pb), directed(pb, pa))
    # both are lower bounds of the truth; each misses it by at most its sampling radius
    seglen = max(np.hypot(pa[i + 1][0] - pa[i][0], pa[i + 1][1] - pa[i][1]) for i in range(len(pa) - 1))
    seglen = max(seglen, max(np.hypot(pb[i + 1][0] - pb[i][0], pb[i + 1][1] - pb[i][1])
                             for i in range(len(pb) - 1)))
    dense_err = seglen / 400
    assert r.value <= dense + dense_err + 1e-9
    assert dense <= r.value + r.error_bound + 1e-9


@given(step_paths(max_jumps=4), step_paths(max_jumps=4))
def test_m2_below_j1_bracket(u, v):
    delta = 1e-2
    lo, hi = d_J1_bracket(u, v)
    assert d_M2(u, v, delta).value <= hi + delta / 2 + 1e-9


# ---------------------------------------------------------------------------
# J1 bracket


def test_j1_bracket_examples():
    a = StepPath([0.0], [0.5], [[1.0]])
    assert d_J1_bracket(a, StepPath([0.0], [0.6], [[1.0]])) == pytest.approx((0.1, 0.2))
    assert d_J1_bracket(a, StepPath([0.0])) == pytest.approx((1.0, 2.0))


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-2, 2), st.floats(-2, 2))
def test_j1_bracket_contains_single_jump_distance(s, t, a, b):
    # one jump each: align the jumps (cost max(|s-t|, |a-b|) summed) or leave them unaligned
    u = StepPath([0.0], [s], [[a]])
    v = StepPath([0.0], [t], [[b]])
    aligned = abs(s - t) + abs(a - b)
    unaligned = max(abs(a), abs(b), abs(a - b))
    true = min(aligned, unaligned) if s != t else abs(a - b)
    lo, hi = d_J1_bracket(u, v)
    assert lo <= true + 1e-12 and true <= hi + 1e-12


# ---------------------------------------------------------------------------
# classifier


def test_classifier_labels():
    m1 = Profile(StepPath([0.0], [0.3, 0.6], [[0.5], [1.0]]))
    m2 = Profile(StepPath([0.0], [0.3, 0.6, 0.9], [[0.8], [0.2], [1.0]]))
    over = Profile(StepPath([0.0], [0.3, 0.6], [[1.2], [1.0]]))
    off = Profile(PolylinePath([0.0, 0.5, 1.0], [[0.0, 0.0], [0.5, 0.3], [1.0, 0.0]]))
    below = Profile(StepPath([0.0], [0.3, 0.6], [[-0.1], [1.0]]))
    assert classify_profile_mode(m1) == "M1"
    assert classify_profile_mode(m2) == "M2"
    assert classify_profile_mode(over) == "NONE"
    assert classify_profile_mode(off) == "NONE"
    assert classify_profile_mode(below) == "NONE"


def test_metric_result_validation():
    with pytest.raises(ValueError):
        MetricResult(-1.0, 0.0, "exact")
    with pytest.raises(ValueError):
        MetricResult(1.0, 0.0, "guess")
