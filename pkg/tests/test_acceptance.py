"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every statistical check runs once at a fixed seed (seed 0 unless stated).
"""

import math
import time

import numpy as np
import pytest

from decolevy import cusp, stable
from decolevy.dynamics import Orbit, bn, doubling_scheme, induced_values, lsv_scheme, sample_orbit, \
    tripling_scheme, wn_path
from decolevy.fprime import d_Fprime, embed_step_trivial
from decolevy.harness import ExperimentConfig, run_experiment
from decolevy.metrics import d_tildeD, hausdorff
from decolevy.paths import StepPath
from hausdorff_cases import HAUSDORFF_CASES
from oracles import brute_force_dtilde

pytestmark = pytest.mark.acceptance


def _run(**cfg):
    return run_experiment(ExperimentConfig.from_dict({"name": "acceptance", **cfg}))


def _random_step_path(rng):
    k = int(rng.integers(0, 7))
    times = np.sort(rng.choice(np.arange(1, 1000), size=k, replace=False)) / 1000
    return StepPath([rng.normal()], times, rng.normal(size=(k, 1)))


def test_c01_metric_oracle_equivalence(criterion):
    rng = np.random.default_rng(0)
    brute_force_dtilde(StepPath([0.0]), StepPath([0.0]), 1, 0)  # compile outside the clock
    t0 = time.perf_counter()
    below, gap = 0, 0.0
    for i in range(200):
        u, v = _random_step_path(rng), _random_step_path(rng)
        dp = d_tildeD(u, v).value
        brute = brute_force_dtilde(u, v, 10_000, i)
        below += dp <= brute + 1e-12
        gap = max(gap, brute - dp)
    elapsed = time.perf_counter() - t0
    ok = below == 200 and gap <= 0.02 and elapsed < 60
    assert criterion(1, ok, f"DP <= brute on {below}/200 pairs, max(brute - DP) = {gap:.2e}, "
                            f"{elapsed:.1f} s")


def test_c02_hausdorff_certification(criterion):
    worst, halves = 0.0, True
    for A, B, true in HAUSDORFF_CASES:
        r = hausdorff(A, B, 1e-3)
        worst = max(worst, abs(r.value - true) - r.error_bound)
        r2 = hausdorff(A, B, 5e-4)
        halves &= r2.error_bound == r.error_bound / 2 and abs(r2.value - true) <= r2.error_bound + 1e-9
    ok = len(HAUSDORFF_CASES) == 20 and worst <= 1e-9 and halves
    assert criterion(2, ok, f"{len(HAUSDORFF_CASES)} pairs, max(|err| - delta/2) = {worst:.1e}, "
                            f"halving delta halves the bound: {halves}")


def test_c03_kac_and_lap_numbers(criterion):
    d = _run(kind="lapnumber", map="doubling", alpha=0.75, n=[10**6], seeds=100)
    t = _run(kind="lapnumber", map="tripling", alpha=0.5, n=[10**6], seeds=100)
    dR = np.array([r.value for r in d.records if r.statistic == "mean_R" and r.seed != "all"])
    dN = np.array([r.value for r in d.records if r.statistic == "laps_per_n" and r.seed != "all"])
    tN = np.array([r.value for r in t.records if r.statistic == "laps_per_n" and r.seed != "all"])
    dev = (np.max(np.abs(dR - 2)), np.max(np.abs(dN - 0.5)), np.max(np.abs(tN - 7 / 9)))
    ok = dR.size == dN.size == tN.size == 100 and max(dev) <= 0.02
    assert criterion(3, ok, f"100 seeds at n=1e6; worst deviations E[R]: {dev[0]:.4f}, "
                            f"doubling N/n: {dev[1]:.4f}, tripling N/n: {dev[2]:.4f}")


def test_c04_marginal_stable_convergence(criterion):
    out = {}
    for name, alpha in (("doubling", 0.75), ("tripling", 0.5)):
        t0 = time.perf_counter()
        res = _run(kind="marginal-ks", map=name, alpha=alpha, n=[10**5], samples=5000)
        out[name] = (res.values("ks")[0], time.perf_counter() - t0)
    ok = all(ks <= 0.05 and sec <= 600 for ks, sec in out.values())
    detail = ", ".join(f"{k} KS = {v[0]:.4f} ({v[1]:.0f} s)" for k, v in out.items())
    assert criterion(4, ok, detail)


def test_c05_overshoot(criterion):
    res = _run(kind="overshoot", map="tripling", alpha=0.5, n=[10**6], params={"quantile": 0.9})
    ratio = res.values("span_ratio")[0]
    ok = abs(ratio - 10 / 9) <= 0.03
    assert criterion(5, ok, f"median span/jump over the top decile = {ratio:.4f} (target 10/9)")


def test_c06_excursion_shape(criterion):
    d = _run(kind="excursion-shape", map="doubling", alpha=0.75, n=[10**5],
             params={"R_range": [10, 30], "head": 1000})
    t = _run(kind="excursion-shape", map="tripling", alpha=0.5, n=[10**5], params={"head": 1000})
    gd, gt = d.values("growth_ratio")[0], t.values("growth_ratio")[0]
    ok = gd <= 2 and gt <= 2
    assert criterion(6, ok, f"max over 1e5 / max over first 1e3: doubling d = {gd:.3f}, "
                            f"tripling d/R = {gt:.3f}")


def test_c07_hypothesis_trend(criterion):
    meds = {}
    for name, alpha in (("doubling", 0.75), ("tripling", 0.5)):
        res = _run(kind="hypothesis-trend", map=name, alpha=alpha, n=[10**3, 10**4, 10**5], seeds=50)
        meds[name] = [res.values("stat", n)[0] for n in (10**3, 10**4, 10**5)]
    ok = all(m[0] > m[1] > m[2] for m in meds.values())
    detail = "; ".join(f"{k} medians " + ", ".join(f"{x:.2e}" for x in m) for k, m in meds.items())
    assert criterion(7, ok, detail)


PLANE = stable.SpectralMeasure([[1.0, 0.0], [0.0, -1.0], [math.sqrt(0.5), math.sqrt(0.5)]],
                               [0.5, 0.3, 0.2])
STABLE_CONFIGS = [(0.75, stable.SpectralMeasure.one_sided()), (1.5, stable.SpectralMeasure.symmetric()),
                  (1.3, PLANE)]


def test_c08_stable_machinery(criterion):
    rng = np.random.default_rng(0)
    worst_se, worst_ks = 0.0, 0.0
    for alpha, nu in STABLE_CONFIGS:
        n = 10**6
        x = stable.sample_marginal(alpha, nu, rng, n)
        for s in rng.uniform(-2, 2, size=(20, nu.dim)):
            z = np.exp(1j * (x @ s))
            se = math.sqrt((z.real.var() + z.imag.var()) / n)
            worst_se = max(worst_se, abs(z.mean() - stable.char_fn(alpha, nu, s)) / se)
        ends = np.array([stable.sample_path(alpha, nu, 1000, 1, rng).realized.values[-1]
                         for _ in range(10**4)])
        for k in range(nu.dim):
            worst_ks = max(worst_ks, stable.ks_two_sample(ends[:, k], x[:, k])[0])
    ok = worst_se <= 3 and worst_ks <= 0.02
    assert criterion(8, ok, f"max |chf error| / SE = {worst_se:.2f} over 60 points, "
                            f"max KS path(1) vs marginal = {worst_ks:.4f}")


def _induced(scheme, count, rng):
    steps = int(1.2 * count / scheme.measure_X) + 1000
    while True:
        R, V = induced_values(scheme, sample_orbit(scheme, steps, rng, start="X"))
        if R.size >= count:
            return R[:count], V[:count]
        steps *= 2


def test_c09_tail_indices(criterion):
    rng = np.random.default_rng(0)
    _, V = _induced(doubling_scheme(0.75), 10**5, rng)
    hd = stable.hill_estimator(np.abs(V[:, 0]), 3000)
    _, V = _induced(tripling_scheme(0.5), 10**5, rng)
    ht = stable.hill_estimator(np.abs(V[:, 0]), 3000)
    R, _ = _induced(lsv_scheme(1.5), 10**5, rng)
    hl = stable.hill_estimator(R, 300)
    ok = abs(hd - 0.75) <= 0.05 and abs(ht - 0.5) <= 0.05 and abs(hl - 1.5) <= 0.15
    assert criterion(9, ok, f"Hill: doubling |V| {hd:.3f} (k=3000), tripling |V| {ht:.3f} (k=3000), "
                            f"LSV R {hl:.3f} (k=300)")


def test_c10_profile_classifier(criterion):
    labels = {}
    for alpha in (1.1, 1.5, 1.9):
        for key, (data, expected) in cusp.mode_traces(alpha).items():
            labels[(alpha, key)] = (cusp.classify_cusp(data), expected)
    fig_ok = all(got == want for got, want in labels.values())
    rng = np.random.default_rng(0)
    theta = np.linspace(0, math.pi, 257)
    m1 = 0
    for _ in range(100):
        knots = rng.uniform(0.05, 5.0, size=(2, int(rng.integers(2, 12))))
        vp = np.interp(theta, np.linspace(0, math.pi, knots.shape[1]), knots[0])
        vm = np.interp(theta, np.linspace(0, math.pi, knots.shape[1]), knots[1])
        m1 += cusp.classify_cusp(cusp.CuspData(float(rng.uniform(1.05, 1.95)), theta, vp, vm)) == "M1"
    ok = fig_ok and m1 == 100
    got = ", ".join(f"{k}={labels[(1.5, k)][0]}" for k in "abc")
    assert criterion(10, ok, f"reference trace labels {got} (all three alphas match: {fig_ok}); "
                             f"{m1}/100 positive traces give M1")


def _certified_shift_distance(x, y, bound, n):
    """Sampled distance, refined until certified below ``bound`` or shown above it."""
    delta = 0.1 / n
    for _ in range(6):
        r = d_Fprime(x, y, delta)
        if r.value + r.error_bound <= bound or r.value > bound:
            return r
        delta /= 4
    return r


def test_c11_shift_bound(criterion):
    s = doubling_scheme(0.75)
    rng = np.random.default_rng(0)
    certified, worst = 0, 0.0
    for n in (10**3, 10**4):
        b = bn(s, n)
        for _ in range(100):
            orb = sample_orbit(s, n + 1, rng)
            w0, _ = wn_path(s, Orbit(orb.points[: n + 1], orb.in_X[: n + 1]), n)
            w1, _ = wn_path(s, Orbit(orb.points[1:], orb.in_X[1:]), n)
            v = s.observable(orb.points[[0, n]])[:, 0]
            bound = 1 / n + 2 / b * (abs(v[0]) + abs(v[1]))
            r = _certified_shift_distance(embed_step_trivial(w1, n), embed_step_trivial(w0, n), bound, n)
            certified += r.value + r.error_bound <= bound
            worst = max(worst, (r.value + r.error_bound) / bound)
    ok = certified == 200
    assert criterion(11, ok, f"{certified}/200 orbits certified below the bound; "
                             f"max (value + error) / bound = {worst:.4f}")
