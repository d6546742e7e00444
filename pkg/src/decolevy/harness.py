"""Config-driven Monte Carlo experiments and their reports.

A config is a JSON object::

    {
      "name": "lap-doubling",          # experiment label used in reports
      "kind": "lapnumber",             # one of KINDS
      "map": "doubling",               # dynamics kinds only
      "alpha": 0.75,
      "n": [1000000],                  # list of sizes
      "seeds": 100,                    # seeds are seed0 .. seed0 + seeds - 1
      "seed0": 0,
      "samples": 5000,                 # kind-specific sample count
      "params": {},                    # kind-specific extras
      "output": "out/lap.csv",         # report path; .json selects JSON
      "timing": false,                 # record wall time per record
      "workers": 1                     # process pool size across seeds
    }

Each (n, seed) pair gets its own generator ``default_rng([seed, n])``, so
records do not depend on execution order or on the number of workers.
Aggregate records (seed ``"all"``) hold the median over seeds with a
distribution-free 95% interval from order statistics.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from . import cusp, dynamics, stable

__all__ = [
    "KINDS",
    "ConfigError",
    "PartialResultError",
    "ExperimentConfig",
    "Record",
    "RunResult",
    "run_experiment",
    "emit_report",
    "write_results",
    "read_results",
    "parse_csv",
    "CSV_COLUMNS",
]

KINDS = ("marginal-ks", "overshoot", "hypothesis-trend", "lapnumber",
         "excursion-shape", "profile-classify", "chf-check")
MAPS = ("doubling", "tripling", "lsv", "gauss", "double-lsv")
CSV_COLUMNS = ["experiment", "kind", "n", "seed", "statistic", "value", "ci_lo", "ci_hi", "runtime_s"]
MAGIC = b"DLVYRES1"
MODE_CODES = {"NONE": 0.0, "M1": 1.0, "M2": 2.0}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class PartialResultError(RuntimeError):
    """A seed failed; ``result`` holds the records of ``completed`` seeds."""

    def __init__(self, message, completed, result):
        super().__init__(f"{message}; completed seeds: {completed}")
        self.completed = completed
        self.result = result


# ---------------------------------------------------------------------------
# config


_DYNAMIC_KINDS = {"marginal-ks", "overshoot", "hypothesis-trend", "lapnumber", "excursion-shape"}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    n: tuple = (1,)
    seeds: int = 1
    seed0: int = 0
    map: str | None = None
    alpha: float | None = None
    samples: int = 1000
    params: dict = field(default_factory=dict)
    output: str | None = None
    timing: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("$", "config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in obj:
            if key not in known:
                raise ConfigError(key, "unknown field")
        for key in ("name", "kind"):
            if key not in obj:
                raise ConfigError(key, "required field missing")
        kw = dict(obj)
        if "n" in kw:
            n = kw["n"]
            kw["n"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        return d

    def validate(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigError("name", "must be a nonempty string")
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
        if not self.n or any(not isinstance(k, int) or isinstance(k, bool) or k < 1 for k in self.n):
            raise ConfigError("n", "must be a nonempty list of positive integers")
        for key in ("seeds", "samples", "workers"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(key, "must be a positive integer")
        if not isinstance(self.seed0, int) or self.seed0 < 0:
            raise ConfigError("seed0", "must be a nonnegative integer")
        if not isinstance(self.params, dict):
            raise ConfigError("params", "must be an object")
        if self.kind in _DYNAMIC_KINDS:
            if self.map not in MAPS:
                raise ConfigError("map", f"must be one of {', '.join(MAPS)}")
            try:
                if self.map in ("lsv", "double-lsv"):
                    cls = dynamics.LSV if self.map == "lsv" else dynamics.DoubleLSV
                    cls(1.5 if self.alpha is None else self.alpha)
                else:
                    dynamics.make_scheme(self.map, self.alpha)
            except (ValueError, TypeError) as exc:
                raise ConfigError("alpha", str(exc)) from None
        if self.kind in ("marginal-ks", "overshoot", "excursion-shape", "hypothesis-trend") \
                and self.map not in ("doubling", "tripling"):
            raise ConfigError("map", f"{self.kind} supports doubling and tripling")
        if self.kind == "chf-check":
            if self.alpha is None:
                raise ConfigError("alpha", "required for chf-check")
            try:
                stable.scale_constant(self.alpha)
            except ValueError as exc:
                raise ConfigError("alpha", str(exc)) from None
            try:
                self.spectral()
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError("params.spectral", str(exc)) from None
        if self.kind == "profile-classify":
            a = self.params.get("alpha", 1.5 if self.alpha is None else self.alpha)
            if not 1 < a < 2:
                raise ConfigError("alpha", "cusp alpha must lie in (1, 2)")

    def _scheme_kw(self):
        if self.map in ("lsv", "double-lsv"):
            return {"center_iterations": int(self.params.get("center_iterations", 10**7))}
        return {}

    def scheme(self):
        return _scheme(self.map, self.alpha, tuple(sorted(self._scheme_kw().items())))

    def spectral(self) -> stable.SpectralMeasure:
        spec = self.params.get("spectral", "one-sided")
        if spec == "one-sided":
            return stable.SpectralMeasure.one_sided()
        if spec == "symmetric":
            return stable.SpectralMeasure.symmetric()
        return stable.SpectralMeasure.from_dict(spec)


@lru_cache(maxsize=16)
def _scheme(name, alpha, kw):
    return dynamics.make_scheme(name, alpha, **dict(kw))


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Record:
    experiment: str
    kind: str
    n: int
    seed: object
    statistic: str
    value: float
    ci_lo: float = math.nan
    ci_hi: float = math.nan
    runtime_s: float = 0.0


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list

    def values(self, statistic: str, n: int | None = None, seed="all") -> list:
        return [r.value for r in self.records
                if r.statistic == statistic and (n is None or r.n == n) and r.seed == seed]


def _median_ci(values, level=0.95):
    """Median and an order-statistic confidence interval for it."""
    x = np.sort(np.asarray(values, dtype=float))
    k = x.size
    med = float(np.median(x))
    if k < 6:
        return med, float(x[0]), float(x[-1])
    lo = int(stats.binom.ppf((1 - level) / 2, k, 0.5))
    hi = int(stats.binom.isf((1 - level) / 2, k, 0.5))
    return med, float(x[max(lo - 1, 0)]), float(x[min(hi, k - 1)])


# ---------------------------------------------------------------------------
# experiments; each returns a list of (statistic, value)


def _limit_samples(cfg, scheme, count, rng):
    nu = stable.SpectralMeasure.one_sided() if cfg.map == "doubling" else stable.SpectralMeasure.symmetric()
    scale = scheme.measure_X ** (1.0 / scheme.alpha)
    return scale * stable.sample_marginal(scheme.alpha, nu, rng, count)[:, 0]


def _exp_marginal_ks(cfg, scheme, n, rng):
    w = dynamics.wn_endpoints(scheme, n, cfg.samples, rng)[:, 0]
    ref = _limit_samples(cfg, scheme, int(cfg.params.get("reference_samples", cfg.samples)), rng)
    ks, p = stable.ks_two_sample(w, ref)
    return [("ks", ks), ("ks_pvalue", p)]


def _exp_overshoot(cfg, scheme, n, rng):
    orbit = dynamics.sample_orbit(scheme, n, rng, start="M")
    V, span = dynamics.excursion_spans(scheme, orbit)
    q = float(cfg.params.get("quantile", 0.9))
    top = V >= np.quantile(V, q)
    return [("span_ratio", float(np.median(span[top] / V[top]))), ("excursions", float(V.size))]


def _exp_hypothesis(cfg, scheme, n, rng):
    return [("stat", dynamics.hypothesis_main_stat(scheme, n, rng))]


def _exp_lapnumber(cfg, scheme, n, rng):
    orbit = dynamics.sample_orbit(scheme, n, rng, start=cfg.params.get("start", "X"))
    laps = int(orbit.in_X[1:].sum())
    ret = dynamics.returns_of(orbit)
    R = np.diff(np.r_[0, ret]) if orbit.in_X[0] else np.diff(ret)
    return [("laps_per_n", laps / n), ("mean_R", float(R.mean()))]


def _exp_excursion_shape(cfg, scheme, n, rng):
    head = int(cfg.params.get("head", 1000))
    if cfg.map == "doubling":
        lo, hi = cfg.params.get("R_range", [10, 30])
        d, R = dynamics.doubling_conditional_distances(scheme, int(lo), int(hi), n, rng)
        score = d
    else:
        steps = int(2 * n / scheme.measure_X) + 1000
        orbit = dynamics.sample_orbit(scheme, steps, rng, start="X")
        d, R = dynamics.xi_zeta_distances(scheme, orbit, n)
        score = d / R
    m_head, m_all = float(score[:head].max()), float(score.max())
    name = "d" if cfg.map == "doubling" else "d_over_R"
    return [(f"max_{name}_head", m_head), (f"max_{name}_all", m_all), ("growth_ratio", m_all / m_head)]


def _exp_profile_classify(cfg, n, rng):
    alpha = float(cfg.params.get("alpha", 1.5 if cfg.alpha is None else cfg.alpha))
    out = []
    for key, (data, expected) in cusp.mode_traces(alpha).items():
        label = cusp.classify_cusp(data, m=max(n, 8))
        out.append((f"mode_{key}", MODE_CODES[label]))
        out.append((f"match_{key}", float(label == expected)))
    return out


def _exp_chf(cfg, n, rng):
    nu = cfg.spectral()
    draws = stable.sample_marginal(cfg.alpha, nu, rng, n)
    npts = int(cfg.params.get("points", 20))
    pts = rng.uniform(0.2, 2.0, size=(npts, nu.dim)) * rng.choice([-1.0, 1.0], size=(npts, nu.dim))
    worst = 0.0
    for s in pts:
        z = np.exp(1j * draws @ s)
        target = stable.char_fn(cfg.alpha, nu, s)
        for part, ref in ((z.real, target.real), (z.imag, target.imag)):
            se = part.std(ddof=1) / math.sqrt(n)
            worst = max(worst, abs(part.mean() - ref) / se)
    ends = stable.path_endpoints(cfg.alpha, nu, int(cfg.params.get("K", 10**4)), rng, cfg.samples)
    ref = stable.sample_marginal(cfg.alpha, nu, rng, cfg.samples)
    ks = max(stable.ks_two_sample(ends[:, k], ref[:, k])[0] for k in range(nu.dim))
    return [("max_chf_se", worst), ("ks_path_vs_marginal", ks)]


_RUNNERS = {
    "marginal-ks": _exp_marginal_ks,
    "overshoot": _exp_overshoot,
    "hypothesis-trend": _exp_hypothesis,
    "lapnumber": _exp_lapnumber,
    "excursion-shape": _exp_excursion_shape,
}


def _run_one(cfg: ExperimentConfig, n: int, seed: int):
    rng = np.random.default_rng([seed, n])
    t0 = time.perf_counter()
    if cfg.kind in _RUNNERS:
        stats_ = _RUNNERS[cfg.kind](cfg, cfg.scheme(), n, rng)
    elif cfg.kind == "profile-classify":
        stats_ = _exp_profile_classify(cfg, n, rng)
    else:
        stats_ = _exp_chf(cfg, n, rng)
    elapsed = time.perf_counter() - t0 if cfg.timing else 0.0
    return [Record(cfg.name, cfg.kind, n, seed, s, float(v), runtime_s=elapsed) for s, v in stats_]


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run every (n, seed) pair, then append median records per (n, statistic).

    Raises
    ------
    PartialResultError
        If a seed fails; carries the records gathered so far.
    """
    cfg.validate()
    tasks = [(n, cfg.seed0 + i) for n in cfg.n for i in range(cfg.seeds)]
    records, done = [], []
    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                futures = [pool.submit(_run_one, cfg, n, s) for n, s in tasks]
                for (n, s), fut in zip(tasks, futures):
                    records.extend(fut.result())
                    done.append((n, s))
        else:
            for n, s in tasks:
                records.extend(_run_one(cfg, n, s))
                done.append((n, s))
    except Exception as exc:
        raise PartialResultError(f"experiment {cfg.name!r} failed: {exc}", done,
                                 RunResult(cfg, records)) from exc
    for n in cfg.n:
        names = list(dict.fromkeys(r.statistic for r in records if r.n == n))
        for name in names:
            vals = [r.value for r in records if r.n == n and r.statistic == name]
            med, lo, hi = _median_ci(vals)
            rt = sum(r.runtime_s for r in records if r.n == n and r.statistic == name)
            records.append(Record(cfg.name, cfg.kind, n, "all", name, med, lo, hi, rt))
    return RunResult(cfg, records)


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _csv_text(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.records:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_obj(result: RunResult) -> dict:
    recs = []
    for r in result.records:
        d = asdict(r)
        for k in ("ci_lo", "ci_hi"):
            if math.isnan(d[k]):
                d[k] = None
        recs.append(d)
    return {"config": result.config.to_dict(), "records": recs}


def emit_report(result: RunResult, fmt: str = "csv", path=None, figures: bool = True):
    """Write the report (and figures next to it); returns the report path.

    Raises
    ------
    ValueError
        On an empty result or an unknown format.
    """
    if not result.records:
        raise ValueError("cannot report an empty result")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    if path is None:
        base = result.config.output or f"{result.config.name}.{fmt}"
        path = Path(base).with_suffix("." + fmt)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path.write_text(_csv_text(result))
    else:
        path.write_text(json.dumps(_json_obj(result), indent=1, sort_keys=True) + "\n")
    if figures:
        from .plotting import plot_result
        plot_result(result, path)
    return path


def parse_csv(text: str) -> list:
    """Records from CSV report text (seed stays a string for aggregates)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and list(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV columns")
    out = []
    for row in rows:
        seed = row["seed"]
        out.append(Record(row["experiment"], row["kind"], int(row["n"]),
                          int(seed) if seed.isdigit() else seed, row["statistic"],
                          float(row["value"]),
                          float(row["ci_lo"]) if row["ci_lo"] else math.nan,
                          float(row["ci_hi"]) if row["ci_hi"] else math.nan,
                          float(row["runtime_s"])))
    return out


def write_results(result: RunResult, path) -> Path:
    """Binary results file: magic header plus zlib-compressed JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(_json_obj(result), sort_keys=True).encode()
    path.write_bytes(MAGIC + zlib.compress(payload, 9))
    return path


def read_results(path) -> RunResult:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ValueError(f"{path} is not a results file")
    obj = json.loads(zlib.decompress(raw[len(MAGIC):]))
    cfg = ExperimentConfig.from_dict(obj["config"])
    recs = []
    for d in obj["records"]:
        d = dict(d)
        for k in ("ci_lo", "ci_hi"):
            d[k] = math.nan if d[k] is None else d[k]
        recs.append(Record(**d))
    return RunResult(cfg, recs)
