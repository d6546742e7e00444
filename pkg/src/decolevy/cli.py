"""Command line interface: ``decolevy <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import cusp, dynamics, fprime, harness, metrics, stable
from .paths import Profile, completed_graph, path_from_dict, path_to_dict


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_objects(path):
    """One JSON object, or one per line for ``.jsonl`` files."""
    text = Path(path).read_text()
    if str(path).endswith(".jsonl"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return [json.loads(text)]


def _emit(obj, out=None):
    text = json.dumps(obj)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_distance(args):
    a = path_from_dict(_load_json(args.a))
    b = path_from_dict(_load_json(args.b))
    if args.metric == "dtilde":
        res = metrics.d_tildeD(a, b, args.delta)
    elif args.metric == "hausdorff":
        if args.delta is None:
            raise SystemExit("hausdorff needs --delta")
        res = metrics.hausdorff(completed_graph(a), completed_graph(b), args.delta)
    elif args.metric == "m2":
        if args.delta is None:
            raise SystemExit("m2 needs --delta")
        res = metrics.d_M2(a, b, args.delta)
    else:
        lo, hi = metrics.d_J1_bracket(a, b)
        res = metrics.MetricResult(lo, hi - lo, "bracket")
    _emit(res.to_dict())


def _load_profiles(path):
    obj = _load_json(path)
    items = obj["profiles"] if isinstance(obj, dict) else obj
    return [Profile(path_from_dict(p)) for p in items]


def _cmd_decorate(args):
    profiles = _load_profiles(args.profiles)
    out = [fprime.decorated_to_dict(fprime.decorate_levy(stable.levy_from_dict(o), profiles))
           for o in _load_objects(args.levy)]
    if len(out) == 1:
        _emit(out[0], args.out)
    else:
        text = "\n".join(json.dumps(o) for o in out) + "\n"
        Path(args.out).write_text(text) if args.out else sys.stdout.write(text)


def _cmd_psi(args):
    _emit(path_to_dict(fprime.psi_max(fprime.decorated_from_dict(_load_json(args.x)))), args.out)


def _scheme(args):
    return dynamics.make_scheme(args.map, args.alpha)


def _cmd_simulate(args):
    scheme = _scheme(args)
    rng = np.random.default_rng(args.seed)
    paths = []
    with open(args.out, "w") as fh:
        for _ in range(args.samples):
            orbit = dynamics.sample_orbit(scheme, args.n, rng, start="M")
            w, _ = dynamics.wn_path(scheme, orbit, args.n)
            fh.write(json.dumps(path_to_dict(w)) + "\n")
            paths.append(w)
    if args.plot:
        from .plotting import plot_paths
        plot_paths(paths, Path(args.out).with_suffix(".png"))


def _cmd_induce(args):
    scheme = _scheme(args)
    rng = np.random.default_rng(args.seed)
    steps = int(2 * args.samples / scheme.measure_X) + 1000
    while True:
        orbit = dynamics.sample_orbit(scheme, steps, rng, start="X")
        R, V = dynamics.induced_values(scheme, orbit)
        if R.size >= args.samples:
            break
        steps *= 2
    starts = np.r_[0, np.cumsum(R)][: args.samples]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x0", "R"] + [f"V_{k + 1}" for k in range(scheme.dim)])
    for j in range(args.samples):
        w.writerow([repr(float(orbit.points[starts[j]])), int(R[j])] + [repr(float(v)) for v in V[j]])
    if args.out:
        fh.close()


def _load_nu(path):
    if path is None:
        return stable.SpectralMeasure.one_sided()
    return stable.SpectralMeasure.from_dict(_load_json(path))


def _cmd_stable_sample(args):
    nu = _load_nu(args.nu)
    rng = np.random.default_rng(args.seed)
    with open(args.out, "w") as fh:
        for _ in range(args.paths):
            L = stable.sample_path(args.alpha, nu, args.K, args.m, rng)
            fh.write(json.dumps(stable.levy_to_dict(L)) + "\n")


def _cmd_stable_chf(args):
    nu = _load_nu(args.nu)
    grid = np.loadtxt(args.s_grid, delimiter=",", ndmin=2, comments="#")
    if grid.shape[1] != nu.dim:
        raise SystemExit(f"s-grid needs {nu.dim} columns")
    vals = stable.char_fn(args.alpha, nu, grid)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow([f"s_{k + 1}" for k in range(nu.dim)] + ["re", "im"])
    for s, z in zip(grid, np.atleast_1d(vals)):
        w.writerow([repr(float(x)) for x in s] + [repr(float(z.real)), repr(float(z.imag))])


def _cmd_profile_cusp(args):
    data = cusp.read_traces_csv(args.traces, args.beta)
    prof = cusp.cusp_profile(data, args.m)
    obj = path_to_dict(prof.path)
    obj["mode"] = cusp.classify_cusp(data, args.m)
    _emit(obj, args.out)


def _cmd_experiment_run(args):
    cfg = harness.ExperimentConfig.load(args.config)
    result = harness.run_experiment(cfg)
    out = Path(cfg.output or f"{cfg.name}.csv")
    fmt = "json" if out.suffix == ".json" else "csv"
    bin_path = harness.write_results(result, out.with_suffix(".bin"))
    report = harness.emit_report(result, fmt, out)
    print(f"wrote {report} and {bin_path}")


def _cmd_experiment_report(args):
    result = harness.read_results(args.results)
    path = Path(args.out) if args.out else Path(args.results).with_suffix("." + args.format)
    print(f"wrote {harness.emit_report(result, args.format, path)}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decolevy", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("distance", help="distance between two path JSON files")
    q.add_argument("--metric", choices=["dtilde", "hausdorff", "m2", "j1"], required=True)
    q.add_argument("--delta", type=float)
    q.add_argument("a")
    q.add_argument("b")
    q.set_defaults(func=_cmd_distance)

    q = sub.add_parser("decorate", help="attach profiles to sampled Levy paths")
    q.add_argument("--profiles", required=True)
    q.add_argument("--out")
    q.add_argument("levy")
    q.set_defaults(func=_cmd_decorate)

    q = sub.add_parser("psi", help="running maximum of a decorated path")
    q.add_argument("--out")
    q.add_argument("x")
    q.set_defaults(func=_cmd_psi)

    maps = ["doubling", "tripling", "lsv", "gauss", "double-lsv"]
    q = sub.add_parser("simulate", help="W_n paths as JSON lines")
    q.add_argument("--map", choices=maps, required=True)
    q.add_argument("--alpha", type=float)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--samples", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--plot", action="store_true", help="also write a PNG next to the output")
    q.set_defaults(func=_cmd_simulate)

    q = sub.add_parser("induce", help="return times and induced values as CSV")
    q.add_argument("--map", choices=maps, required=True)
    q.add_argument("--alpha", type=float)
    q.add_argument("--samples", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=_cmd_induce)

    st = sub.add_parser("stable", help="stable laws").add_subparsers(dest="stable_cmd", required=True)
    q = st.add_parser("sample", help="series paths as JSON lines")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--nu")
    q.add_argument("--paths", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--K", type=int, default=10**4)
    q.add_argument("--m", type=int, default=1000)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_stable_sample)
    q = st.add_parser("chf", help="characteristic function on a grid")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--nu")
    q.add_argument("--s-grid", dest="s_grid", required=True)
    q.set_defaults(func=_cmd_stable_chf)

    q = sub.add_parser("profile-cusp", help="cusp profile from boundary traces")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--traces", required=True)
    q.add_argument("--m", type=int, default=2048)
    q.add_argument("--out")
    q.set_defaults(func=_cmd_profile_cusp)

    ex = sub.add_parser("experiment", help="run or report experiments").add_subparsers(
        dest="experiment_cmd", required=True)
    q = ex.add_parser("run")
    q.add_argument("config")
    q.set_defaults(func=_cmd_experiment_run)
    q = ex.add_parser("report")
    q.add_argument("results")
    q.add_argument("--format", choices=["csv", "json"], default="csv")
    q.add_argument("--out")
    q.set_defaults(func=_cmd_experiment_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, KeyError, harness.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
