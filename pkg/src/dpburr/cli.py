"""Command-line front end: ``dpburr {simulate,fit,curves,gof,treatments}``.

Exit codes partition the error classes:

====  ===========================================================
0     success
2     usage error (bad flags, missing seed, mismatched grids)
3     input/output or parse error
4     validation error (values outside their domain)
5     numerical failure inside the sampler or quadrature
6     unreadable or empty trace file
====  ===========================================================
"""

import argparse
import concurrent.futures
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    DataFormatError, DataValidationError, kaplan_meier, leukemia_fixture, mixture_cdf,
    mixture_pdf, parse_csv, simulate_mixture,
)
from .distributions import BurrParams, DomainError
from .elicitation import elicit, empirical_quartiles
from .gibbs import HyperPriors, SamplerConfig, SamplerError, run_chain
from .gof import format_table, gof_metrics
from .kernels import KERNELS, UnknownKernelError, fit_generic, kernel_from_data
from .numerics import QuadratureError
from .predictive import KINDS, CurveError, default_grid, predictive_curves, read_curve_csv
from .trace import Trace, TraceFormatError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_TRACE = 0, 2, 3, 4, 5, 6
TREATMENT_GRID = (0.5, 50.0, 200)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    iterations: int = 5000
    burn_in: int = 2000
    thin: int = 3
    seed: int = None
    kernel: str = "burr"
    band_level: float = 0.95
    grid: tuple = None
    chains: int = 1
    reproducible: bool = False
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise UsageError("need iterations > burn-in >= 0")
        if self.thin < 1:
            raise UsageError("thin must be at least 1")
        if self.chains < 1:
            raise UsageError("chains must be at least 1")
        if not 0 < self.band_level < 1:
            raise UsageError("band level must lie in (0, 1)")
        if self.kernel not in KERNELS:
            raise UsageError(f"unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")
        if self.seed is None:
            if self.reproducible:
                raise UsageError("--seed is required with --reproducible")
            self.seed = int(np.random.SeedSequence().entropy % 2**32)

    def sampler(self, seed=None):
        return SamplerConfig(iterations=self.iterations, burn_in=self.burn_in, thin=self.thin,
                             seed=self.seed if seed is None else seed)

    def config_hash(self):
        blob = json.dumps({k: v for k, v in asdict(self).items() if k != "reproducible"},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header_lines(self, command):
        return [f"dpburr {__version__} {command}", f"seed={self.seed}",
                f"config_hash={self.config_hash()}"]

    def chain_seeds(self):
        if self.chains == 1:
            return [self.seed]
        children = np.random.SeedSequence(self.seed).spawn(self.chains)
        return [int(c.generate_state(1)[0]) for c in children]


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _pair(text):
    try:
        c, k = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'c,k', got {text!r}") from None
    return c, k


def _grid_spec(text):
    try:
        lo, hi, num = text.split(",")
        return float(lo), float(hi), int(num)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'start,stop,points', got {text!r}") from None


def _mixture_spec(text):
    """``p,c1,k1,c2,k2`` for the two-component Burr mixture."""
    try:
        p, c1, k1, c2, k2 = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'p,c1,k1,c2,k2', got {text!r}") from None
    return p, BurrParams(c1, k1), BurrParams(c2, k2)


def _make_grid(spec):
    lo, hi, num = spec
    if not (lo > 0 and hi > lo and num >= 2):
        raise CurveError("grid must satisfy 0 < start < stop with at least 2 points")
    return np.linspace(lo, hi, num)


def _config(args, **extra):
    overrides = {k: v for k, v in (("b_gamma", getattr(args, "b_gamma", None)),
                                   ("b_phi", getattr(args, "b_phi", None))) if v is not None}
    return RunConfig(iterations=args.iterations, burn_in=args.burn_in, thin=args.thin,
                     seed=args.seed, kernel=getattr(args, "kernel", "burr"),
                     band_level=getattr(args, "band_level", 0.95),
                     grid=getattr(args, "grid", None), chains=getattr(args, "chains", 1),
                     reproducible=args.reproducible, overrides=overrides, **extra)


def _emit(args, summary, text):
    if args.json:
        print(json.dumps(summary, sort_keys=True, default=float))
    else:
        print(text)


# ---------------------------------------------------------------------------
# fitting shared by fit / gof --compare / treatments
# ---------------------------------------------------------------------------


def _threads():
    raw = os.environ.get("DPBURR_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"DPBURR_THREADS must be an integer, got {raw!r}") from None


def _fit_one(dataset, kernel_name, overrides, sampler_config):
    times = dataset.times
    if kernel_name == "burr":
        e = elicit(times)
        b_gamma = overrides.get("b_gamma", e.b_gamma)
        b_phi = overrides.get("b_phi", e.b_phi)
        trace = run_chain(dataset, HyperPriors(b_gamma=b_gamma, b_phi=b_phi), sampler_config)
        trace.extra["elicitation"] = {"c_tilde": e.c_tilde, "k_tilde": e.k_tilde,
                                      "fallback": e.fallback, "b_gamma": b_gamma, "b_phi": b_phi}
        return trace
    kernel = kernel_from_data(kernel_name, times)
    return fit_generic(dataset, kernel, config=sampler_config)


def fit_chains(dataset, cfg: RunConfig):
    """Run ``cfg.chains`` chains with derived seeds, in parallel when allowed."""
    seeds = cfg.chain_seeds()
    jobs = [cfg.sampler(seed=s) for s in seeds]
    workers = min(len(jobs), _threads())
    if workers == 1:
        traces = [_fit_one(dataset, cfg.kernel, cfg.overrides, j) for j in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_fit_one, dataset, cfg.kernel, cfg.overrides, j) for j in jobs]
            traces = [f.result() for f in futures]
    for tr in traces:
        tr.extra.update(version=__version__, config_hash=cfg.config_hash())
    return traces


def _chain_paths(out, chains):
    out = Path(out)
    if chains == 1:
        return [out]
    return [out.with_name(f"{out.stem}.chain{i}{out.suffix}") for i in range(chains)]


def _trace_summary(trace):
    ns = trace.n_star()
    out = {"snapshots": len(trace), "n_star_mean": float(ns.mean()),
           "n_star_min": int(ns.min()), "n_star_max": int(ns.max()),
           "n_star_mode": int(np.bincount(ns).argmax()), "nu_mean": float(trace.nu().mean())}
    for name in trace.hyper_names:
        out[f"{name}_mean"] = float(trace.hyper_values(name).mean())
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    if args.reproducible and args.seed is None:
        raise UsageError("--seed is required with --reproducible")
    seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % 2**32)
    if not 0.0 <= args.p <= 1.0:
        raise DataValidationError(f"p must lie in [0, 1], got {args.p}")
    if args.n < 1:
        raise DataValidationError(f"n must be positive, got {args.n}")
    ds = simulate_mixture(args.n, args.p, BurrParams(*args.comp1), BurrParams(*args.comp2), seed)
    cfg_hash = hashlib.sha256(json.dumps(
        [args.n, args.p, args.comp1, args.comp2, seed]).encode()).hexdigest()[:16]
    text = "".join(f"# {line}\n" for line in (
        f"dpburr {__version__} simulate", f"seed={seed}", f"config_hash={cfg_hash}")) + ds.csv_text()
    Path(args.output).write_text(text, encoding="utf-8")
    q = empirical_quartiles(ds.times) if len(ds) >= 4 else (math.nan,) * 3
    summary = {"n": len(ds), "censored": int(ds.censored.sum()), "quartiles": list(q),
               "seed": seed, "output": str(args.output)}
    _emit(args, summary, f"wrote {len(ds)} rows to {args.output}\n"
          f"n={len(ds)} censored=0 quartiles=({q[0]:.6g}, {q[1]:.6g}, {q[2]:.6g})")
    return EXIT_OK


def _load_dataset(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror}") from None
    body = "\n".join(l for l in text.splitlines() if not l.startswith("#"))
    return parse_csv(body, label=str(path))


def cmd_fit(args):
    cfg = _config(args)
    ds = _load_dataset(args.data)
    t0 = time.perf_counter()
    traces = fit_chains(ds, cfg)
    wall = time.perf_counter() - t0
    paths = _chain_paths(args.output, cfg.chains)
    for tr, path in zip(traces, paths):
        tr.save(path)
    pooled = Trace.merge(traces)
    summary = {"kernel": cfg.kernel, "n": len(ds), "censored": int(ds.censored.sum()),
               "seed": cfg.seed, "chains": cfg.chains, "traces": [str(p) for p in paths],
               "wall_time_s": wall, **_trace_summary(pooled)}
    lines = [f"kernel={cfg.kernel} n={len(ds)} censored={summary['censored']} seed={cfg.seed}"]
    if "elicitation" in traces[0].extra:
        e = traces[0].extra["elicitation"]
        summary["b_phi"], summary["b_gamma"] = e["b_phi"], e["b_gamma"]
        summary["elicitation_fallback"] = e["fallback"]
        lines.append(f"b_phi={e['b_phi']:.6g} b_gamma={e['b_gamma']:.6g}"
                     + (" (fallback c~=k~=1)" if e["fallback"] else ""))
    lines.append(f"n* mean={summary['n_star_mean']:.3f} range=[{summary['n_star_min']}, "
                 f"{summary['n_star_max']}] mode={summary['n_star_mode']}")
    lines.append("posterior means: nu={:.4g}".format(summary["nu_mean"]) + "".join(
        f" {h}={summary[h + '_mean']:.4g}" for h in pooled.hyper_names))
    lines.append(f"wrote {', '.join(map(str, paths))} ({len(pooled)} snapshots) in {wall:.1f}s")
    _emit(args, summary, "\n".join(lines))
    return EXIT_OK


def _load_traces(paths):
    traces = []
    for p in paths:
        try:
            traces.append(Trace.load(p))
        except OSError as exc:
            raise DataFormatError(f"cannot read {p}: {exc.strerror}") from None
    merged = Trace.merge(traces)
    if len(merged) == 0:
        raise TraceFormatError("trace holds no snapshots")
    return merged


def _truth_values(kind, grid, mixture=None, km=None):
    if mixture is not None:
        p, c1, c2 = mixture
        f, F = mixture_pdf(grid, p, c1, c2), mixture_cdf(grid, p, c1, c2)
        return {"density": f, "cdf": F, "survival": 1.0 - F,
                "hazard": f / np.maximum(1.0 - F, 1e-12)}[kind]
    if km is not None:
        S = km(grid)
        return {"survival": S, "cdf": 1.0 - S}.get(kind)
    return None


def cmd_curves(args):
    trace = _load_traces(args.traces)
    cfg = RunConfig(iterations=1, burn_in=0, seed=trace.seed, band_level=args.band_level,
                    grid=args.grid, kernel=trace.kernel)
    if args.grid is not None:
        grid = _make_grid(args.grid)
    else:
        t_min, t_max = trace.extra.get("t_min"), trace.extra.get("t_max")
        if t_min is None or t_max is None:
            raise UsageError("trace lacks the data range; pass --grid start,stop,points")
        grid = default_grid([t_min, t_max])
    km = kaplan_meier(_load_dataset(args.km)) if args.km else None
    curves = predictive_curves(trace, grid, band_level=args.band_level)
    header = cfg.header_lines("curves") + [f"kernel={trace.kernel}",
                                           f"config_hash_fit={trace.extra.get('config_hash')}",
                                           f"extrapolation={curves['density'].metadata.get('extrapolation')}"]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in args.kinds:
        truth = _truth_values(kind, grid, args.truth, km)
        path = out / f"{args.prefix}{kind}.csv"
        curves[kind].to_csv(path, truth=truth, header_lines=header)
        written.append(str(path))
    summary = {"files": written, "snapshots": len(trace), "grid_points": int(grid.size)}
    _emit(args, summary, "wrote " + ", ".join(written))
    return EXIT_OK


def _report_dict(r):
    return {"mare": r.mare, "mae": r.mae, "mse": r.mse, "n": r.n, "n_mare": r.n_mare}


def _gof_compare(args):
    if args.data is None or args.truth is None:
        raise UsageError("--compare needs --data and --truth")
    names = [n.strip() for n in args.compare.split(",") if n.strip()]
    for n in names:
        if n not in KERNELS:
            raise UsageError(f"unknown kernel {n!r}; choose from {sorted(KERNELS)}")
    ds = _load_dataset(args.data)
    at = np.sort(ds.observed_times)
    truth = _truth_values(args.target, at, args.truth)
    base = RunConfig(iterations=args.iterations, burn_in=args.burn_in, thin=args.thin,
                     seed=args.seed, chains=args.chains, reproducible=args.reproducible)
    reports = {}
    for name in names:
        trace = Trace.merge(fit_chains(ds, replace(base, kernel=name)))
        est = predictive_curves(trace, at)[args.target].mean
        reports[name] = gof_metrics(truth, est)
    table = format_table(reports)
    summary = {name: _report_dict(r) for name, r in reports.items()}
    if args.output:
        Path(args.output).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _emit(args, summary, table)
    return EXIT_OK


def cmd_gof(args):
    if args.compare:
        return _gof_compare(args)
    if args.curve is None:
        raise UsageError("give --curve FILE (with --truth or --reference) or --compare")
    kind, cols = _read_curve(args.curve)
    grid, est = cols["time"], cols["mean"]
    if args.reference:
        ref_kind, ref = _read_curve(args.reference)
        if ref["time"].shape != grid.shape or np.any(ref["time"] != grid):
            raise UsageError("curve and reference are on different grids")
        if ref_kind != kind:
            raise UsageError(f"curve kinds differ: {kind} vs {ref_kind}")
        truth = ref.get("truth", ref["mean"]) if args.use_truth_column else ref["mean"]
    elif args.truth is not None:
        truth = _truth_values(kind, grid, args.truth)
    elif "truth" in cols:
        truth = cols["truth"]
    else:
        raise UsageError("no reference: pass --truth, --reference, or a curve with a truth column")
    report = gof_metrics(truth, est)
    if args.output:
        Path(args.output).write_text(report.to_json(indent=2, sort_keys=True) + "\n")
    _emit(args, _report_dict(report), report.to_table(label=kind or "estimate"))
    return EXIT_OK


def _read_curve(path):
    try:
        return read_curve_csv(path)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror}") from None


def cmd_treatments(args):
    if args.fixture:
        if args.fixture != "leukemia":
            raise UsageError(f"unknown fixture {args.fixture!r}")
        arms = {"A": leukemia_fixture("A"), "B": leukemia_fixture("B")}
        grid = np.linspace(*TREATMENT_GRID[:2], TREATMENT_GRID[2])
    else:
        if not args.arm or len(args.arm) != 2:
            raise UsageError("need exactly two --arm LABEL=FILE options or --fixture leukemia")
        arms = {}
        for spec in args.arm:
            label, sep, path = spec.partition("=")
            if not sep or not label:
                raise UsageError(f"--arm expects LABEL=FILE, got {spec!r}")
            if label in arms:
                raise UsageError(f"duplicate arm label {label!r}")
            arms[label] = _load_dataset(path)
        pooled = np.concatenate([d.times for d in arms.values()])
        grid = default_grid(pooled)
    if args.grid is not None:
        grid = _make_grid(args.grid)
    cfg = _config(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"seed": cfg.seed, "grid": [float(grid[0]), float(grid[-1]), int(grid.size)],
               "arms": {}}
    lines = []
    # every arm gets the same seed, so relabelling or swapping arms swaps outputs exactly
    for label, ds in arms.items():
        trace = Trace.merge(fit_chains(ds, cfg))
        curves = predictive_curves(trace, grid, band_level=cfg.band_level)
        header = cfg.header_lines("treatments") + [f"arm={label}", f"label={ds.label}"]
        files = []
        for kind in ("hazard", "survival"):
            path = out / f"{kind}_{label}.csv"
            curves[kind].to_csv(path, header_lines=header)
            files.append(str(path))
        s = curves["survival"]
        med_idx = int(np.searchsorted(-s.mean, -0.5))
        median = float(grid[med_idx]) if med_idx < grid.size else math.inf
        summary["arms"][label] = {"n": len(ds), "censored": int(ds.censored.sum()),
                                  "files": files, "median_survival": median,
                                  **_trace_summary(trace)}
        lines.append(f"arm {label}: n={len(ds)} censored={int(ds.censored.sum())} "
                     f"n* mean={summary['arms'][label]['n_star_mean']:.2f} "
                     f"median survival~{median:.3g} -> {', '.join(files)}")
    _emit(args, summary, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_sampler_flags(p):
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--thin", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="dpburr", description=(
        "Dirichlet-process Burr(XII) mixture models for right-censored survival data."))
    parser.add_argument("--version", action="version", version=f"dpburr {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON summary")
    common.add_argument("--reproducible", action="store_true",
                        help="refuse to run without an explicit --seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="draw a two-component Burr mixture")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--comp1", type=_pair, default=(5.0, 1.0))
    p.add_argument("--comp2", type=_pair, default=(2.0, 6.0))
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="run the Gibbs sampler on a dataset")
    p.add_argument("data")
    p.add_argument("-o", "--output", required=True, help="trace file (JSON lines)")
    p.add_argument("--kernel", default="burr", choices=sorted(KERNELS))
    p.add_argument("--b-gamma", type=float, help="override the elicited b_gamma")
    p.add_argument("--b-phi", type=float, help="override the elicited b_phi")
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("curves", parents=[common], help="posterior-predictive curves from traces")
    p.add_argument("traces", nargs="+", help="one trace file per chain")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--prefix", default="")
    p.add_argument("--kinds", type=lambda s: s.split(","), default=list(KINDS))
    p.add_argument("--grid", type=_grid_spec, help="start,stop,points")
    p.add_argument("--band-level", type=float, default=0.95)
    p.add_argument("--truth", type=_mixture_spec, help="overlay a Burr mixture p,c1,k1,c2,k2")
    p.add_argument("--km", help="overlay Kaplan-Meier of this dataset (survival and cdf)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("gof", parents=[common], help="goodness-of-fit metrics")
    p.add_argument("--curve")
    p.add_argument("--reference", help="curve file on the same grid")
    p.add_argument("--use-truth-column", action="store_true",
                   help="compare against the reference file's truth column")
    p.add_argument("--truth", type=_mixture_spec)
    p.add_argument("--compare", help="comma-separated kernels, e.g. burr,weibull,lognormal")
    p.add_argument("--data", help="dataset for --compare")
    p.add_argument("--target", choices=("density", "cdf", "hazard"), default="density")
    p.add_argument("-o", "--output")
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("treatments", parents=[common], help="fit two arms independently")
    p.add_argument("--fixture")
    p.add_argument("--arm", action="append", help="LABEL=FILE, given twice")
    p.add_argument("-o", "--output", default=".")
    p.add_argument("--grid", type=_grid_spec)
    p.add_argument("--band-level", type=float, default=0.95)
    _add_sampler_flags(p)
    p.set_defaults(func=cmd_treatments, kernel="burr")
    return parser


ERROR_CODES = (
    (UsageError, EXIT_USAGE),
    (UnknownKernelError, EXIT_USAGE),
    (TraceFormatError, EXIT_TRACE),
    (DataValidationError, EXIT_VALIDATION),
    (DataFormatError, EXIT_IO),
    (CurveError, EXIT_VALIDATION),
    (DomainError, EXIT_VALIDATION),
    (SamplerError, EXIT_NUMERICAL),
    (QuadratureError, EXIT_NUMERICAL),
    (ArithmeticError, EXIT_NUMERICAL),
    (OSError, EXIT_IO),
)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        for cls, code in ERROR_CODES:
            if isinstance(exc, cls):
                print(f"dpburr {args.command}: error: {exc}", file=sys.stderr)
                if code == EXIT_USAGE:
                    parser.print_usage(sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
