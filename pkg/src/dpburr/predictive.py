"""Posterior-predictive density, distribution, survival and hazard curves.

For a snapshot with clusters ``(theta_j, n_j)`` and concentration ``nu``
the predictive density is the Polya-urn mixture::

    f(t) = sum_j n_j / (n + nu) * k(t | theta_j) + nu / (n + nu) * m0(t)

where ``m0`` is the kernel averaged over the base measure.  Curves are
computed per snapshot and summarized pointwise (posterior mean and a
central quantile band).
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, kernel_from_trace
from .trace import Trace

KINDS = ("density", "cdf", "survival", "hazard")
SURVIVAL_FLOOR = 1e-12


class CurveError(ValueError):
    pass


@dataclass
class CurveEstimate:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    kind: str
    band_level: float = 0.95
    samples: np.ndarray = field(default=None, repr=False)   # (snapshots, grid)
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path=None, truth=None, header_lines=()):
        """Write ``time,mean,lower,upper[,truth]`` preceded by ``#`` metadata lines."""
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(f"# kind={self.kind} band_level={self.band_level!r}\n")
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["time", "mean", "lower", "upper"] + (["truth"] if truth is not None else [])
        writer.writerow(cols)
        truth = None if truth is None else np.asarray(truth, dtype=float)
        for i, t in enumerate(self.grid):
            row = [repr(float(t)), repr(float(self.mean[i])), repr(float(self.lower[i])),
                   repr(float(self.upper[i]))]
            if truth is not None:
                row.append(repr(float(truth[i])))
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def read_curve_csv(path):
    """Parse a curve CSV; returns ``(kind, dict of column arrays)``."""
    kind = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("kind="):
                        kind = token[5:]
                continue
            if line.strip():
                rows.append(line.strip())
    if not rows:
        raise CurveError(f"{path}: no data")
    reader = csv.reader(rows)
    header = next(reader)
    cols = {h: [] for h in header}
    for r in reader:
        for h, v in zip(header, r):
            cols[h].append(float(v))
    return kind, {h: np.array(v) for h, v in cols.items()}


def _check_grid(grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise CurveError("grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise CurveError("grid points must be positive")
    if np.any(np.diff(g) <= 0):
        raise CurveError("grid must be strictly increasing")
    return g


def _canonical_order(params, n_total):
    keys = [params[:, d] for d in range(params.shape[1] - 1, -1, -1)]
    return np.lexsort([n_total] + keys)


def snapshot_curves(trace: Trace, grid, kernel: Kernel = None):
    """Per-snapshot predictive density and survival, each ``(snapshots, grid)``."""
    if len(trace) == 0:
        raise CurveError("trace holds no snapshots")
    g = _check_grid(grid)
    kernel = kernel_from_trace(trace) if kernel is None else kernel
    n = trace.n
    dens = np.empty((len(trace), g.size))
    surv = np.empty((len(trace), g.size))
    col = g[:, None]
    for s, snap in enumerate(trace.snapshots):
        order = _canonical_order(snap.params, snap.n_total)
        params = snap.params[order]
        w = snap.n_total[order] / (n + snap.nu)
        w0 = snap.nu / (n + snap.nu)
        rng = np.random.default_rng([s, snap.iteration])
        f = np.exp(kernel.logpdf(col, params)) @ w
        S = np.exp(kernel.logsf(col, params)) @ w
        if w0 > 0:
            f = f + w0 * kernel.base_predictive(g, snap.hyper, "density", rng=rng)
            S = S + w0 * kernel.base_predictive(g, snap.hyper, "survival", rng=rng)
        dens[s] = np.maximum(f, 0.0)
        # strip rounding-level wiggles so each survival curve is exactly monotone
        surv[s] = np.minimum.accumulate(np.clip(S, 0.0, 1.0))
    return dens, surv


def _summarize(samples, grid, kind, band_level, metadata):
    alpha = 0.5 * (1.0 - band_level)
    mean = samples.mean(axis=0)
    lower, upper = np.quantile(samples, [alpha, 1.0 - alpha], axis=0)
    # the mean of a skewed pointwise sample can fall outside a narrow band
    lower = np.minimum(lower, mean)
    upper = np.maximum(upper, mean)
    return CurveEstimate(grid=grid, mean=mean, lower=lower, upper=upper, kind=kind,
                         band_level=band_level, samples=samples, metadata=dict(metadata))


def _metadata(trace, grid):
    t_max = trace.extra.get("t_max")
    meta = {"kernel": trace.kernel, "snapshots": len(trace)}
    if t_max is not None:
        meta["t_max"] = t_max
        meta["extrapolation"] = bool(np.any(grid > t_max))
    return meta


def predictive_curve(trace: Trace, grid, kind="density", band_level=0.95,
                     kernel: Kernel = None) -> CurveEstimate:
    """Posterior-mean curve of ``kind`` with a pointwise central band.

    ``kind`` is one of ``density``, ``cdf``, ``survival``, ``hazard``.  The
    hazard is ``f / max(S, 1e-12)`` per snapshot.  Grid points beyond the
    largest observed time are flagged in ``metadata['extrapolation']``.
    """
    if kind not in KINDS:
        raise CurveError(f"kind must be one of {KINDS}")
    if not 0 < band_level < 1:
        raise CurveError("band_level must lie in (0, 1)")
    g = _check_grid(grid)
    dens, surv = snapshot_curves(trace, g, kernel)
    meta = _metadata(trace, g)
    if kind == "density":
        return _summarize(dens, g, kind, band_level, meta)
    if kind == "survival":
        return _summarize(surv, g, kind, band_level, meta)
    if kind == "cdf":
        return _summarize(1.0 - surv, g, kind, band_level, meta)
    return _summarize(dens / np.maximum(surv, SURVIVAL_FLOOR), g, kind, band_level, meta)


def predictive_curves(trace: Trace, grid, band_level=0.95, kernel: Kernel = None):
    """All four curve kinds from one pass over the trace."""
    g = _check_grid(grid)
    dens, surv = snapshot_curves(trace, g, kernel)
    meta = _metadata(trace, g)
    d = _summarize(dens, g, "density", band_level, meta)
    s = _summarize(surv, g, "survival", band_level, meta)
    return {"density": d, "cdf": _summarize(1.0 - surv, g, "cdf", band_level, meta),
            "survival": s, "hazard": hazard_from_curves(d, s)}


def hazard_from_curves(density: CurveEstimate, survival: CurveEstimate) -> CurveEstimate:
    """Hazard ``f / S`` computed snapshot by snapshot, then summarized."""
    if density.kind != "density" or survival.kind != "survival":
        raise CurveError("need a density curve and a survival curve")
    if density.grid.shape != survival.grid.shape or np.any(density.grid != survival.grid):
        raise CurveError("density and survival curves are on different grids")
    if density.samples is None or survival.samples is None:
        raise CurveError("per-snapshot samples are required")
    if density.samples.shape != survival.samples.shape:
        raise CurveError("curves come from different traces")
    h = density.samples / np.maximum(survival.samples, SURVIVAL_FLOOR)
    return _summarize(h, density.grid, "hazard", density.band_level, density.metadata)


def default_grid(times, points=200):
    """``points`` equally spaced times on ``[min(t)/2, 1.2 max(t)]``."""
    t = np.asarray(times, dtype=float)
    return np.linspace(t.min() / 2.0, 1.2 * t.max(), points)
