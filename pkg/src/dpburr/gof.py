"""Goodness-of-fit metrics between a reference function and its estimate."""

import json
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class GofReport:
    mare: float
    mae: float
    mse: float
    n: int
    n_mare: int = None      # points used for mare (non-zero truth)

    def to_json(self, **kw):
        return json.dumps(asdict(self), **kw)

    def to_table(self, label="estimate"):
        return format_table({label: self})


def gof_metrics(truth, estimate) -> GofReport:
    """Mean absolute relative error, mean absolute error and mean squared error.

    Points where ``truth == 0`` are left out of the relative error only;
    ``n_mare`` records how many points it used.
    """
    q = np.asarray(truth, dtype=float).ravel()
    e = np.asarray(estimate, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("empty input")
    if q.size != e.size:
        raise ValueError(f"length mismatch: {q.size} truth values vs {e.size} estimates")
    diff = q - e
    nz = q != 0
    mare = float(np.mean(np.abs(diff[nz] / q[nz]))) if nz.any() else float("nan")
    return GofReport(mare=mare, mae=float(np.mean(np.abs(diff))), mse=float(np.mean(diff**2)),
                     n=int(q.size), n_mare=int(nz.sum()))


def format_table(reports, digits=4):
    """Plain-text table with one column per labelled report (metrics as rows)."""
    labels = list(reports)
    width = max([len(l) for l in labels] + [10])
    lines = ["index".ljust(6) + "".join(l.rjust(width + 2) for l in labels)]
    for metric in ("mare", "mae", "mse"):
        vals = "".join(f"{getattr(reports[l], metric):.{digits}f}".rjust(width + 2) for l in labels)
        lines.append(metric.ljust(6) + vals)
    return "\n".join(lines)
