"""MCMC state snapshots and their line-delimited JSON serialization.

File layout (format ``dpburr-trace``, version 1)::

    {"format": "dpburr-trace", "version": 1, "kernel": "burr", "hyper_names": [...], ...}
    {"iteration": 2003, "nu": 0.81, "gamma": 3.2, "phi": 4.1, "n_star": 2,
     "clusters": [{"params": [2.1, 5.7], "n_total": 160, "n_observed": 160}, ...]}
    ...

The first line is a header with the kernel name, seed, sampler
configuration, data size and hyperpriors.  Each following line is one
snapshot: iteration number, concentration ``nu``, the kernel's base-measure
hyperparameters (``gamma`` and ``phi`` for Burr), the number of clusters and
the cluster list.  Floats are written with ``repr`` precision, so a file
round-trips exactly.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

FORMAT = "dpburr-trace"
VERSION = 1


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    iteration: int
    nu: float
    params: np.ndarray          # (n_star, n_params)
    n_total: np.ndarray         # (n_star,)
    n_observed: np.ndarray      # (n_star,)
    hyper: Dict[str, float] = field(default_factory=dict)

    @property
    def n_star(self):
        return int(self.n_total.size)

    @property
    def gamma(self):
        return self.hyper["gamma"]

    @property
    def phi(self):
        return self.hyper["phi"]

    def to_record(self):
        rec = {"iteration": int(self.iteration), "nu": float(self.nu)}
        for key in sorted(self.hyper):
            rec[key] = float(self.hyper[key])
        rec["n_star"] = self.n_star
        rec["clusters"] = [
            {"params": [float(v) for v in row], "n_total": int(nt), "n_observed": int(no)}
            for row, nt, no in zip(self.params, self.n_total, self.n_observed)
        ]
        return rec

    @classmethod
    def from_record(cls, rec, hyper_names):
        clusters = rec["clusters"]
        if len(clusters) != rec["n_star"]:
            raise TraceFormatError("n_star does not match the cluster list")
        params = np.array([cl["params"] for cl in clusters], dtype=float)
        return cls(
            iteration=int(rec["iteration"]),
            nu=float(rec["nu"]),
            params=params,
            n_total=np.array([cl["n_total"] for cl in clusters], dtype=int),
            n_observed=np.array([cl["n_observed"] for cl in clusters], dtype=int),
            hyper={name: float(rec[name]) for name in hyper_names},
        )


@dataclass
class Trace:
    kernel: str
    snapshots: List[Snapshot]
    n: int
    seed: int = None
    config: dict = field(default_factory=dict)
    priors: dict = field(default_factory=dict)
    hyper_names: tuple = ()
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.snapshots)

    def header(self):
        return {
            "format": FORMAT,
            "version": VERSION,
            "kernel": self.kernel,
            "hyper_names": list(self.hyper_names),
            "n": int(self.n),
            "seed": self.seed,
            "config": self.config,
            "priors": self.priors,
            "extra": self.extra,
        }

    def n_star(self):
        return np.array([s.n_star for s in self.snapshots])

    def nu(self):
        return np.array([s.nu for s in self.snapshots])

    def hyper_values(self, name):
        return np.array([s.hyper[name] for s in self.snapshots])

    def dumps(self):
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines.extend(json.dumps(s.to_record()) for s in self.snapshots)
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TraceFormatError("empty trace file")
        try:
            head = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"bad header: {exc}") from None
        if head.get("format") != FORMAT:
            raise TraceFormatError("not a dpburr trace file")
        if head.get("version") != VERSION:
            raise TraceFormatError(f"unsupported trace version {head.get('version')!r}")
        names = tuple(head["hyper_names"])
        snaps = []
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                snaps.append(Snapshot.from_record(json.loads(line), names))
            except (KeyError, json.JSONDecodeError, TypeError) as exc:
                raise TraceFormatError(f"line {lineno}: malformed snapshot ({exc})") from None
        return cls(kernel=head["kernel"], snapshots=snaps, n=head["n"], seed=head.get("seed"),
                   config=head.get("config", {}), priors=head.get("priors", {}),
                   hyper_names=names, extra=head.get("extra", {}))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def merge(cls, traces):
        """Pool the snapshots of independent chains run on the same data."""
        traces = list(traces)
        if not traces:
            raise TraceFormatError("nothing to merge")
        first = traces[0]
        for tr in traces[1:]:
            if (tr.kernel, tr.n, tuple(tr.hyper_names)) != (first.kernel, first.n,
                                                             tuple(first.hyper_names)):
                raise TraceFormatError("chains differ in kernel, data size or hyperparameters")
        if len(traces) == 1:
            return first
        snaps = [s for tr in traces for s in tr.snapshots]
        extra = dict(first.extra, chains=len(traces), chain_seeds=[tr.seed for tr in traces])
        return cls(kernel=first.kernel, snapshots=snaps, n=first.n, seed=first.seed,
                   config=first.config, priors=first.priors, hyper_names=first.hyper_names,
                   extra=extra)
