"""Survival datasets: CSV ingestion, the two-component Burr mixture
generator, the leukemia remission fixture and a Kaplan-Meier baseline.

CSV format: header ``time,censored``; ``censored`` is ``1`` for a
right-censored time and ``0`` for an observed failure.
"""

import csv
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .distributions import Burr, BurrParams, burr_cdf, burr_pdf
from .gibbs import Observation, SurvivalData


class DataFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DataValidationError(DataFormatError):
    pass


@dataclass
class Dataset:
    observations: List[Observation]
    label: str = ""
    time_unit: str = ""
    components: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.observations:
            raise DataValidationError("dataset is empty")
        if all(o.censored for o in self.observations):
            raise DataValidationError("dataset needs at least one uncensored observation")

    def __len__(self):
        return len(self.observations)

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.observations == other.observations)

    @property
    def times(self):
        return np.array([o.time for o in self.observations])

    @property
    def censored(self):
        return np.array([o.censored for o in self.observations], dtype=bool)

    @property
    def observed_times(self):
        return self.times[~self.censored]

    def arrays(self):
        return SurvivalData(self.times, self.censored)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text())

    def csv_text(self):
        lines = ["time,censored"]
        lines.extend(f"{o.time!r},{int(o.censored)}" for o in self.observations)
        return "\n".join(lines) + "\n"


def parse_csv(text, label=""):
    """Parse ``time,censored`` rows; errors name the 1-based line number."""
    rows = text.splitlines()
    if not rows or [h.strip().lower() for h in rows[0].split(",")] != ["time", "censored"]:
        raise DataFormatError("expected header 'time,censored'", line=1)
    obs = []
    for lineno, row in enumerate(csv.reader(rows[1:]), start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != 2:
            raise DataFormatError(f"expected 2 fields, got {len(row)}", line=lineno)
        try:
            t = float(row[0])
        except ValueError:
            raise DataFormatError(f"bad time {row[0]!r}", line=lineno) from None
        flag = row[1].strip()
        if flag not in ("0", "1"):
            raise DataFormatError(f"censored flag must be 0 or 1, got {flag!r}", line=lineno)
        if not (np.isfinite(t) and t > 0):
            raise DataValidationError(f"time must be positive, got {row[0].strip()}", line=lineno)
        obs.append(Observation(t, flag == "1"))
    return Dataset(obs, label=label)


def load_csv(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read(), label=str(path))


def simulate_mixture(n, p, comp1: BurrParams, comp2: BurrParams, seed) -> Dataset:
    """``n`` uncensored draws from ``p Burr(comp1) + (1 - p) Burr(comp2)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    first = rng.random(n) < p
    t = np.where(first, Burr(comp1.c, comp1.k).sample(rng, n), Burr(comp2.c, comp2.k).sample(rng, n))
    return Dataset([Observation(float(x), False) for x in t],
                   label=f"{p}*Burr{comp1.as_tuple()} + {1 - p}*Burr{comp2.as_tuple()}",
                   components=first)


def mixture_pdf(t, p, comp1, comp2):
    return p * burr_pdf(t, comp1) + (1.0 - p) * burr_pdf(t, comp2)


def mixture_cdf(t, p, comp1, comp2):
    return p * burr_cdf(t, comp1) + (1.0 - p) * burr_cdf(t, comp2)


# remission times in weeks; a trailing "+" marks a censored time
_LEUKEMIA = {
    "A": "1 3 3 6 7 7 10 12 14 15 18 19 22 26 28+ 29 34 40 48+ 49+",
    "B": "1 1 2 2 3 4 5 8 8 9 11 12 14 16 18 21 27+ 31 38+ 44",
}


def leukemia_fixture(arm) -> Dataset:
    """Leukemia remission times (weeks) for treatment arm ``A`` or ``B``."""
    try:
        raw = _LEUKEMIA[arm.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"arm must be 'A' or 'B', got {arm!r}") from None
    obs = [Observation(float(tok.rstrip("+")), tok.endswith("+")) for tok in raw.split()]
    return Dataset(obs, label=f"leukemia arm {arm.upper()}", time_unit="weeks")


@dataclass
class StepFunction:
    """Right-continuous step function starting at 1 and jumping at ``jump_times``."""

    jump_times: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = np.concatenate(([1.0], self.values))[idx]
        return float(out) if out.ndim == 0 else out


def kaplan_meier(data) -> StepFunction:
    """Product-limit survival estimate.

    Censored times tied with an event time count as at risk at that time.
    """
    d = SurvivalData.coerce(data)
    if d.censored.all():
        raise ValueError("need at least one uncensored observation")
    event_times = np.unique(d.times[~d.censored])
    at_risk = np.array([(d.times >= u).sum() for u in event_times])
    deaths = np.array([((d.times == u) & ~d.censored).sum() for u in event_times])
    values = np.cumprod(1.0 - deaths / at_risk)
    return StepFunction(event_times, values)
