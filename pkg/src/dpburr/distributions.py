"""Burr(XII) primitives, the standard variate generators used by the
samplers, and a truncated stick-breaking simulator for the DP prior.

Parameterizations used throughout the package:

* ``Gamma(shape, scale)``      mean ``shape * scale``
* ``InvGamma(a, b)``           mean ``b / (a - 1)``
* ``Pareto(a, b)``             density ``a b^a / x^(a+1)`` on ``x > b``
* ``Exponential(mean)``        mean ``mean``
* ``Beta(a, b)``               standard

Burr(XII) with exponent ``c`` and tail parameter ``k`` has

    pdf(t) = c k t^(c-1) / (1 + t^c)^(k+1)
    cdf(t) = 1 - (1 + t^c)^(-k)

``c`` is traditionally called the scale parameter of the Burr(XII)
family although it enters as a shape exponent.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special


class DomainError(ValueError):
    """Argument outside the support or parameter space of a distribution."""


def _check_positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class BurrParams:
    """Burr(XII) kernel parameters ``(c, k)``, both strictly positive."""

    c: float
    k: float

    def __post_init__(self):
        _check_positive(self.c, "c")
        _check_positive(self.k, "k")

    def as_tuple(self):
        return (self.c, self.k)


def log1p_pow(t, c):
    """Stable ``log(1 + t**c)`` for ``t > 0``.

    ``t**c`` is formed as ``exp(c log t)`` inside ``logaddexp`` so that
    neither overflow (large ``t**c``) nor loss of precision (tiny
    ``t**c``) occurs.
    """
    return np.logaddexp(0.0, c * np.log(t))


def burr_logpdf(t, c, k):
    """Log density of Burr(XII), vectorized over all arguments."""
    t = np.asarray(t, dtype=float)
    lt = np.log(t)
    return np.log(c) + np.log(k) + (c - 1.0) * lt - (k + 1.0) * np.logaddexp(0.0, c * lt)


def burr_logsf(t, c, k):
    """Log survival ``log(1 - K_B(t))`` of Burr(XII)."""
    return -k * log1p_pow(np.asarray(t, dtype=float), c)


def _validate_times(t, allow_zero=False):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("times must be finite")
    if allow_zero:
        if np.any(arr < 0):
            raise DomainError("times must be non-negative")
    elif np.any(arr <= 0):
        raise DomainError("times must be strictly positive")
    return arr


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def burr_pdf(t, p: BurrParams):
    """Burr(XII) density at ``t > 0``; evaluated in log space."""
    arr = _validate_times(t)
    return _scalar_or_array(np.exp(burr_logpdf(arr, p.c, p.k)), t)


def burr_cdf(t, p: BurrParams):
    """Burr(XII) distribution function at ``t >= 0``."""
    arr = _validate_times(t, allow_zero=True)
    with np.errstate(divide="ignore"):
        out = -np.expm1(-p.k * np.logaddexp(0.0, p.c * np.log(arr)))
    return _scalar_or_array(out, t)


def burr_sf(t, p: BurrParams):
    arr = _validate_times(t, allow_zero=True)
    with np.errstate(divide="ignore"):
        out = np.exp(-p.k * np.logaddexp(0.0, p.c * np.log(arr)))
    return _scalar_or_array(out, t)


def burr_quantile(prob, p: BurrParams):
    """Inverse of :func:`burr_cdf`, ``((1-prob)^(-1/k) - 1)^(1/c)``."""
    arr = np.asarray(prob, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr >= 1):
        raise DomainError("probability must lie strictly inside (0, 1)")
    # (1-u)^(-1/k) - 1 == expm1(-log1p(-u)/k), accurate for small u
    inner = np.expm1(-np.log1p(-arr) / p.k)
    out = np.exp(np.log(inner) / p.c)
    return _scalar_or_array(out, prob)


# ---------------------------------------------------------------------------
# standard families
# ---------------------------------------------------------------------------


class _Family:
    def sample(self, rng, size=None):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(_Family):
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise DomainError("Uniform requires high > low")

    def sample(self, rng, size=None):
        return rng.uniform(self.low, self.high, size)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True)
class Exponential(_Family):
    """Exponential distribution parameterized by its mean."""

    mean_: float

    def __post_init__(self):
        _check_positive(self.mean_, "mean")

    def sample(self, rng, size=None):
        return rng.exponential(self.mean_, size)

    def cdf(self, x):
        return -np.expm1(-np.maximum(np.asarray(x, dtype=float), 0.0) / self.mean_)

    @property
    def mean(self):
        return self.mean_


@dataclass(frozen=True)
class Beta(_Family):
    a: float
    b: float

    def __post_init__(self):
        _check_positive(self.a, "a")
        _check_positive(self.b, "b")

    def sample(self, rng, size=None):
        return rng.beta(self.a, self.b, size)

    def cdf(self, x):
        return special.betainc(self.a, self.b, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    @property
    def mean(self):
        return self.a / (self.a + self.b)


@dataclass(frozen=True)
class Gamma(_Family):
    shape: float
    scale: float

    def __post_init__(self):
        _check_positive(self.shape, "shape")
        _check_positive(self.scale, "scale")

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def cdf(self, x):
        return special.gammainc(self.shape, np.maximum(np.asarray(x, dtype=float), 0.0) / self.scale)

    @property
    def mean(self):
        return self.shape * self.scale


@dataclass(frozen=True)
class InvGamma(_Family):
    a: float
    b: float

    def __post_init__(self):
        _check_positive(self.a, "a")
        _check_positive(self.b, "b")

    def sample(self, rng, size=None):
        return self.b / rng.gamma(self.a, 1.0, size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0, special.gammaincc(self.a, self.b / np.where(x > 0, x, 1.0)), 0.0)

    @property
    def mean(self):
        return self.b / (self.a - 1.0) if self.a > 1 else np.inf


@dataclass(frozen=True)
class Pareto(_Family):
    a: float
    b: float

    def __post_init__(self):
        _check_positive(self.a, "a")
        _check_positive(self.b, "b")

    def sample(self, rng, size=None):
        # inversion: b * U^(-1/a) with U in (0, 1]
        u = 1.0 - rng.random(size)
        return self.b * u ** (-1.0 / self.a)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > self.b, 1.0 - (self.b / np.maximum(x, self.b)) ** self.a, 0.0)

    @property
    def mean(self):
        return self.a * self.b / (self.a - 1.0) if self.a > 1 else np.inf


@dataclass(frozen=True)
class Burr(_Family):
    c: float
    k: float

    def __post_init__(self):
        _check_positive(self.c, "c")
        _check_positive(self.k, "k")

    @property
    def params(self):
        return BurrParams(self.c, self.k)

    def sample(self, rng, size=None):
        u = rng.random(size)
        # u == 0 has probability 2^-53; map it away from the boundary
        u = np.where(u > 0, u, np.finfo(float).tiny)
        out = burr_quantile(u, self.params)
        return float(out) if size is None else out

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return burr_cdf(x, self.params)

    @property
    def mean(self):
        if self.c * self.k <= 1:
            return np.inf
        return self.k * special.beta(self.k - 1.0 / self.c, 1.0 + 1.0 / self.c)


def sample_standard(dist: _Family, rng: np.random.Generator, size=None):
    """Draw from one of the standard families defined in this module."""
    if not isinstance(dist, _Family):
        raise DomainError(f"unsupported distribution descriptor {dist!r}")
    return dist.sample(rng, size)


# ---------------------------------------------------------------------------
# stick-breaking
# ---------------------------------------------------------------------------


@dataclass
class DiscreteMeasure:
    atoms: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.atoms) != self.weights.size:
            raise ValueError("atoms and weights differ in length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to one")

    def sample_indices(self, rng, size):
        """Indices of atoms drawn i.i.d. from the measure."""
        cum = np.cumsum(self.weights)
        return np.minimum(np.searchsorted(cum, rng.random(size) * cum[-1], side="right"),
                          len(cum) - 1)


def stick_breaking_weights(fractions):
    """``w_h = v_h prod_{l<h} (1 - v_l)`` with the leftover mass on the last atom."""
    v = np.asarray(fractions, dtype=float)
    with np.errstate(divide="ignore"):
        log_rest = np.concatenate(([0.0], np.cumsum(np.log1p(-v[:-1]))))
        w = v * np.exp(log_rest)
    w[-1] = np.exp(log_rest[-1])  # fold the tail into the final atom
    return w / w.sum()


def simulate_dp_prior(nu: float, g0: Callable[[np.random.Generator], object],
                      truncation: int, rng: np.random.Generator) -> DiscreteMeasure:
    """Truncated stick-breaking draw ``G ~ DP(nu, G0)``.

    Parameters
    ----------
    nu : float
        Concentration parameter.
    g0 : callable
        ``g0(rng)`` returns one atom from the base measure.
    truncation : int
        Number of sticks; residual mass is assigned to the last atom.
    """
    _check_positive(nu, "nu")
    if int(truncation) < 1:
        raise DomainError("truncation must be at least 1")
    truncation = int(truncation)
    v = rng.beta(1.0, nu, truncation)
    weights = stick_breaking_weights(v)
    atoms = [g0(rng) for _ in range(truncation)]
    return DiscreteMeasure(atoms, weights)


def burr_base_measure(gamma: float, phi: float):
    """``G0 = Unif(c | 0, phi) x Exp(k | mean gamma)`` as an atom generator."""
    _check_positive(gamma, "gamma")
    _check_positive(phi, "phi")

    def draw(rng):
        c = rng.uniform(0.0, phi)
        while c <= 0.0:
            c = rng.uniform(0.0, phi)
        return BurrParams(c, rng.exponential(gamma))

    return draw


__all__ = [
    "Beta", "Burr", "BurrParams", "DiscreteMeasure", "DomainError", "Exponential",
    "Gamma", "InvGamma", "Pareto", "Uniform", "burr_base_measure", "burr_cdf",
    "burr_logpdf", "burr_logsf", "burr_pdf", "burr_quantile", "burr_sf", "log1p_pow",
    "sample_standard", "simulate_dp_prior", "stick_breaking_weights",
]
