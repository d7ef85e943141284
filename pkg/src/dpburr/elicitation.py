"""Data-driven choice of the base-measure hyperparameters ``b_phi`` and ``b_gamma``.

Empirical quartiles are matched to Burr(XII) quartiles to obtain a prior
guess ``(c~, k~)``; the hyperparameters are then chosen so that the
marginal prior medians of ``c`` and ``k`` equal that guess.  With
``phi ~ Pareto(2, b_phi)`` and ``gamma ~ IGamma(2, b_gamma)`` the marginal
medians are ``(3/4) b_phi`` and ``(sqrt(2) - 1) b_gamma``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

logger = logging.getLogger(__name__)

SQRT2_M1 = math.sqrt(2.0) - 1.0
C_BRACKET = (1e-3, 50.0)
FALLBACK = (1.0, 1.0)


class InsufficientDataError(ValueError):
    pass


class NoSolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ElicitationResult:
    c_tilde: float
    k_tilde: float
    b_phi: float
    b_gamma: float
    residual: float
    fallback: bool = False


def empirical_quartiles(times):
    """Type-7 (linear interpolation) sample quartiles."""
    x = np.asarray(times, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"need at least 4 values, got {x.size}")
    q1, q2, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    return float(q1), float(q2), float(q3)


def burr_quartiles(c, k):
    """Closed-form Burr(XII) quartiles ``((1-p)^(-1/k) - 1)^(1/c)``."""
    return tuple(math.expm1(math.log(r) / k) ** (1.0 / c) for r in (4.0 / 3.0, 2.0, 4.0))


def _log1p_pow(q, c):
    return float(np.logaddexp(0.0, c * math.log(q)))


def solve_burr_quartiles(q1, q2, q3, bracket=C_BRACKET):
    """Fit ``(c, k)`` exactly to the median and upper quartile.

    Since ``q3^c + 1 = (q2^c + 1)^2`` for any Burr(XII), ``c`` is the root of
    ``log(1 + q3^c) - 2 log(1 + q2^c)`` (the log form of the same identity,
    numerically safer for large ``c``).  Then ``k = log 2 / log(1 + q2^c)``.

    Returns
    -------
    c_tilde, k_tilde, residual
        ``residual`` is the absolute mismatch at the lower quartile.
    """
    if not (0 < q1 < q2 < q3):
        raise ValueError("quartiles must satisfy 0 < q1 < q2 < q3")

    def g(c):
        return _log1p_pow(q3, c) - 2.0 * _log1p_pow(q2, c)

    lo, hi = bracket
    g_lo, g_hi = g(lo), g(hi)
    if not g_lo * g_hi < 0:
        raise NoSolutionError(f"no sign change of g on [{lo}, {hi}]: g={g_lo:.3g}, {g_hi:.3g}")
    c = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    k = math.log(2.0) / _log1p_pow(q2, c)
    residual = abs(burr_quartiles(c, k)[0] - q1)
    return c, k, residual


def elicit_hyperparams(c_tilde, k_tilde):
    """``(b_phi, b_gamma)`` placing the prior medians of ``c`` and ``k`` at the guess."""
    if not (c_tilde > 0 and k_tilde > 0):
        raise ValueError("prior guesses must be positive")
    return 4.0 * c_tilde / 3.0, k_tilde / SQRT2_M1


def elicit(times) -> ElicitationResult:
    """Full quartile-matching procedure with the ``(1, 1)`` fallback.

    Censored times should be passed at face value.
    """
    q1, q2, q3 = empirical_quartiles(times)
    fallback = False
    try:
        c, k, residual = solve_burr_quartiles(q1, q2, q3)
    except (NoSolutionError, ValueError) as exc:
        logger.warning("quartile matching failed (%s); using c~ = k~ = 1", exc)
        c, k = FALLBACK
        residual = abs(burr_quartiles(c, k)[0] - q1)
        fallback = True
    b_phi, b_gamma = elicit_hyperparams(c, k)
    return ElicitationResult(c, k, b_phi, b_gamma, residual, fallback)


# marginal prior of c and k after integrating out phi and gamma (d = 2)


def marginal_c_density(c, b_phi):
    """``(2 b_phi^2 / 3) max(c, b_phi)^-3`` on ``c > 0``."""
    c = np.asarray(c, dtype=float)
    return np.where(c > 0, 2.0 * b_phi**2 / 3.0 / np.maximum(c, b_phi) ** 3, 0.0)


def marginal_k_density(k, b_gamma):
    k = np.asarray(k, dtype=float)
    return np.where(k > 0, 2.0 * b_gamma**2 / (k + b_gamma) ** 3, 0.0)


def marginal_medians(b_phi, b_gamma):
    return 0.75 * b_phi, SQRT2_M1 * b_gamma
