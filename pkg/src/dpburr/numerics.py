"""Shared numerical machinery: univariate slice sampling, exact 1-D
inversion sampling on a bounded interval, and vectorized quadrature."""

import math

import numpy as np
from scipy import integrate, optimize


class QuadratureError(ArithmeticError):
    pass


def slice_sample(x0, logpdf, rng, lower=-math.inf, upper=math.inf, width=1.0,
                 max_steps=50, logp0=None):
    """One stepping-out / shrinkage slice-sampling update of a scalar.

    Parameters
    ----------
    x0 : float
        Current state; must have finite ``logpdf(x0)``.
    logpdf : callable
        Log of the unnormalized target.
    lower, upper : float
        Support bounds (open); the bracket is clipped to them.
    width : float
        Initial bracket width.
    max_steps : int
        Cap on stepping-out expansions on each side.

    Returns
    -------
    x, logp : float, float
    """
    if logp0 is None:
        logp0 = logpdf(x0)
    if not math.isfinite(logp0):
        raise ValueError(f"slice sampler started at a point of zero density (x={x0!r})")
    log_y = logp0 + math.log(1.0 - rng.random())
    r = rng.random()
    left = x0 - r * width
    right = left + width
    if left < lower:
        left = lower
    if right > upper:
        right = upper

    j = int(rng.random() * max_steps)
    m = max_steps - 1 - j
    while j > 0 and left > lower and logpdf(left) > log_y:
        left -= width
        j -= 1
        if left < lower:
            left = lower
    while m > 0 and right < upper and logpdf(right) > log_y:
        right += width
        m -= 1
        if right > upper:
            right = upper

    for _ in range(200):
        x1 = left + rng.random() * (right - left)
        if lower < x1 < upper:
            lp1 = logpdf(x1)
            if lp1 > log_y:
                return x1, lp1
        if x1 < x0:
            left = x1
        else:
            right = x1
    # bracket collapsed onto x0 (only possible through floating-point ties)
    return x0, logp0


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def gauss_legendre_panels(f, a, b, panels):
    """Composite 16-point Gauss-Legendre integral of a vectorized ``f``.

    ``f`` receives a 1-D array of nodes and returns either values of the
    same shape or an array ``(nodes, m)``; the node axis is summed out.
    """
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    vals = np.asarray(f(nodes))
    if vals.ndim == 1:
        return float(np.dot(w, vals))
    return np.tensordot(w, vals, axes=(0, 0))


def integrate_vector(f, a, b, epsrel=1e-8, epsabs=1e-12, pilot_panels=4):
    """Adaptive Gauss-Kronrod integral of a vector-valued integrand.

    ``f(x)`` maps a scalar to a 1-D array and must broadcast when ``x`` is a
    column vector of nodes.  Each component is rescaled by a
    Gauss-Legendre pilot estimate so the shared max-norm error control acts
    as a per-component relative tolerance.
    """
    pilot = gauss_legendre_panels(lambda x: f(x[:, None]), a, b, pilot_panels)
    scale = np.where(np.abs(pilot) > epsabs, np.abs(pilot), 1.0)
    res, err = integrate.quad_vec(lambda x: f(x) / scale, a, b, epsrel=epsrel * 0.1,
                                  epsabs=epsabs, norm="max", limit=2000)
    if not np.all(np.isfinite(res)):
        raise QuadratureError("non-finite quadrature result")
    if err > max(epsrel, epsabs):
        raise QuadratureError(f"quadrature did not reach tolerance (estimated error {err:.2e})")
    return res * scale


def sample_inverse_cdf(logpdf_vec, a, b, rng, panels=64, tol=1e-12):
    """Exact draw from the density ``exp(logpdf_vec)`` on ``(a, b)``.

    The distribution function is assembled from composite Gauss-Legendre
    panel masses; the panel holding the target probability is located by
    search and the root inside it found with Brent's method on the
    panel-local integral.
    """
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half * _GL_NODES[None, :])
    logv = logpdf_vec(nodes.ravel()).reshape(nodes.shape)
    shift = np.max(logv)
    if not np.isfinite(shift):
        raise QuadratureError("density vanishes on the whole interval")
    v = np.exp(logv - shift)
    masses = half * (v @ _GL_WEIGHTS)
    cum = np.cumsum(masses)
    target = rng.random() * cum[-1]
    j = min(int(np.searchsorted(cum, target, side="right")), panels - 1)
    lo = edges[j]
    resid = target - (cum[j - 1] if j > 0 else 0.0)

    def partial(x):
        h = 0.5 * (x - lo)
        if h <= 0:
            return -resid
        xs = lo + h + h * _GL_NODES
        return h * float(np.exp(logpdf_vec(xs) - shift) @ _GL_WEIGHTS) - resid

    hi = edges[j + 1]
    f_hi = partial(hi)
    if f_hi <= 0:
        return float(hi)
    if resid <= 0:
        return float(lo)
    return float(optimize.brentq(partial, lo, hi, xtol=tol * max(1.0, abs(hi))))
