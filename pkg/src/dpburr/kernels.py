"""Kernel abstraction and a generic non-conjugate DPMM sampler.

The generic sampler opens new clusters through ``m`` auxiliary parameter
draws from the base measure instead of kernel-specific ``q0`` integrals,
and refreshes cluster parameters coordinate-wise by slice sampling on
member log-likelihood plus log base density.  Censored members contribute
their log survival.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import gibbs
from .elicitation import elicit, empirical_quartiles
from .gibbs import ChainState, HyperPriors, SamplerConfig, SamplerError, SurvivalData
from .numerics import slice_sample
from .trace import Trace

_LOG_2PI = math.log(2.0 * math.pi)
# median of Gamma(2, 1); IGamma(2, b) has median b / this
GAMMA2_MEDIAN = float(stats.gamma.median(2.0))
NORMAL_Q3 = float(stats.norm.ppf(0.75))


class UnknownKernelError(ValueError):
    pass


@dataclass(frozen=True)
class Coordinate:
    """Support of one kernel parameter; ``log_scale`` slices on ``log x``."""

    name: str
    lower: float = -math.inf
    upper: float = math.inf
    log_scale: bool = False


class Kernel:
    """Interface every mixture kernel implements.

    ``params`` arrays have shape ``(m, n_params)``; ``logpdf`` and ``logsf``
    broadcast a time array of shape ``(g,)`` or ``(g, 1)`` against them.
    """

    name = None
    param_names = ()
    hyper_names = ()

    def logpdf(self, t, params):
        raise NotImplementedError

    def logsf(self, t, params):
        raise NotImplementedError

    def coordinates(self, hyper):
        raise NotImplementedError

    def sample_base(self, rng, hyper, size):
        raise NotImplementedError

    def log_base(self, theta, hyper):
        raise NotImplementedError

    def initial_hyper(self):
        return {}

    def update_hyper(self, state, rng):
        return state.hyper

    def base_predictive(self, grid, hyper, kind, rng=None, draws=400):
        """G0-averaged kernel density (``kind='density'``) or survival.

        Default: Monte Carlo average over ``draws`` base-measure atoms.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        atoms = self.sample_base(rng, hyper, draws)
        g = np.asarray(grid, dtype=float)[:, None]
        fn = self.logpdf if kind == "density" else self.logsf
        return np.exp(fn(g, atoms)).mean(axis=1)

    def settings(self):
        return {}


class BurrKernel(Kernel):
    """Burr(XII) kernel with ``G0 = Unif(0, phi) x Exp(mean gamma)`` and random ``(gamma, phi)``."""

    name = "burr"
    param_names = ("c", "k")
    hyper_names = ("gamma", "phi")

    def __init__(self, b_gamma, b_phi, a_gamma=2.0, a_phi=2.0):
        self.priors = HyperPriors(b_gamma=b_gamma, b_phi=b_phi, a_gamma=a_gamma, a_phi=a_phi)

    @classmethod
    def from_data(cls, times):
        e = elicit(times)
        return cls(b_gamma=e.b_gamma, b_phi=e.b_phi)

    def logpdf(self, t, params):
        c, k = params[..., 0], params[..., 1]
        lt = np.log(t)
        return np.log(c) + np.log(k) + (c - 1.0) * lt - (k + 1.0) * np.logaddexp(0.0, c * lt)

    def logsf(self, t, params):
        return -params[..., 1] * np.logaddexp(0.0, params[..., 0] * np.log(t))

    def coordinates(self, hyper):
        return (Coordinate("c", 0.0, hyper["phi"]), Coordinate("k", 0.0, math.inf, log_scale=True))

    def sample_base(self, rng, hyper, size):
        c = hyper["phi"] * (1.0 - rng.random(size))
        return np.column_stack([c, rng.gamma(1.0, hyper["gamma"], size)])

    def log_base(self, theta, hyper):
        c, k = theta
        if not (0.0 < c < hyper["phi"]) or k <= 0:
            return -math.inf
        return -math.log(hyper["phi"]) - math.log(hyper["gamma"]) - k / hyper["gamma"]

    def initial_hyper(self):
        return {"gamma": self.priors.b_gamma, "phi": 2.0 * self.priors.b_phi}

    def update_hyper(self, state, rng):
        gibbs.update_phi(state, self.priors, rng)
        gibbs.update_gamma(state, self.priors, rng)
        return state.hyper

    def base_predictive(self, grid, hyper, kind, rng=None, draws=None):
        g = np.asarray(grid, dtype=float)
        gamma, phi = hyper["gamma"], hyper["phi"]
        if kind == "density":
            return gibbs.q0_vector(g, np.zeros(g.size, bool), 1.0, gamma, phi)
        return gibbs.q0_vector(g, np.ones(g.size, bool), 1.0, gamma, phi)

    def settings(self):
        return {"b_gamma": self.priors.b_gamma, "b_phi": self.priors.b_phi,
                "a_gamma": self.priors.a_gamma, "a_phi": self.priors.a_phi}


class WeibullKernel(Kernel):
    """Weibull(shape, scale) kernel.

    Base measure ``shape ~ Unif(0, phi_w)`` with ``phi_w ~ Pareto(2, b_phi)``
    resampled each sweep, and ``scale ~ IGamma(2, b_scale)`` with fixed
    ``b_scale``.
    """

    name = "weibull"
    param_names = ("shape", "scale")
    hyper_names = ("phi",)

    def __init__(self, b_phi, b_scale, a_phi=2.0):
        self.b_phi, self.b_scale, self.a_phi = float(b_phi), float(b_scale), float(a_phi)

    @classmethod
    def from_data(cls, times):
        """Median/upper-quartile match of Weibull quantiles ``scale (-log(1-p))^(1/shape)``."""
        q1, q2, q3 = empirical_quartiles(times)
        if q3 > q2 > 0:
            shape = (math.log(math.log(4.0)) - math.log(math.log(2.0))) / math.log(q3 / q2)
        else:
            shape = 1.0
        scale = q2 / math.log(2.0) ** (1.0 / shape)
        return cls(b_phi=4.0 * shape / 3.0, b_scale=scale * GAMMA2_MEDIAN)

    def logpdf(self, t, params):
        a, s = params[..., 0], params[..., 1]
        z = np.log(t) - np.log(s)
        return np.log(a) - np.log(s) + (a - 1.0) * z - np.exp(a * z)

    def logsf(self, t, params):
        a, s = params[..., 0], params[..., 1]
        return -np.exp(a * (np.log(t) - np.log(s)))

    def coordinates(self, hyper):
        return (Coordinate("shape", 0.0, hyper["phi"]),
                Coordinate("scale", 0.0, math.inf, log_scale=True))

    def sample_base(self, rng, hyper, size):
        shape = hyper["phi"] * (1.0 - rng.random(size))
        return np.column_stack([shape, self.b_scale / rng.gamma(2.0, 1.0, size)])

    def log_base(self, theta, hyper):
        a, s = theta
        if not (0.0 < a < hyper["phi"]) or s <= 0:
            return -math.inf
        return -math.log(hyper["phi"]) - 3.0 * math.log(s) - self.b_scale / s

    def initial_hyper(self):
        return {"phi": 2.0 * self.b_phi}

    def update_hyper(self, state, rng):
        a = self.a_phi + state.n_star
        b = max(self.b_phi, float(np.max(state.params[:, 0])))
        state.hyper["phi"] = b * (1.0 - rng.random()) ** (-1.0 / a)
        return state.hyper

    def settings(self):
        return {"b_phi": self.b_phi, "b_scale": self.b_scale, "a_phi": self.a_phi}


class LogNormalKernel(Kernel):
    """Log-normal kernel with parameters ``(mu, sigma2)`` on the log-time scale.

    Base measure ``mu ~ N(loc, spread^2)`` with fixed diffuse ``spread`` and
    ``sigma2 ~ IGamma(2, b_sigma2)``.
    """

    name = "lognormal"
    param_names = ("mu", "sigma2")
    hyper_names = ()

    def __init__(self, loc, b_sigma2, spread=2.0):
        self.loc, self.b_sigma2, self.spread = float(loc), float(b_sigma2), float(spread)

    @classmethod
    def from_data(cls, times, spread=2.0):
        q1, q2, q3 = empirical_quartiles(times)
        sigma = (math.log(q3) - math.log(q1)) / (2.0 * NORMAL_Q3) if q3 > q1 > 0 else 1.0
        return cls(loc=math.log(q2), b_sigma2=sigma**2 * GAMMA2_MEDIAN, spread=spread)

    def logpdf(self, t, params):
        mu, s2 = params[..., 0], params[..., 1]
        lt = np.log(t)
        return -lt - 0.5 * (_LOG_2PI + np.log(s2)) - (lt - mu) ** 2 / (2.0 * s2)

    def logsf(self, t, params):
        mu, s2 = params[..., 0], params[..., 1]
        return special.log_ndtr(-(np.log(t) - mu) / np.sqrt(s2))

    def coordinates(self, hyper):
        return (Coordinate("mu"), Coordinate("sigma2", 0.0, math.inf, log_scale=True))

    def sample_base(self, rng, hyper, size):
        return np.column_stack([rng.normal(self.loc, self.spread, size),
                                self.b_sigma2 / rng.gamma(2.0, 1.0, size)])

    def log_base(self, theta, hyper):
        mu, s2 = theta
        if s2 <= 0:
            return -math.inf
        return (-0.5 * ((mu - self.loc) / self.spread) ** 2
                - 3.0 * math.log(s2) - self.b_sigma2 / s2)

    def settings(self):
        return {"loc": self.loc, "b_sigma2": self.b_sigma2, "spread": self.spread}


KERNELS = {"burr": BurrKernel, "weibull": WeibullKernel, "lognormal": LogNormalKernel}


def get_kernel_class(name):
    try:
        return KERNELS[name]
    except KeyError:
        raise UnknownKernelError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def kernel_from_data(name, times):
    return get_kernel_class(name).from_data(times)


def kernel_from_trace(trace: Trace) -> Kernel:
    cls = get_kernel_class(trace.kernel)
    settings = trace.extra.get("kernel_settings")
    if settings is None and trace.kernel == "burr":
        settings = {"b_gamma": trace.priors["b_gamma"], "b_phi": trace.priors["b_phi"],
                    "a_gamma": trace.priors.get("a_gamma", 2.0),
                    "a_phi": trace.priors.get("a_phi", 2.0)}
    return cls(**settings)


# ---------------------------------------------------------------------------
# generic sampler
# ---------------------------------------------------------------------------


def _member_loglik(kernel, theta, t_obs, t_cens):
    p = np.asarray(theta)[None, :]
    out = 0.0
    if t_obs.size:
        out += float(kernel.logpdf(t_obs[:, None], p).sum())
    if t_cens.size:
        out += float(kernel.logsf(t_cens[:, None], p).sum())
    return out


def _slice_params(kernel, theta, hyper, t_obs, t_cens, rng):
    theta = np.array(theta, dtype=float)
    for d, coord in enumerate(kernel.coordinates(hyper)):
        def logp(x, d=d, coord=coord):
            th = theta.copy()
            th[d] = math.exp(x) if coord.log_scale else x
            lb = kernel.log_base(th, hyper)
            if not math.isfinite(lb):
                return -math.inf
            val = lb + _member_loglik(kernel, th, t_obs, t_cens)
            if not math.isfinite(val):
                return -math.inf
            return val + (x if coord.log_scale else 0.0)

        if coord.log_scale:
            lo = math.log(coord.lower) if coord.lower > 0 else -math.inf
            hi = math.log(coord.upper) if math.isfinite(coord.upper) else math.inf
            x, _ = slice_sample(math.log(theta[d]), logp, rng, lo, hi, width=1.0)
            theta[d] = math.exp(x)
        else:
            bounded = math.isfinite(coord.lower) and math.isfinite(coord.upper)
            width = (coord.upper - coord.lower) / 8.0 if bounded else 1.0
            theta[d], _ = slice_sample(theta[d], logp, rng, coord.lower, coord.upper, width=width)
    return theta


def generic_assignment(i, state: ChainState, data: SurvivalData, kernel: Kernel, rng, m=3):
    """Reallocation of observation ``i`` with ``m`` auxiliary base-measure draws."""
    t, cens = data.times[i], bool(data.censored[i])
    j = state.assignments[i]
    state.n_total[j] -= 1
    if not cens:
        state.n_observed[j] -= 1
    aux = kernel.sample_base(rng, state.hyper, m)
    if state.n_total[j] == 0:
        aux[0] = state.params[j]
        state.remove_cluster(j)
    candidates = np.vstack([state.params, aux])
    fn = kernel.logsf if cens else kernel.logpdf
    log_lik = fn(t, candidates)
    with np.errstate(divide="ignore"):
        log_prior = np.concatenate([np.log(state.n_total),
                                    np.full(m, math.log(state.nu / m))])
    log_w = log_prior + log_lik
    log_w[~np.isfinite(log_w)] = -math.inf
    top = np.max(log_w)
    if not math.isfinite(top):
        raise SamplerError("all allocation weights vanish")
    cum = np.cumsum(np.exp(log_w - top))
    pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    pick = min(pick, cum.size - 1)
    if pick >= state.n_star:
        pick = state.add_cluster(candidates[pick], cens)
    else:
        state.n_total[pick] += 1
        if not cens:
            state.n_observed[pick] += 1
    state.assignments[i] = pick
    return state


def generic_update_params(state: ChainState, data: SurvivalData, kernel: Kernel, rng):
    members = gibbs._members(state, data.n)
    for j, idx in enumerate(members):
        cens = data.censored[idx]
        state.params[j] = _slice_params(kernel, state.params[j], state.hyper,
                                        data.times[idx[~cens]], data.times[idx[cens]], rng)
    return state


def generic_initial_state(data, kernel, config, rng):
    n_bins = min(config.init_clusters, data.n)
    z = gibbs.quantile_bins(data.times, n_bins)
    hyper = kernel.initial_hyper()
    params = kernel.sample_base(rng, hyper, n_bins)
    n_total = np.bincount(z, minlength=n_bins)
    n_observed = np.bincount(z, weights=~data.censored, minlength=n_bins).astype(int)
    nu = config.fix_nu if config.fix_nu is not None else 1.0
    return ChainState(z, params, n_total, n_observed, nu, hyper)


def fit_generic(data, kernel: Kernel, priors: HyperPriors = None,
                config: SamplerConfig = SamplerConfig(), m: int = 3) -> Trace:
    """Run the auxiliary-parameter marginal sampler for any :class:`Kernel`.

    ``priors`` supplies the Gamma prior on ``nu`` (``a_nu``, ``b_nu``); the
    base-measure hyperpriors live on the kernel.
    """
    if isinstance(kernel, str):
        raise UnknownKernelError("pass a Kernel instance; see kernel_from_data()")
    if not isinstance(kernel, Kernel):
        raise UnknownKernelError(f"not a kernel: {kernel!r}")
    if m < 1:
        raise ValueError("m must be at least 1")
    data = SurvivalData.coerce(data)
    if priors is None:
        priors = HyperPriors(b_gamma=1.0, b_phi=1.0)
    rng = np.random.default_rng(config.seed)
    state = generic_initial_state(data, kernel, config, rng)
    snapshots = []
    for it in range(1, config.iterations + 1):
        try:
            for i in range(data.n):
                generic_assignment(i, state, data, kernel, rng, m=m)
            generic_update_params(state, data, kernel, rng)
            if config.fix_nu is None:
                gibbs.update_concentration(state, data.n, priors, rng)
            kernel.update_hyper(state, rng)
        except (FloatingPointError, ValueError, ArithmeticError) as exc:
            raise SamplerError(str(exc), iteration=it) from exc
        if config.debug:
            state.check(data.n)
        if config.records(it):
            snapshots.append(state.snapshot(it))
    return Trace(kernel=kernel.name, snapshots=snapshots, n=data.n, seed=config.seed,
                 config=dict(config.to_dict(), auxiliary=m),
                 priors={"a_nu": priors.a_nu, "b_nu": priors.b_nu},
                 hyper_names=kernel.hyper_names,
                 extra={"kernel_settings": kernel.settings(), "sampler": "generic",
                        "n_censored": int(data.censored.sum()),
                        "t_min": float(data.times.min()), "t_max": float(data.times.max())})
