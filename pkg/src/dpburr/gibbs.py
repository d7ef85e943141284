"""Marginal Gibbs sampler for the Dirichlet process Burr(XII) mixture.

Model::

    t_i | c_i, k_i        ~ Burr(c_i, k_i)            (right censoring allowed)
    (c_i, k_i) | G        ~ G
    G                     ~ DP(nu, G0),  G0 = Unif(c | 0, phi) x Exp(k | mean gamma)
    nu, gamma, phi        ~ Gamma(a_nu, rate b_nu) x IGamma(a_gamma, b_gamma) x Pareto(a_phi, b_phi)

The random measure is integrated out.  Each sweep updates every
allocation through the Polya urn conditional, redraws the cluster
locations given their members, and then refreshes ``nu``, ``phi`` and
``gamma``.

With ``L(c) = log(1 + t^c)``, the ``k`` integrals are available in closed
form, leaving one-dimensional integrals over ``c in (0, phi)``::

    q0 (observed t) = nu / (phi gamma) * int c t^(c-1) / ((1 + t^c) (1/gamma + L)^2) dc
    q0 (censored t) = nu / (phi gamma) * int 1 / (1/gamma + L) dc

Censoring flags follow the convention ``True`` (or 1) = right-censored.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .distributions import BurrParams, DomainError
from .numerics import QuadratureError, integrate_vector, sample_inverse_cdf, slice_sample
from .trace import Snapshot, Trace

logger = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    """Numerical failure inside a chain; carries the iteration index."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class Observation:
    time: float
    censored: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time > 0):
            raise DomainError(f"failure times must be positive, got {self.time!r}")


@dataclass(frozen=True)
class HyperPriors:
    """Hyperpriors on ``nu`` (shape, rate), ``gamma`` (IGamma) and ``phi`` (Pareto)."""

    b_gamma: float
    b_phi: float
    a_nu: float = 1.0
    b_nu: float = 0.001
    a_gamma: float = 2.0
    a_phi: float = 2.0

    def __post_init__(self):
        for name in ("b_gamma", "b_phi", "a_nu", "b_nu", "a_gamma", "a_phi"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.a_gamma != 2.0 or self.a_phi != 2.0:
            warnings.warn("a_gamma = a_phi = 2 is the standard choice; elicitation assumes it",
                          stacklevel=3)

    @property
    def nonstandard(self):
        return self.a_gamma != 2.0 or self.a_phi != 2.0

    def to_dict(self):
        return asdict(self)


class SurvivalData:
    """Array view of a set of observations (times, censoring flags)."""

    def __init__(self, times, censored=None):
        self.times = np.asarray(times, dtype=float).ravel()
        if censored is None:
            censored = np.zeros(self.times.size, dtype=bool)
        self.censored = np.asarray(censored, dtype=bool).ravel()
        if self.times.size == 0:
            raise ValueError("no observations")
        if self.censored.size != self.times.size:
            raise ValueError("times and censoring flags differ in length")
        if not np.all(np.isfinite(self.times)) or np.any(self.times <= 0):
            raise DomainError("failure times must be finite and strictly positive")
        self.log_times = np.log(self.times)

    @property
    def n(self):
        return self.times.size

    @classmethod
    def coerce(cls, data):
        if isinstance(data, cls):
            return data
        obs = getattr(data, "observations", data)
        if isinstance(obs, tuple) and len(obs) == 2 and not isinstance(obs[0], Observation):
            return cls(*obs)
        obs = list(obs)
        if obs and not isinstance(obs[0], Observation):
            return cls(obs)     # bare failure times
        return cls([o.time for o in obs], [o.censored for o in obs])


# ---------------------------------------------------------------------------
# fresh-cluster masses
# ---------------------------------------------------------------------------


def _log_obs_integrand(c, lt, inv_gamma):
    L = np.logaddexp(0.0, c * lt)
    with np.errstate(divide="ignore"):
        return np.log(c) + (c - 1.0) * lt - L - 2.0 * np.log(inv_gamma + L)


def _log_cens_integrand(c, lt, inv_gamma):
    return -np.log(inv_gamma + np.logaddexp(0.0, c * lt))


def _check_scalars(nu, gamma, phi):
    for name, v in (("nu", nu), ("gamma", gamma), ("phi", phi)):
        if not (math.isfinite(v) and v >= 0) or (name != "nu" and v == 0):
            raise DomainError(f"{name} must be positive, got {v!r}")


def _scalar_q0(log_integrand, t, nu, gamma, phi):
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be positive, got {t!r}")
    _check_scalars(nu, gamma, phi)
    lt, ig = math.log(t), 1.0 / gamma
    val, err = integrate.quad(lambda c: math.exp(log_integrand(c, lt, ig)) if c > 0 else 0.0,
                              0.0, phi, epsabs=1e-14, epsrel=1e-10, limit=200)
    if not math.isfinite(val) or err > max(1e-8 * abs(val), 1e-12):
        raise QuadratureError(f"q0 quadrature failed: value={val}, error={err} "
                              f"(t={t}, gamma={gamma}, phi={phi})")
    return nu / (phi * gamma) * val


def q0_observed(t, nu, gamma, phi):
    """Fresh-cluster mass ``nu * int k_B(t | c, k) dG0(c, k)`` for an observed time."""
    return _scalar_q0(lambda c, lt, ig: float(_log_obs_integrand(c, lt, ig)), t, nu, gamma, phi)


def q0_censored(t, nu, gamma, phi):
    """Fresh-cluster mass ``nu * int (1 - K_B(t | c, k)) dG0(c, k)`` for a censored time."""
    return _scalar_q0(lambda c, lt, ig: float(_log_cens_integrand(c, lt, ig)), t, nu, gamma, phi)


def q0_vector(times, censored, nu, gamma, phi, epsrel=1e-8):
    """``q0`` for many observations at once (one adaptive vector quadrature per kind)."""
    times = np.asarray(times, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    _check_scalars(nu, gamma, phi)
    out = np.empty(times.size)
    ig = 1.0 / gamma
    for mask, fn in ((~censored, _log_obs_integrand), (censored, _log_cens_integrand)):
        if not mask.any():
            continue
        lt = np.log(times[mask])
        out[mask] = integrate_vector(lambda c, lt=lt, fn=fn: np.exp(fn(c, lt, ig)), 0.0, phi,
                                     epsrel=epsrel)
    return nu / (phi * gamma) * out


# ---------------------------------------------------------------------------
# fresh-cluster parameter draws
# ---------------------------------------------------------------------------


def _k_rate(t, c, gamma):
    return 1.0 / gamma + float(np.logaddexp(0.0, c * math.log(t)))


def h_k_conditional(t, c, gamma, censored=False):
    """``(shape, scale)`` of the Gamma law of ``k`` given ``c`` for a fresh cluster."""
    return (1.0 if censored else 2.0), 1.0 / _k_rate(t, c, gamma)


def sample_h_observed(t, gamma, phi, rng) -> BurrParams:
    """Draw ``(c, k)`` with density proportional to ``k_B(t | c, k) G0(c, k)``.

    ``c`` is drawn from its exact marginal by numerical inversion, then
    ``k | c ~ Gamma(2, scale 1 / (1/gamma + log(1 + t^c)))``.
    """
    lt, ig = math.log(t), 1.0 / gamma
    c = sample_inverse_cdf(lambda x: _log_obs_integrand(x, lt, ig), 0.0, phi, rng)
    c = min(max(c, np.nextafter(0.0, 1.0)), np.nextafter(phi, 0.0))
    return BurrParams(c, rng.gamma(*h_k_conditional(t, c, gamma, False)))


def sample_h_censored(t, gamma, phi, rng) -> BurrParams:
    """Draw ``(c, k)`` with density proportional to ``(1 - K_B(t | c, k)) G0(c, k)``.

    The ``k`` factor is ``exp(-k (1/gamma + log(1 + t^c)))`` with no
    polynomial term, so ``k | c`` is exponential (Gamma shape 1).
    """
    lt, ig = math.log(t), 1.0 / gamma
    c = sample_inverse_cdf(lambda x: _log_cens_integrand(x, lt, ig), 0.0, phi, rng)
    c = min(max(c, np.nextafter(0.0, 1.0)), np.nextafter(phi, 0.0))
    return BurrParams(c, rng.gamma(*h_k_conditional(t, c, gamma, True)))


# ---------------------------------------------------------------------------
# chain state
# ---------------------------------------------------------------------------


@dataclass
class ChainState:
    """Mutable Gibbs state.  Cluster ``j`` has parameters ``params[j]``.

    For the Burr kernel ``params[:, 0]`` is ``c*`` and ``params[:, 1]`` is ``k*``
    and ``hyper`` holds ``gamma`` and ``phi``.
    """

    assignments: np.ndarray
    params: np.ndarray
    n_total: np.ndarray
    n_observed: np.ndarray
    nu: float
    hyper: dict = field(default_factory=dict)

    @property
    def n_star(self):
        return int(self.n_total.size)

    @property
    def gamma(self):
        return self.hyper["gamma"]

    @gamma.setter
    def gamma(self, value):
        self.hyper["gamma"] = value

    @property
    def phi(self):
        return self.hyper["phi"]

    @phi.setter
    def phi(self, value):
        self.hyper["phi"] = value

    @property
    def c(self):
        return self.params[:, 0]

    @property
    def k(self):
        return self.params[:, 1]

    @property
    def clusters(self):
        return [{"params": BurrParams(*row) if row.size == 2 else tuple(row),
                 "n_total": int(nt), "n_observed": int(no)}
                for row, nt, no in zip(self.params, self.n_total, self.n_observed)]

    def copy(self):
        return ChainState(self.assignments.copy(), self.params.copy(), self.n_total.copy(),
                          self.n_observed.copy(), self.nu, dict(self.hyper))

    def remove_cluster(self, j):
        self.params = np.delete(self.params, j, axis=0)
        self.n_total = np.delete(self.n_total, j)
        self.n_observed = np.delete(self.n_observed, j)
        self.assignments[self.assignments > j] -= 1

    def add_cluster(self, theta, censored):
        self.params = np.vstack([self.params, np.asarray(theta, dtype=float)[None, :]])
        self.n_total = np.append(self.n_total, 1)
        self.n_observed = np.append(self.n_observed, 0 if censored else 1)
        return self.n_total.size - 1

    def snapshot(self, iteration):
        return Snapshot(iteration=iteration, nu=float(self.nu), params=self.params.copy(),
                        n_total=self.n_total.copy(), n_observed=self.n_observed.copy(),
                        hyper={k: float(v) for k, v in self.hyper.items()})

    def check(self, n):
        """Raise ``AssertionError`` if a structural invariant is broken."""
        assert self.n_total.sum() == n, "cluster counts do not add up to n"
        assert np.all(self.n_total >= 1), "empty cluster present"
        assert np.all(np.bincount(self.assignments, minlength=self.n_star) == self.n_total)
        assert np.all(self.n_observed <= self.n_total)
        assert self.nu > 0 and all(v > 0 for v in self.hyper.values())
        assert np.all(self.params[:, 1] > 0)
        if "phi" in self.hyper:
            assert np.all((self.params[:, 0] > 0) & (self.params[:, 0] < self.phi))


def _cluster_log_weights(state, lt, censored):
    c, k = state.params[:, 0], state.params[:, 1]
    L = np.logaddexp(0.0, c * lt)
    if censored:
        return -k * L
    return np.log(c) + np.log(k) + (c - 1.0) * lt - (k + 1.0) * L


def _categorical_with_fresh(log_w, q0, rng):
    """Index drawn from ``[exp(log_w), q0]``; ``len(log_w)`` means the fresh slot."""
    log_q0 = math.log(q0) if q0 > 0 else -math.inf
    top = max(np.max(log_w) if log_w.size else -math.inf, log_q0)
    if not math.isfinite(top):
        raise SamplerError("all allocation weights vanish")
    cum = np.cumsum(np.exp(log_w - top))
    total = (cum[-1] if cum.size else 0.0) + math.exp(log_q0 - top)
    u = rng.random() * total
    return int(np.searchsorted(cum, u, side="right"))


def update_assignment(i, state: ChainState, data, rng, q0=None, prior_only=False) -> ChainState:
    """Reallocate observation ``i`` (in place; the state is also returned).

    ``q0`` may be passed in when it has been cached for the current
    ``(nu, gamma, phi)``.  With ``prior_only`` the likelihood is replaced by a
    constant, so the allocation follows the Chinese restaurant process.
    """
    data = SurvivalData.coerce(data)
    t, cens = data.times[i], bool(data.censored[i])
    j = state.assignments[i]
    state.n_total[j] -= 1
    if not cens:
        state.n_observed[j] -= 1
    if state.n_total[j] == 0:
        state.remove_cluster(j)

    if prior_only:
        log_q = np.zeros(state.n_star)
        q0 = state.nu
    else:
        log_q = _cluster_log_weights(state, data.log_times[i], cens)
        if q0 is None:
            q0 = (q0_censored if cens else q0_observed)(t, state.nu, state.gamma, state.phi)
    with np.errstate(divide="ignore"):
        log_w = np.log(state.n_total) + log_q
    j_new = _categorical_with_fresh(log_w, q0, rng)
    if j_new == state.n_star:
        if prior_only:
            theta = (rng.uniform(0.0, state.phi), rng.exponential(state.gamma))
            while theta[0] <= 0 or theta[1] <= 0:
                theta = (rng.uniform(0.0, state.phi), rng.exponential(state.gamma))
        else:
            p = (sample_h_censored if cens else sample_h_observed)(t, state.gamma, state.phi, rng)
            theta = (p.c, p.k)
        j_new = state.add_cluster(theta, cens)
    else:
        state.n_total[j_new] += 1
        if not cens:
            state.n_observed[j_new] += 1
    state.assignments[i] = j_new
    return state


def cluster_log_target_c(c, lt_obs, lt_cens, gamma):
    """Log of the ``c*`` conditional with ``k*`` integrated out (up to a constant).

    ``n_o log c + sum_obs[(c - 1) log t - L] - (n_o + 1) log B*(c)`` where
    ``B*(c) = 1/gamma + sum over all members of L = log(1 + t^c)``.
    """
    L_obs = np.logaddexp(0.0, c * lt_obs)
    L_cens = np.logaddexp(0.0, c * lt_cens)
    n_o = lt_obs.size
    b_star = 1.0 / gamma + L_obs.sum() + L_cens.sum()
    return n_o * math.log(c) + float(((c - 1.0) * lt_obs - L_obs).sum()) - (n_o + 1) * math.log(b_star)


def cluster_k_conditional(c, times, censored, gamma):
    """``(shape, scale)`` of ``k*`` given ``c*`` and the cluster's members."""
    times = np.asarray(times, dtype=float)
    n_o = int(np.count_nonzero(~np.asarray(censored, dtype=bool)))
    b_star = 1.0 / gamma + float(np.logaddexp(0.0, c * np.log(times)).sum())
    return n_o + 1.0, 1.0 / b_star


def _members(state, n):
    order = np.argsort(state.assignments, kind="stable")
    bounds = np.concatenate(([0], np.cumsum(state.n_total)))
    return [order[bounds[j]:bounds[j + 1]] for j in range(state.n_star)]


def update_cluster_locations(state: ChainState, data, rng, prior_only=False) -> ChainState:
    """Redraw every ``(c*_j, k*_j)`` given its members.

    ``c*_j`` gets one slice-sampling update on its collapsed conditional over
    ``(0, phi)``; ``k*_j | c*_j ~ Gamma(n^o_j + 1, scale 1 / B*(c*_j))``.
    """
    data = SurvivalData.coerce(data)
    gamma, phi = state.gamma, state.phi
    if prior_only:
        for j in range(state.n_star):
            state.params[j, 0] = phi * (1.0 - rng.random())
            state.params[j, 1] = rng.gamma(1.0, gamma)
        return state
    width = phi / 8.0
    for j, idx in enumerate(_members(state, data.n)):
        cens = data.censored[idx]
        lt_obs, lt_cens = data.log_times[idx[~cens]], data.log_times[idx[cens]]
        c, _ = slice_sample(state.params[j, 0],
                            lambda x: cluster_log_target_c(x, lt_obs, lt_cens, gamma),
                            rng, lower=0.0, upper=phi, width=width)
        state.params[j, 0] = c
        state.params[j, 1] = rng.gamma(*cluster_k_conditional(c, data.times[idx], cens, gamma))
    return state


def concentration_mixture_weight(nu_shape_a, rate, n, n_star):
    """Weight on ``Gamma(a + n*, rate)`` in the two-component update of ``nu``."""
    num = nu_shape_a + n_star - 1.0
    return num / (n * rate + num)


def update_concentration(state: ChainState, n, priors: HyperPriors, rng) -> ChainState:
    """Auxiliary-variable update of ``nu``: ``u ~ Beta(nu + 1, n)`` then a Gamma mixture."""
    u = rng.beta(state.nu + 1.0, n)
    rate = priors.b_nu - math.log(u)
    p = concentration_mixture_weight(priors.a_nu, rate, n, state.n_star)
    shape = priors.a_nu + state.n_star - (0.0 if rng.random() < p else 1.0)
    state.nu = rng.gamma(shape, 1.0 / rate)
    return state


def phi_posterior(c_star, priors: HyperPriors):
    """``(shape, scale)`` of the Pareto conditional of ``phi``."""
    return priors.a_phi + len(c_star), max(priors.b_phi, float(np.max(c_star)))


def gamma_posterior(k_star, priors: HyperPriors):
    """``(a, b)`` of the inverse-gamma conditional of ``gamma``."""
    return priors.a_gamma + len(k_star), priors.b_gamma + float(np.sum(k_star))


def update_phi(state: ChainState, priors: HyperPriors, rng) -> ChainState:
    a, b = phi_posterior(state.c, priors)
    state.phi = b * (1.0 - rng.random()) ** (-1.0 / a)
    return state


def update_gamma(state: ChainState, priors: HyperPriors, rng) -> ChainState:
    a, b = gamma_posterior(state.k, priors)
    state.gamma = b / rng.gamma(a, 1.0)
    return state


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 5000
    burn_in: int = 2000
    thin: int = 3
    seed: int = 0
    init_clusters: int = 5
    prior_only: bool = False
    fix_nu: float = None
    debug: bool = False

    def __post_init__(self):
        if not (self.iterations > self.burn_in >= 0):
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.init_clusters < 1:
            raise ValueError("init_clusters must be at least 1")
        if self.fix_nu is not None and not self.fix_nu > 0:
            raise ValueError("fix_nu must be positive")

    @property
    def n_snapshots(self):
        return (self.iterations - self.burn_in) // self.thin

    def records(self, iteration):
        return iteration > self.burn_in and (iteration - self.burn_in) % self.thin == 0

    def to_dict(self):
        return asdict(self)


def quantile_bins(times, n_bins):
    """Cluster labels grouping sorted times into ``n_bins`` near-equal bins."""
    order = np.argsort(times, kind="stable")
    labels = np.empty(len(times), dtype=int)
    for j, chunk in enumerate(np.array_split(order, n_bins)):
        labels[chunk] = j
    return labels


def initial_state(data: SurvivalData, priors: HyperPriors, config: SamplerConfig, rng) -> ChainState:
    """Start from ``min(init_clusters, n)`` quantile bins with locations drawn from G0."""
    n_bins = min(config.init_clusters, data.n)
    z = quantile_bins(data.times, n_bins)
    gamma, phi = priors.b_gamma, 2.0 * priors.b_phi
    params = np.column_stack([phi * (1.0 - rng.random(n_bins)), rng.gamma(1.0, gamma, n_bins)])
    n_total = np.bincount(z, minlength=n_bins)
    n_observed = np.bincount(z, weights=~data.censored, minlength=n_bins).astype(int)
    nu = config.fix_nu if config.fix_nu is not None else 1.0
    return ChainState(z, params, n_total, n_observed, nu, {"gamma": gamma, "phi": phi})


def gibbs_sweep(state, data, priors, rng, prior_only=False, fix_nu=None):
    """One full sweep in the order allocations, locations, nu, phi, gamma."""
    if prior_only:
        q0 = np.full(data.n, state.nu)
    else:
        q0 = q0_vector(data.times, data.censored, state.nu, state.gamma, state.phi)
    for i in range(data.n):
        update_assignment(i, state, data, rng, q0=q0[i], prior_only=prior_only)
    update_cluster_locations(state, data, rng, prior_only=prior_only)
    if fix_nu is None:
        update_concentration(state, data.n, priors, rng)
    update_phi(state, priors, rng)
    update_gamma(state, priors, rng)
    return state


def run_chain(data, priors: HyperPriors, config: SamplerConfig = SamplerConfig(),
              state: ChainState = None, callback=None) -> Trace:
    """Run one chain and collect thinned post-burn-in snapshots.

    Parameters
    ----------
    data : Dataset, sequence of Observation, or SurvivalData
    priors : HyperPriors
    config : SamplerConfig
        ``prior_only`` replaces the likelihood by a constant (a test hook) and
        ``fix_nu`` holds the concentration fixed.
    state : ChainState, optional
        Starting state; by default :func:`initial_state`.
    callback : callable, optional
        ``callback(iteration, state)`` after each sweep.
    """
    data = SurvivalData.coerce(data)
    rng = np.random.default_rng(config.seed)
    if state is None:
        state = initial_state(data, priors, config, rng)
    snapshots = []
    for it in range(1, config.iterations + 1):
        try:
            gibbs_sweep(state, data, priors, rng, config.prior_only, config.fix_nu)
        except (QuadratureError, FloatingPointError, ValueError, ArithmeticError) as exc:
            raise SamplerError(str(exc), iteration=it) from exc
        if config.debug:
            state.check(data.n)
        if callback is not None:
            callback(it, state)
        if config.records(it):
            snapshots.append(state.snapshot(it))
    return Trace(kernel="burr", snapshots=snapshots, n=data.n, seed=config.seed,
                 config=config.to_dict(), priors=priors.to_dict(),
                 hyper_names=("gamma", "phi"),
                 extra={"n_censored": int(data.censored.sum()), "t_min": float(data.times.min()),
                        "t_max": float(data.times.max())})
