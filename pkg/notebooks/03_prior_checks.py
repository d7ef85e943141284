# %% [markdown]
# # What the prior implies
#
# Two views of the same DP prior: the number of clusters among 200
# observations under stick-breaking and under the Chinese restaurant
# process, and the marginal prior of the Burr parameters once the
# base-measure hyperparameters are integrated out.

# %%
import numpy as np

import dpburr
from dpburr.distributions import burr_base_measure, simulate_dp_prior
from dpburr.elicitation import elicit_hyperparams, marginal_medians

rng = np.random.default_rng(3)
n = 200
for nu in (0.5, 1.0, 5.0):
    counts = []
    for _ in range(500):
        g = simulate_dp_prior(nu, burr_base_measure(1.0, 2.0), 200, rng)
        counts.append(np.unique(g.sample_indices(rng, n)).size)
    exact = sum(nu / (nu + i) for i in range(n))
    print(f"nu={nu}: stick-breaking mean n* {np.mean(counts):.2f}, CRP expectation {exact:.2f}")

# %% [markdown]
# ## Prior medians of c and k

# %%
for c_tilde, k_tilde in ((1.0, 1.0), (2.0, 6.0)):
    b_phi, b_gamma = elicit_hyperparams(c_tilde, k_tilde)
    m = 200_000
    c = rng.uniform(0, 1, m) * b_phi * (1 - rng.random(m)) ** -0.5
    k = rng.exponential(1.0, m) * b_gamma / rng.gamma(2.0, 1.0, m)
    print(f"guess ({c_tilde}, {k_tilde}): b_phi={b_phi:.3f} b_gamma={b_gamma:.3f}; "
          f"medians theory {np.round(marginal_medians(b_phi, b_gamma), 3)}, "
          f"simulated ({np.median(c):.3f}, {np.median(k):.3f})")

# %% [markdown]
# ## Prior predictive survival
#
# With the likelihood switched off the sampler explores the prior.

# %%
data = dpburr.SurvivalData(np.linspace(0.1, 3.0, 50))
tr = dpburr.run_chain(data, dpburr.HyperPriors(b_gamma=2.414, b_phi=1.333),
                      dpburr.SamplerConfig(600, 100, 5, seed=0, prior_only=True))
s = dpburr.predictive_curve(tr, np.array([0.5, 1.0, 2.0, 5.0]), "survival")
print("prior predictive survival at 0.5, 1, 2, 5:", np.round(s.mean, 3))
