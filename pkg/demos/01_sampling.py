# %% [markdown]
# Drawing estimation tasks
#
# A task is a parameter vector drawn from a prior box plus a sample drawn
# from the distribution with those parameters. Everything is seeded through
# counter-based streams, so task i of a run can be regenerated on its own.

# %%
import numpy as np

from paramformer.distributions import Rng, SizeSpec, draw_task, get_prior, sample_beta

rng = Rng(2024)
prior = get_prior("normal")
print("normal prior box:", prior.lo, prior.hi)

# %%
task = draw_task(rng.derive(0, 0), "normal", prior, SizeSpec.fixed(30))
print("true (mu, sigma):", task.true_params)
print("sample mean / std:", task.sample.mean(), task.sample.std())

# the same coordinates give the same task, a different index gives another one
again = draw_task(Rng(2024).derive(0, 0), "normal", prior, SizeSpec.fixed(30))
print("reproducible:", np.array_equal(task.sample, again.sample))

# %% [markdown]
# Sample sizes can be fixed or log-uniform on [10, 100].

# %%
sizes = [draw_task(rng.derive(1, i), "exponential", get_prior("exponential"),
                   SizeSpec.log_uniform()).n for i in range(5000)]
print("log-uniform sizes: min", min(sizes), "median", int(np.median(sizes)), "max", max(sizes))

# %%
x = sample_beta(Rng(1), 2.0, 5.0, 100_000)
print("Beta(2, 5) mean", x.mean(), "expected", 2 / 7)
