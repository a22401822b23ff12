# %% [markdown]
# Training the desk-scale model
#
# A 2-layer, 4-head encoder on a 64 x 64 grid learns to estimate the scale
# of an exponential distribution from 30 observations. Every batch is freshly
# simulated. At the end the model and the capped MLE are scored on the same
# 1e4 held-out tasks and compared with a two-sample t-test.
#
# Takes about 10 minutes on one CPU core. Pass a smaller example count
# (e.g. 20000) for a quick look.

# %%
import sys

from paramformer.baselines import make_baseline
from paramformer.distributions import get_prior
from paramformer.evaluation import EvalReport, evaluate
from paramformer.pipeline import TransformerEstimator
from paramformer.trainer import PRESETS, TrainConfig, train

total = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
settings = dict(PRESETS["desk"], total_examples=total, eval_every=total // 10)
config = TrainConfig(**settings, family="exponential", mode="known", size="30", seed=1,
                     checkpoint_dir="desk_run")

# %%
state, curve = train(config, progress=lambda n, m: print(f"{n:>7} examples  held-out mse {m:.4f}"))
print(curve.to_csv())

# %%
prior = get_prior("exponential")
model = TransformerEstimator(state, "exponential", "known")
mle = make_baseline("exponential", "known", prior)
reports = []
for est, name in ((mle, mle.id), (model, "transformer")):
    errs = evaluate(est, "exponential", "known", prior, "30", 10_000, seed=99)
    reports.append(EvalReport.from_errors(name, "exponential", "known", "30", errs, seed=99))

# positive t: the MLE has the larger error
print(reports[0].compare_to(reports[1]).to_csv())
