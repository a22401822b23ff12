# %% [markdown]
# Closed-form baselines by Monte Carlo
#
# Each row scores an estimator on the same seeded set of tasks. In the
# known-range protocol the MLE is clipped into the prior box; in the
# unknown-range protocol it is used as is. The Beta rows use the method of
# moments. Pass a trial count on the command line; 1e5 matches the tables.

# %%
import sys

from paramformer.baselines import make_baseline
from paramformer.distributions import get_prior
from paramformer.evaluation import EvalReport, evaluate

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
rows = [("exponential", "known"), ("exponential", "unknown"),
        ("normal", "known"), ("normal", "unknown"), ("beta", "known")]

# %%
print(EvalReport.CSV_FIELDS[:7])
for family, mode in rows:
    prior = get_prior(family)
    est = make_baseline(family, mode, prior)
    for size in ("10", "30", "100", "10-100"):
        # a Beta sample of identical values has no variance; those are excluded and counted
        errs = evaluate(est, family, mode, prior, size, trials, seed=1,
                        skip_failures=family == "beta")
        rep = EvalReport.from_errors(est.id, family, mode, size, errs, seed=1)
        print(rep.to_csv(header=False), end="")
