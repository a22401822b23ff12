# %% [markdown]
# The two-sample t statistic from table summaries
#
# With 1e5 tasks per estimator the unpooled t statistic is
# (m1 - m2) / sqrt(s1^2/n + s2^2/n). Because the reference means and
# standard deviations are rounded to four digits, rows with a small mean
# difference can only be recovered approximately.

# %%
from paramformer.evaluation import display_p, two_sample_t

n = 100_000
rows = {
    "exponential n=10": ((0.1113, 0.1726), (0.0796, 0.1168)),
    "exponential n=100": ((0.0149, 0.0250), (0.0143, 0.0222)),
    "normal n=10": ((2.2809, 3.3162), (1.7337, 2.3722)),
}
for name, ((m1, s1), (m2, s2)) in rows.items():
    t, p = two_sample_t(m1, s1, n, m2, s2, n)
    print(f"{name:20s} t = {t:8.3f}  p = {display_p(p):.4f}  (raw {p:.3g})")

# %%
# how far can rounding move the n=100 row? the mean difference is only 0.0006 +- 0.0001
lo = two_sample_t(0.01485, 0.0250, n, 0.01435, 0.0222, n)[0]
hi = two_sample_t(0.01495, 0.0250, n, 0.01425, 0.0222, n)[0]
print(f"t for means inside their rounding intervals: {lo:.2f} .. {hi:.2f}")
