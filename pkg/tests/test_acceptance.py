"""Acceptance criteria A1-A9.

Reference values are the benchmark tables for the MLE / MoM
columns and the t-values. Monte Carlo runs use 1e5 tasks with seed 1.
"""

import numpy as np
import pytest

from paramformer import checkpoint
from paramformer import model as M
from paramformer.baselines import make_baseline
from paramformer.distributions import get_prior
from paramformer.encode import GridShape, decode_single, encode, locate
from paramformer.evaluation import EvalReport, evaluate, summarize, two_sample_t
from paramformer.gradcheck import check_model_gradients
from paramformer.pipeline import TransformerEstimator
from paramformer.evaluation import EVAL_STREAM, TRAIN_STREAM
from paramformer.trainer import PRESETS, TrainConfig, _tasks, make_batch, train

TRIALS = 100_000
SEED = 1
SIZES = ["10", "30", "100", "10-100"]


def mc_mse(family, mode, size, skip_failures=False):
    prior = get_prior(family)
    est = make_baseline(family, mode, prior)
    errs = evaluate(est, family, mode, prior, size, TRIALS, SEED, skip_failures=skip_failures)
    return summarize(errs)[0], errs


def check_row(family, mode, targets, tol=0.03):
    lines, ok = [], True
    for size, target in zip(SIZES, targets):
        m, _ = mc_mse(family, mode, size)
        rel = m / target - 1
        ok &= abs(rel) <= tol
        lines.append(f"n={size}: {m:.4f} vs {target} ({rel:+.1%})")
    return ok, f"{family}/{mode} " + "; ".join(lines)


def test_a1_exponential_known(record):
    ok, line = check_row("exponential", "known", [0.1113, 0.0445, 0.0149, 0.0503])
    record("A1", ok, line)
    assert ok


def test_a2_normal_known(record):
    ok, line = check_row("normal", "known", [2.2809, 0.8056, 0.2558, 0.9636])
    record("A2", ok, line)
    assert ok


def test_a3_unknown_range(record):
    ok_e, line_e = check_row("exponential", "unknown", [0.1750, 0.0586, 0.0174, 0.0730])
    ok_n, line_n = check_row("normal", "unknown", [2.8637, 0.9316, 0.2780, 1.1309])
    record("A3", ok_e and ok_n, line_e + " | " + line_n)
    assert ok_e and ok_n


BETA_TARGETS = [0.0933, 0.3313, 0.2873, 0.1756]


def test_a4_beta_mom(record):
    lines, ok, outside10 = [], True, []
    for size, target in zip(SIZES, BETA_TARGETS):
        m, errs = mc_mse("beta", "known", size, skip_failures=True)
        rel = m / target - 1
        ok &= abs(rel) <= 0.25
        if abs(rel) > 0.10:
            outside10.append(size)
        lines.append(f"n={size}: {m:.4f} vs {target} ({rel:+.0%}, {errs.failures} zero-variance samples excluded)")
    note = ("; outside +-10% at n=" + ",".join(outside10) + ", see notes in README") if outside10 else ""
    record("A4", ok, "; ".join(lines) + note)
    assert ok


REFERENCE_T = [
    # (mle mean, std), (transformer mean, std), t
    ((0.1113, 0.1726), (0.0796, 0.1168), 48.101),
    ((0.0445, 0.0727), (0.0375, 0.0631), 22.995),
    ((0.0149, 0.0250), (0.0143, 0.0222), 6.4316),
    ((0.0503, 0.0949), (0.0413, 0.0751), 23.517),
    ((0.1750, 0.3479), (0.1613, 0.2816), 9.6793),
    ((0.0586, 0.1078), (0.0584, 0.1001), 0.4299),
    ((0.0174, 0.0312), (0.0182, 0.0323), -5.2726),
    ((0.0730, 0.1763), (0.0691, 0.1468), 5.3758),
    ((2.2809, 3.3162), (1.7337, 2.3722), 42.439),
    ((0.8056, 1.2578), (0.7169, 1.0949), 16.8203),
    ((0.2558, 0.3960), (0.2492, 0.3786), 3.8418),
    ((0.9636, 1.7916), (0.8106, 1.4343), 21.0818),
]


def test_a5_reference_t_values(record):
    bad = []
    for (m1, s1), (m2, s2), t_pub in REFERENCE_T:
        t, _ = two_sample_t(m1, s1, TRIALS, m2, s2, TRIALS)
        if abs(t - t_pub) > 0.01:
            bad.append(f"{t_pub} -> {t:.4f}")
    record("A5", not bad, f"{len(REFERENCE_T) - len(bad)}/{len(REFERENCE_T)} within 0.01"
           + (f"; off: {', '.join(bad)}" if bad else ""))
    assert not bad


def test_a6_encoder(record):
    rng = np.random.default_rng(SEED)
    worst_mass = 0.0
    for shape in (GridShape(1024, 384), GridShape(64, 64)):
        for k in range(5_000):
            s = rng.random(rng.integers(1, 101))
            scheme = "seq-first" if k % 2 else "embed-first"
            total = encode(s, scheme, shape).sum(dtype=np.float64)
            worst_mass = max(worst_mass, abs(total - len(s)) / len(s))
    worst_rt = 0.0
    for shape in (GridShape(1024, 384), GridShape(64, 64)):
        vals = np.concatenate([[0.0, 1.0, 0.5], rng.random(500)])
        for scheme in ("seq-first", "embed-first"):
            for v in vals:
                err = abs(decode_single(encode([v], scheme, shape), scheme, shape) - v)
                worst_rt = max(worst_rt, err * shape.cells)
    a = locate(0.500001, "seq-first", GridShape(1024, 384))
    split_ok = (a.primary == (512, 0) and a.secondary == (512, 1)
            and abs(a.w_primary - 0.607) < 1e-3 and abs(a.w_secondary - 0.393) < 1e-3)
    ok = worst_mass <= 1e-4 and worst_rt <= 1.0 and split_ok
    record("A6", ok, f"mass rel err max {worst_mass:.2e} over 1e4 samples; round trip max "
           f"{worst_rt:.3f}/(L*K); split {a.w_primary:.6f}/{a.w_secondary:.6f} at {a.primary},{a.secondary}")
    assert ok


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk")
    cfg = TrainConfig(**PRESETS["desk"], family="exponential", mode="known", size="30",
                      seed=SEED, checkpoint_dir=str(out))
    state, curve = train(cfg)
    return cfg, state, curve, out


def test_a7_desk_training(record, desk_run):
    cfg, state, curve, _ = desk_run
    first, last = curve.points[0][1], curve.points[-1][1]
    mle, _ = mc_mse("exponential", "known", "30")
    # capped MLE on the exact held-out tasks the curve was scored on
    held_out = _tasks(cfg, EVAL_STREAM, 0, cfg.eval_tasks)
    est = make_baseline("exponential", "known", get_prior("exponential")).estimate_tasks(held_out)
    mle_same = float(np.mean((est - np.array([t.true_params for t in held_out])) ** 2))
    ok = last <= 1.5 * mle and last < first
    record("A7", ok, f"held-out MSE {first:.4f} -> {last:.4f} over {curve.points[-1][0]} examples; "
           f"capped MLE {mle:.4f} (1e5 tasks), {mle_same:.4f} on the same held-out tasks; "
           f"ratio {last / mle:.3f} (bound 1.5)")
    assert ok


def test_a8_gradient_check(record):
    cfg = M.preset_config("desk", 1)
    state = M.init_model(cfg, SEED)
    tc = TrainConfig(seed=SEED)
    grids, scale, shift, true = make_batch(tc, TRAIN_STREAM, 0, 4)
    res = check_model_gradients(state, grids, scale, shift, true, probes=100, seed=SEED)
    worst = max(res, key=lambda r: r[4])
    ok = len(res) == 100 and worst[4] < 1e-4
    record("A8", ok, f"100 probes over {len({r[0] for r in res})} tensors, max rel err {worst[4]:.2e} "
           f"at {worst[0]}{list(worst[1])}")
    assert ok


def test_a9_determinism_and_persistence(record, desk_run, tmp_path):
    cfg, state, _, out = desk_run
    prior = get_prior("exponential")
    est = TransformerEstimator(state, "exponential", "known")
    reports = [EvalReport.from_errors("transformer", "exponential", "known", "30",
                                      evaluate(est, "exponential", "known", prior, "30", 5000, 7), 7)
               for _ in range(2)]
    base = make_baseline("exponential", "known", prior)
    breps = [EvalReport.from_errors(base.id, "exponential", "known", "30",
                                    evaluate(base, "exponential", "known", prior, "30", 5000, 7), 7)
             for _ in range(2)]
    same_reports = reports[0].to_json() == reports[1].to_json() and breps[0].to_json() == breps[1].to_json()
    path = tmp_path / "a9.pfck"
    checkpoint.save(path, state)
    loaded, _ = checkpoint.load(path)
    final, _ = checkpoint.load(out / "final.pfck")
    grids = make_batch(cfg, EVAL_STREAM, 0, 256)[0]
    ref = M.predict(state, grids)
    bit_equal = np.array_equal(ref, M.predict(loaded, grids)) and np.array_equal(ref, M.predict(final, grids))
    ok = same_reports and bit_equal
    record("A9", ok, f"repeat EvalReports identical: {same_reports}; checkpoint round trip bit-identical "
           f"on 256 grids: {bit_equal}")
    assert ok
