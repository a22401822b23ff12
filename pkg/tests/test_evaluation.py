import json
import math

import numpy as np
import pytest

from paramformer.baselines import make_baseline
from paramformer.distributions import SizeSpec, get_prior
from paramformer.errors import InvalidArgumentError, UndefinedStatisticError
from paramformer.evaluation import (
    EvalReport, OracleEstimator, display_p, evaluate, held_out_tasks, summarize, two_sample_t,
)

EXPO = get_prior("exponential")


def test_oracle_errors_exactly_zero():
    errs = evaluate(OracleEstimator(), "normal", "known", get_prior("normal"), "30", 500, seed=1)
    assert errs.count == 500 and np.all(errs.errors == 0)


def test_same_seed_same_errors():
    est = make_baseline("exponential", "known", EXPO)
    a = evaluate(est, "exponential", "known", EXPO, "10-100", 3000, seed=4, chunk=1000)
    b = evaluate(est, "exponential", "known", EXPO, "10-100", 3000, seed=4)
    assert np.array_equal(a.errors, b.errors)


def test_different_seed_different_tasks():
    a = held_out_tasks("exponential", EXPO, SizeSpec.fixed(5), 3, seed=1)
    b = held_out_tasks("exponential", EXPO, SizeSpec.fixed(5), 3, seed=2)
    assert not np.array_equal(a[0].sample, b[0].sample)


def test_mle_exponential_n100_mean():
    # reported value 0.0149 over 1e5 tasks; 2e4 tasks keeps this quick (SE ~1.2%)
    est = make_baseline("exponential", "known", EXPO)
    m, _ = summarize(evaluate(est, "exponential", "known", EXPO, "100", 20_000, seed=1))
    assert abs(m - 0.0149) < 0.05 * 0.0149


class Flaky:
    id = "flaky"

    def estimate_tasks(self, tasks):
        if any(t.sample[0] > 1.5 for t in tasks):
            raise InvalidArgumentError("boom")
        return np.array([t.true_params for t in tasks])


def test_failures_raise_by_default():
    with pytest.raises(InvalidArgumentError):
        evaluate(Flaky(), "exponential", "known", EXPO, "10", 200, seed=0)


def test_failures_counted_when_skipped():
    errs = evaluate(Flaky(), "exponential", "known", EXPO, "10", 200, seed=0, skip_failures=True)
    assert errs.failures > 0 and errs.count + errs.failures == 200
    assert np.all(errs.errors == 0)


def test_summarize_constant():
    assert summarize([1.0, 1.0, 1.0]) == (1.0, 0.0)


def test_summarize_n_minus_one():
    m, s = summarize([0.0, 2.0])
    assert m == 1.0 and math.isclose(s, math.sqrt(2))


def test_summarize_too_few():
    with pytest.raises(InvalidArgumentError):
        summarize([1.0])


def test_t_table2_n10():
    t, p = two_sample_t(0.1113, 0.1726, 10**5, 0.0796, 0.1168, 10**5)
    assert abs(t - 48.101) < 0.01 and display_p(p) == 1e-4


def test_t_table4_n10():
    t, _ = two_sample_t(2.2809, 3.3162, 10**5, 1.7337, 2.3722, 10**5)
    assert abs(t - 42.439) < 0.01


def test_t_equal_means():
    assert two_sample_t(1.0, 0.5, 100, 1.0, 0.7, 200) == (0.0, 1.0)


def test_t_antisymmetric():
    t1, p1 = two_sample_t(0.3, 0.2, 50, 0.25, 0.1, 70)
    t2, p2 = two_sample_t(0.25, 0.1, 70, 0.3, 0.2, 50)
    assert t1 == -t2 and p1 == p2


def test_t_p_value_normal_tail():
    # |t| = 1.959964 -> two-sided 0.05
    _, p = two_sample_t(1.959964, 1.0, 2, 0.0, 1.0, 2)
    assert abs(p - 0.05) < 1e-6 * 1.4 + 1e-6


def test_t_zero_spread():
    with pytest.raises(UndefinedStatisticError):
        two_sample_t(1.0, 0.0, 10, 2.0, 0.0, 10)


def test_t_small_groups():
    with pytest.raises(InvalidArgumentError):
        two_sample_t(1.0, 1.0, 1, 2.0, 1.0, 10)


def test_raw_p_is_kept_below_display_floor():
    _, p = two_sample_t(0.1113, 0.1726, 10**5, 0.0796, 0.1168, 10**5)
    assert 0 < p < 1e-4


def report(**kw):
    base = dict(estimator="mle-exponential-capped", family="exponential", mode="known",
                size="10", trials=100000, mse_mean=0.1113, mse_std=0.1726, seed=1)
    base.update(kw)
    return EvalReport(**base)


def test_report_json_round_trip():
    r = report().compare_to(report(estimator="transformer", mse_mean=0.0796, mse_std=0.1168))
    back = EvalReport.from_json(r.to_json())
    assert back == r
    assert abs(back.comparison["t_value"] - 48.101) < 0.01


def test_report_rejects_unknown_fields():
    d = report().to_dict()
    d["extra"] = 1
    with pytest.raises(InvalidArgumentError):
        EvalReport.from_dict(d)


def test_report_csv_columns():
    text = report().compare_to(report(estimator="transformer", mse_mean=0.0796, mse_std=0.1168)).to_csv()
    header, row = text.strip().split("\n")
    assert header == "estimator,family,mode,size,trials,mse_mean,mse_std,reference,t_value,p_value"
    fields = row.split(",")
    assert fields[0] == "mle-exponential-capped" and fields[7] == "transformer"
    assert fields[-1] == "0.0001"


def test_report_from_errors():
    errs = evaluate(OracleEstimator(), "exponential", "known", EXPO, "10", 10, seed=0)
    r = EvalReport.from_errors("oracle", "exponential", "known", "10", errs, seed=0)
    assert r.mse_mean == 0 and r.trials == 10
    assert json.loads(r.to_json())["mse_std"] == 0
