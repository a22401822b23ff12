"""Monte Carlo scoring of estimators and the two-sample t comparison."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import Family, PriorSpec, Rng, SizeSpec, draw_task
from .errors import DegenerateSampleError, InvalidArgumentError, UndefinedStatisticError
from .normalize import NormMode

# task i of an evaluation with seed s is drawn from Rng(s).derive(EVAL_STREAM, i);
# training draws from TRAIN_STREAM, so held-out tasks never appear in training
TRAIN_STREAM = 0
EVAL_STREAM = 1

P_DISPLAY_FLOOR = 1e-4
_P_MIN = float(np.nextafter(0.0, 1.0))


@dataclass
class ErrorSample:
    """Per-task squared errors (averaged over parameters)."""

    errors: np.ndarray
    trials: int
    failures: int = 0

    @property
    def count(self) -> int:
        return len(self.errors)


class OracleEstimator:
    """Returns the true parameters; its error is exactly zero."""

    id = "oracle"

    def estimate_tasks(self, tasks) -> np.ndarray:
        return np.array([t.true_params for t in tasks])


def held_out_tasks(family, prior: PriorSpec, size: SizeSpec, trials: int, seed: int,
                   start: int = 0):
    root = Rng(seed)
    return [draw_task(root.derive(EVAL_STREAM, i), family, prior, size)
            for i in range(start, start + trials)]


def _estimate_chunk(estimator, tasks, skip_failures):
    try:
        return estimator.estimate_tasks(tasks), np.ones(len(tasks), bool)
    except (DegenerateSampleError, InvalidArgumentError, FloatingPointError):
        if not skip_failures:
            raise
    # redo one task at a time to isolate the failures
    est, ok = [], []
    for t in tasks:
        try:
            est.append(estimator.estimate_tasks([t])[0])
            ok.append(True)
        except (DegenerateSampleError, InvalidArgumentError, FloatingPointError):
            est.append(np.full(len(t.true_params), np.nan))
            ok.append(False)
    return np.array(est), np.array(ok)


def evaluate(estimator, family, mode, prior: PriorSpec, size: SizeSpec, trials: int, seed: int,
             skip_failures: bool = False, chunk: int = 4096) -> ErrorSample:
    """Score ``estimator`` on ``trials`` seeded tasks.

    The task set depends only on (family, prior, size, trials, seed), so
    every estimator evaluated with the same arguments sees the same samples
    and the per-task errors are paired. ``mode`` is accepted for the record;
    the estimator itself decides whether it caps. A failing task raises
    unless ``skip_failures``, in which case it is excluded and counted.
    """
    family = Family.parse(family)
    NormMode.parse(mode)
    size = SizeSpec.parse(size)
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    errors, failures = [], 0
    for start in range(0, trials, chunk):
        tasks = held_out_tasks(family, prior, size, min(chunk, trials - start), seed, start)
        est, ok = _estimate_chunk(estimator, tasks, skip_failures)
        true = np.array([t.true_params for t in tasks])
        err = np.mean((np.asarray(est, dtype=float) - true) ** 2, axis=1)
        errors.append(err[ok])
        failures += int((~ok).sum())
    return ErrorSample(np.concatenate(errors), trials, failures)


def summarize(errors) -> tuple[float, float]:
    """(mean, sample std with N-1 denominator)."""
    e = errors.errors if isinstance(errors, ErrorSample) else np.asarray(errors, dtype=float)
    if len(e) < 2:
        raise InvalidArgumentError("need at least 2 errors to summarize")
    return float(np.mean(e)), float(np.std(e, ddof=1))


def two_sample_t(mean1, std1, n1, mean2, std2, n2) -> tuple[float, float]:
    """Unpooled two-sample t statistic and its two-sided p-value.

    p comes from the normal approximation, which at the sample sizes used
    here (1e5 per group) agrees with the t distribution to the reported
    precision. The raw p is returned; use :func:`display_p` for the floored
    value printed in tables.
    """
    if n1 < 2 or n2 < 2:
        raise InvalidArgumentError("each group needs at least 2 observations")
    if std1 < 0 or std2 < 0:
        raise InvalidArgumentError("standard deviations must be non-negative")
    se2 = std1 ** 2 / n1 + std2 ** 2 / n2
    if se2 == 0:
        raise UndefinedStatisticError("both groups have zero spread")
    t = (mean1 - mean2) / math.sqrt(se2)
    p = max(math.erfc(abs(t) / math.sqrt(2.0)), _P_MIN)
    return t, min(p, 1.0)


def display_p(p: float) -> float:
    return max(p, P_DISPLAY_FLOOR)


@dataclass
class EvalReport:
    estimator: str
    family: str
    mode: str
    size: str
    trials: int
    mse_mean: float
    mse_std: float
    failures: int = 0
    seed: int | None = None
    comparison: dict | None = field(default=None)

    CSV_FIELDS = ("estimator", "family", "mode", "size", "trials", "mse_mean", "mse_std",
                  "reference", "t_value", "p_value")

    @classmethod
    def from_errors(cls, estimator_id, family, mode, size, errors: ErrorSample, seed=None):
        mean, std = summarize(errors)
        return cls(estimator_id, Family.parse(family).value, NormMode.parse(mode).value,
                   str(SizeSpec.parse(size)), errors.trials, mean, std, errors.failures, seed)

    def compare_to(self, other: "EvalReport") -> "EvalReport":
        """Attach a t-test of self against ``other`` (positive t: self has larger MSE)."""
        t, p = two_sample_t(self.mse_mean, self.mse_std, self.trials - self.failures,
                            other.mse_mean, other.mse_std, other.trials - other.failures)
        self.comparison = {"reference": other.estimator, "t_value": t, "p_value": p,
                           "p_display": display_p(p)}
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        keys = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - keys
        if unknown:
            raise InvalidArgumentError(f"unknown report fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))

    def csv_row(self) -> dict:
        c = self.comparison or {}
        return {
            "estimator": self.estimator, "family": self.family, "mode": self.mode,
            "size": self.size, "trials": self.trials,
            "mse_mean": f"{self.mse_mean:.6g}", "mse_std": f"{self.mse_std:.6g}",
            "reference": c.get("reference", ""),
            "t_value": f"{c['t_value']:.6g}" if c else "",
            "p_value": f"{c['p_display']:.4g}" if c else "",
        }

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow(self.csv_row())
        return buf.getvalue()
