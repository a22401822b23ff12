"""Closed-form estimators used as reference points.

Normal and exponential use their maximum likelihood estimates; Beta uses the
method of moments. With a prior attached (known-range protocol) estimates
are clamped into the prior box; without one (unknown-range protocol) the raw
formula is returned.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import Family, PriorSpec
from .errors import DegenerateSampleError, InvalidArgumentError
from .normalize import NormMode


class MoMQualityWarning(UserWarning):
    """Method-of-moments produced non-positive shape estimates (t <= 0)."""


def _sample(sample, min_n: int) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < min_n:
        raise InvalidArgumentError(f"need at least {min_n} observations, got {x.size}")
    return x


def mle_normal(sample, prior: PriorSpec | None = None) -> np.ndarray:
    """[mean, sqrt(mean squared deviation)] -- the N-denominator MLE."""
    x = _sample(sample, 2)
    mu = x.mean()
    sigma = np.sqrt(np.mean((x - mu) ** 2))
    est = np.array([mu, sigma])
    return prior.clip(est) if prior is not None else est


def mle_exponential(sample, prior: PriorSpec | None = None) -> np.ndarray:
    x = _sample(sample, 1)
    if np.any(x <= 0):
        raise InvalidArgumentError("exponential MLE needs strictly positive values")
    est = np.array([x.mean()])
    return prior.clip(est) if prior is not None else est


def mom_beta(sample, prior: PriorSpec | None = None, warn: bool = True) -> np.ndarray:
    """Method of moments: t = m(1-m)/v - 1, alpha = m*t, beta = (1-m)*t.

    ``v`` uses the N denominator. If ``t <= 0`` the moments are not
    attainable by any Beta law; with a prior the estimates clamp to its
    lower bounds, without one they are returned as computed and a
    :class:`MoMQualityWarning` is issued.
    """
    x = _sample(sample, 2)
    if np.any((x <= 0) | (x >= 1)):
        raise InvalidArgumentError("Beta sample values must lie in (0, 1)")
    m = x.mean()
    v = np.mean((x - m) ** 2)
    if not v > 0:
        raise DegenerateSampleError("Beta sample has zero variance")
    t = m * (1 - m) / v - 1
    est = np.array([m * t, (1 - m) * t])
    if prior is not None:
        return prior.lo.copy() if t <= 0 else prior.clip(est)
    if t <= 0 and warn:
        warnings.warn(f"method of moments gave t={t:.4g} <= 0", MoMQualityWarning, stacklevel=2)
    return est


@dataclass
class BaselineEstimator:
    """Closed-form estimator bound to a family; ``prior`` set means capped."""

    family: Family
    prior: PriorSpec | None = None

    def __post_init__(self):
        self.family = Family.parse(self.family)
        if self.prior is not None and self.prior.family is not self.family:
            raise InvalidArgumentError("prior family does not match estimator family")

    @property
    def kind(self) -> str:
        return {Family.NORMAL: "mle-normal", Family.EXPONENTIAL: "mle-exponential",
                Family.BETA: "mom-beta"}[self.family]

    @property
    def id(self) -> str:
        return self.kind + ("-capped" if self.prior is not None else "")

    def estimate(self, sample) -> np.ndarray:
        if self.family is Family.NORMAL:
            return mle_normal(sample, self.prior)
        if self.family is Family.EXPONENTIAL:
            return mle_exponential(sample, self.prior)
        return mom_beta(sample, self.prior, warn=False)

    def estimate_tasks(self, tasks) -> np.ndarray:
        return np.array([self.estimate(t.sample) for t in tasks])


def make_baseline(family, mode, prior: PriorSpec) -> BaselineEstimator:
    """Capped in known-range mode, plain formula in unknown-range mode."""
    capped = NormMode.parse(mode) is NormMode.KNOWN
    return BaselineEstimator(Family.parse(family), prior if capped else None)
