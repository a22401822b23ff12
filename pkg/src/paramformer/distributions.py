"""Seeded generation of distribution instances and their samples.

Every random quantity in the package comes from an :class:`Rng`. The
generator is numpy's Philox4x64 (a counter-based generator), keyed from the
user seed. Independent streams are addressed by placing ``(index, stream)``
in the two high words of the 256-bit Philox counter, so stream ``(s, i)``
owns 2**128 draws and never overlaps another stream. A task built from
``rng.derive(stream, i)`` is therefore the same no matter which worker
builds it or in what order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

# Smallest/largest doubles strictly inside (0, 1). Beta draws with tiny
# shape parameters underflow to exactly 0.0 or round to 1.0.
_BETA_LO = float(np.nextafter(0.0, 1.0))
_BETA_HI = float(np.nextafter(1.0, 0.0))


class Family(enum.Enum):
    NORMAL = "normal"
    EXPONENTIAL = "exponential"
    BETA = "beta"

    @property
    def param_names(self) -> tuple[str, ...]:
        return _PARAM_NAMES[self]

    @property
    def n_params(self) -> int:
        return len(_PARAM_NAMES[self])

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown family {value!r}") from None


_PARAM_NAMES = {
    Family.NORMAL: ("mu", "sigma"),
    Family.EXPONENTIAL: ("beta",),
    Family.BETA: ("alpha", "beta"),
}


class Rng:
    """Deterministic random stream.

    ``Rng(seed)`` is a root stream; ``rng.derive(stream, index)`` returns an
    independent child. The Philox key comes from the seed plus every ancestor
    coordinate except the last, and the last ``(stream, index)`` goes into the
    counter as ``[0, 0, index, stream + 1]``. The root uses counter zero, so
    it never collides with a child.
    """

    def __init__(self, seed: int, _path: tuple[tuple[int, int], ...] = ()):
        seed = int(seed)
        if seed < 0:
            raise InvalidArgumentError("seed must be non-negative")
        self.seed = seed
        self.path = tuple(_path)
        parents = [c for pair in self.path[:-1] for c in pair]
        key = np.random.SeedSequence(seed, spawn_key=parents).generate_state(2, np.uint64)
        if self.path:
            stream, index = self.path[-1]
            counter = [0, 0, index, stream + 1]
        else:
            counter = [0, 0, 0, 0]
        self.gen = np.random.Generator(np.random.Philox(key=key, counter=counter))

    def derive(self, stream: int, index: int) -> "Rng":
        if stream < 0 or index < 0:
            raise InvalidArgumentError("stream and index must be non-negative")
        return Rng(self.seed, self.path + ((int(stream), int(index)),))

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        return self.gen.uniform(lo, hi, size)

    def open_unit(self) -> float:
        """Uniform draw on the open interval (0, 1)."""
        while True:
            u = self.gen.random()
            if u > 0.0:
                return u

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be finite and > 0, got {value!r}")


def sample_normal(rng: Rng, mu: float, sigma: float, size=None):
    _check_positive("sigma", sigma)
    if not math.isfinite(mu):
        raise InvalidArgumentError(f"mu must be finite, got {mu!r}")
    return rng.gen.normal(mu, sigma, size)


def sample_exponential(rng: Rng, beta: float, size=None):
    """Draw from the scale-parameterized exponential, density exp(-x/beta)/beta."""
    _check_positive("beta", beta)
    x = rng.gen.exponential(beta, size)
    # a draw of exactly 0.0 is possible in floating point; the support is x > 0
    return np.maximum(x, np.finfo(float).tiny) if size is not None else max(x, np.finfo(float).tiny)


def sample_beta(rng: Rng, alpha: float, beta: float, size=None):
    """Exact Beta draw.

    numpy uses Johnk's rejection method when both shapes are <= 1 and the
    gamma-ratio construction otherwise; both are exact for all shapes > 0.
    Results are clamped to the representable interior of (0, 1).
    """
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)
    x = rng.gen.beta(alpha, beta, size)
    return np.clip(x, _BETA_LO, _BETA_HI) if size is not None else min(max(x, _BETA_LO), _BETA_HI)


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform ranges, one per parameter, in ``Family.param_names`` order."""

    family: Family
    ranges: tuple[tuple[float, float], ...]
    name: str = "custom"

    def __post_init__(self):
        if len(self.ranges) != self.family.n_params:
            raise InvalidArgumentError(
                f"{self.family.value} needs {self.family.n_params} ranges, got {len(self.ranges)}")
        for lo, hi in self.ranges:
            if not lo < hi:
                raise InvalidArgumentError(f"empty prior range [{lo}, {hi}]")

    @property
    def lo(self) -> np.ndarray:
        return np.array([r[0] for r in self.ranges])

    @property
    def hi(self) -> np.ndarray:
        return np.array([r[1] for r in self.ranges])

    def clip(self, params) -> np.ndarray:
        return np.clip(np.asarray(params, dtype=float), self.lo, self.hi)


PRIOR_PRESETS = {
    (Family.NORMAL, "default"): ((-5.0, 5.0), (1.0, 10.0)),
    (Family.EXPONENTIAL, "default"): ((0.5, 2.0),),
    (Family.BETA, "unit"): ((0.0, 1.0), (0.0, 1.0)),
    (Family.BETA, "wide"): ((0.5, 5.0), (0.5, 5.0)),
}
_DEFAULT_PRESET = {Family.NORMAL: "default", Family.EXPONENTIAL: "default", Family.BETA: "unit"}


def get_prior(family, preset: str | None = None) -> PriorSpec:
    family = Family.parse(family)
    preset = preset or _DEFAULT_PRESET[family]
    try:
        ranges = PRIOR_PRESETS[family, preset]
    except KeyError:
        names = sorted(p for f, p in PRIOR_PRESETS if f is family)
        raise InvalidArgumentError(f"no prior preset {preset!r} for {family.value}; have {names}") from None
    return PriorSpec(family, ranges, preset)


@dataclass(frozen=True)
class SizeSpec:
    """Sample size: ``fixed`` (always ``n``) or ``loguniform`` on [lo, hi]."""

    kind: str
    n: int = 0
    lo: int = 10
    hi: int = 100

    @classmethod
    def fixed(cls, n: int) -> "SizeSpec":
        if int(n) < 1:
            raise InvalidArgumentError("fixed sample size must be >= 1")
        return cls("fixed", int(n))

    @classmethod
    def log_uniform(cls, lo: int = 10, hi: int = 100) -> "SizeSpec":
        if not 1 <= lo < hi:
            raise InvalidArgumentError(f"bad log-uniform size range [{lo}, {hi}]")
        return cls("loguniform", 0, int(lo), int(hi))

    @classmethod
    def parse(cls, text) -> "SizeSpec":
        """``"30"`` -> fixed, ``"10-100"`` or ``"loguniform"`` -> log-uniform."""
        if isinstance(text, SizeSpec):
            return text
        s = str(text).strip().lower()
        if s in ("loguniform", "log-uniform", "lu"):
            return cls.log_uniform()
        if "-" in s:
            lo, hi = s.split("-", 1)
            try:
                return cls.log_uniform(int(lo), int(hi))
            except ValueError:
                raise InvalidArgumentError(f"bad size spec {text!r}") from None
        try:
            return cls.fixed(int(s))
        except ValueError:
            raise InvalidArgumentError(f"bad size spec {text!r}") from None

    def __str__(self):
        return str(self.n) if self.kind == "fixed" else f"{self.lo}-{self.hi}"


def log_uniform_size(u: float, lo: int = 10, hi: int = 100) -> int:
    """Map a uniform ``u`` in [0, 1] to floor(exp(ln lo + u*(ln hi - ln lo))).

    Truncation (not rounding) is deliberate: it reproduces the reference
    log-uniform baseline errors, while round-half-up sits about 2-4% low.
    """
    x = math.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))
    return min(max(int(math.floor(x)), lo), hi)


def draw_size(rng: Rng, spec: SizeSpec) -> int:
    if spec.kind == "fixed":
        return spec.n
    return log_uniform_size(rng.gen.random(), spec.lo, spec.hi)


@dataclass
class Task:
    family: Family
    true_params: np.ndarray
    sample: np.ndarray

    @property
    def n(self) -> int:
        return len(self.sample)


def draw_params(rng: Rng, prior: PriorSpec) -> np.ndarray:
    # open-interval draws keep e.g. Beta shapes strictly positive at lo=0
    return np.array([lo + (hi - lo) * rng.open_unit() for lo, hi in prior.ranges])


def draw_sample(rng: Rng, family: Family, params, n: int) -> np.ndarray:
    if family is Family.NORMAL:
        return sample_normal(rng, params[0], params[1], n)
    if family is Family.EXPONENTIAL:
        return sample_exponential(rng, params[0], n)
    return sample_beta(rng, params[0], params[1], n)


def draw_task(rng: Rng, family, prior: PriorSpec, size: SizeSpec) -> Task:
    """Parameters from the prior, then the size, then the i.i.d. sample."""
    family = Family.parse(family)
    if prior.family is not family:
        raise InvalidArgumentError(f"prior is for {prior.family.value}, not {family.value}")
    params = draw_params(rng, prior)
    n = draw_size(rng, size)
    return Task(family, params, draw_sample(rng, family, params, n))
