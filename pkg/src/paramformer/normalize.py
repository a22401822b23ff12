"""Map raw samples into [0, 1] and map predictions back to parameter units.

Known-range mode uses a fixed cap-and-scale transform chosen from the
prior, and the model predicts parameters directly. Unknown-range mode
rescales each sample by its own extremes so the model never sees the
sample's scale; predictions are affinely mapped back using the stored
extremes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .distributions import Family
from .errors import DegenerateSampleError, InvalidArgumentError

# cap bounds for known-range mode: [0, 20] keeps P(x > 20) tiny for beta <= 2;
# [-35, 35] is >= 3 sigma from any mean in the default normal prior
KNOWN_CAPS = {
    Family.EXPONENTIAL: (0.0, 20.0),
    Family.NORMAL: (-35.0, 35.0),
    Family.BETA: (0.0, 1.0),
}


class NormMode(enum.Enum):
    KNOWN = "known"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value) -> "NormMode":
        if isinstance(value, NormMode):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown normalization mode {value!r}") from None


@dataclass(frozen=True)
class NormRecord:
    """Everything needed to invert a forward transform.

    ``a`` is the shift (sample minimum for unknown-range Normal, else 0) and
    ``b`` the scale anchor (sample maximum for unknown-range, the upper cap
    for known-range). ``cap_lo``/``cap_hi`` are set in known-range mode only.
    """

    mode: NormMode
    family: Family
    a: float = 0.0
    b: float = 1.0
    cap_lo: float | None = None
    cap_hi: float | None = None

    def affine(self) -> tuple[np.ndarray, np.ndarray]:
        """(scale, shift) per parameter so that estimate = raw * scale + shift."""
        p = self.family.n_params
        if self.mode is NormMode.KNOWN:
            return np.ones(p), np.zeros(p)
        if self.family is Family.EXPONENTIAL:
            return np.array([self.b]), np.zeros(1)
        span = self.b - self.a
        return np.array([span, span]), np.array([self.a, 0.0])


def _as_sample(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise InvalidArgumentError("empty sample")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("sample contains non-finite values")
    return x


def forward_known(family, sample) -> tuple[np.ndarray, NormRecord]:
    family = Family.parse(family)
    x = _as_sample(sample)
    lo, hi = KNOWN_CAPS[family]
    if family is Family.BETA:
        # support is already inside [0, 1]
        out = np.clip(x, 0.0, 1.0)
    else:
        out = (np.clip(x, lo, hi) - lo) / (hi - lo)
    return out, NormRecord(NormMode.KNOWN, family, 0.0, hi, lo, hi)


def forward_unknown(family, sample) -> tuple[np.ndarray, NormRecord]:
    family = Family.parse(family)
    x = _as_sample(sample)
    if family is Family.EXPONENTIAL:
        if np.any(x <= 0):
            raise InvalidArgumentError("exponential sample must be strictly positive")
        b = float(x.max())
        return x / b, NormRecord(NormMode.UNKNOWN, family, 0.0, b)
    if family is Family.NORMAL:
        a, b = float(x.min()), float(x.max())
        if not b > a:
            raise DegenerateSampleError("normal sample has max == min")
        out = (x - a) / (b - a)
        # guard the endpoints against rounding in the division
        return np.clip(out, 0.0, 1.0), NormRecord(NormMode.UNKNOWN, family, a, b)
    raise InvalidArgumentError(f"unknown-range mode is not defined for {family.value}")


def normalize(family, mode, sample) -> tuple[np.ndarray, NormRecord]:
    if NormMode.parse(mode) is NormMode.KNOWN:
        return forward_known(family, sample)
    return forward_unknown(family, sample)


def recover_params(family, record: NormRecord, raw) -> np.ndarray:
    family = Family.parse(family)
    if record.family is not family:
        raise InvalidArgumentError(
            f"record is for {record.family.value}, not {family.value}")
    raw = np.asarray(raw, dtype=float)
    if raw.shape[-1] != family.n_params:
        raise InvalidArgumentError(f"expected {family.n_params} raw outputs, got {raw.shape[-1]}")
    scale, shift = record.affine()
    return raw * scale + shift
