"""Glue between raw samples and the model: normalize, encode, recover."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as M
from .distributions import Family
from .encode import EncodingScheme, GridShape, encode_batch
from .normalize import NormMode, normalize


def prepare_batch(samples, family, mode, scheme, shape: GridShape):
    """Normalize and encode a batch of raw samples.

    Returns ``(grids, scale, shift, records)`` where ``grids`` is (B, L, K)
    float32 and ``scale``/``shift`` (B, P) map raw outputs to parameters.
    """
    family = Family.parse(family)
    normed, records = [], []
    for s in samples:
        v, rec = normalize(family, mode, s)
        normed.append(v)
        records.append(rec)
    grids = encode_batch(normed, scheme, shape)
    P = family.n_params
    if records:
        aff = [r.affine() for r in records]
        scale = np.stack([a[0] for a in aff])
        shift = np.stack([a[1] for a in aff])
    else:
        scale = shift = np.zeros((0, P))
    return grids, scale, shift, records


@dataclass
class TransformerEstimator:
    """A trained model wrapped as an estimator over raw samples."""

    state: M.ModelState
    family: Family
    mode: NormMode
    scheme: EncodingScheme = EncodingScheme.SEQ_FIRST
    batch_size: int = 256
    name: str = "transformer"

    def __post_init__(self):
        self.family = Family.parse(self.family)
        self.mode = NormMode.parse(self.mode)
        self.scheme = EncodingScheme.parse(self.scheme)
        if self.state.config.n_params_out != self.family.n_params:
            raise ValueError("model output width does not match the family")

    @property
    def id(self) -> str:
        return self.name

    @property
    def shape(self) -> GridShape:
        return GridShape(self.state.config.L, self.state.config.K)

    def estimate_samples(self, samples) -> np.ndarray:
        grids, scale, shift, _ = prepare_batch(samples, self.family, self.mode, self.scheme, self.shape)
        raw = M.predict(self.state, grids, self.batch_size).astype(np.float64)
        return raw * scale + shift

    def estimate(self, sample) -> np.ndarray:
        return self.estimate_samples([sample])[0]

    def estimate_tasks(self, tasks) -> np.ndarray:
        return self.estimate_samples([t.sample for t in tasks])
