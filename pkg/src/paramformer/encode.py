"""Turn a normalized sample into an L x K grid of weights.

The unit interval is cut into M = L*K equal cells and each cell is one
(position, dimension) slot of the transformer input. A value v lands at
flattened index i = floor(v*M); the fractional remainder f splits its unit
weight as (1 - f) on cell i and f on cell i + 1, so the grid pins v down to
well below one cell width.

SeqFirst and EmbedFirst differ only in how a flattened index factors into
(position, dimension):

    SeqFirst:   pos = i // K, dim = i % K   (walk the dims of one position first)
    EmbedFirst: dim = i // L, pos = i % L   (walk the positions of one dim first)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


class EncodingScheme(enum.Enum):
    SEQ_FIRST = "seq-first"
    EMBED_FIRST = "embed-first"

    @classmethod
    def parse(cls, value) -> "EncodingScheme":
        if isinstance(value, EncodingScheme):
            return value
        s = str(value).strip().lower().replace("_", "-")
        aliases = {"seqfirst": "seq-first", "embedfirst": "embed-first"}
        try:
            return cls(aliases.get(s, s))
        except ValueError:
            raise InvalidArgumentError(f"unknown encoding scheme {value!r}") from None


@dataclass(frozen=True)
class GridShape:
    L: int
    K: int

    def __post_init__(self):
        if self.L < 1 or self.K < 2:
            raise InvalidArgumentError(f"grid shape needs L >= 1 and K >= 2, got {self.L}x{self.K}")

    @property
    def cells(self) -> int:
        return self.L * self.K


@dataclass(frozen=True)
class CellAssignment:
    primary: tuple[int, int]
    secondary: tuple[int, int]
    w_primary: float
    w_secondary: float


def _factor(i, scheme: EncodingScheme, shape: GridShape):
    """Flattened scheme index -> (pos, dim). Works on ints and arrays."""
    if scheme is EncodingScheme.SEQ_FIRST:
        return i // shape.K, i % shape.K
    return i % shape.L, i // shape.L


def _split(v: np.ndarray, M: int):
    g = v * M
    i = np.minimum(np.floor(g).astype(np.int64), M - 1)
    f = g - i
    # the last cell has no successor: it keeps the whole weight
    f = np.where(i == M - 1, 0.0, f)
    return i, f


def locate(v: float, scheme, shape: GridShape) -> CellAssignment:
    scheme = EncodingScheme.parse(scheme)
    if not (0.0 <= v <= 1.0):
        raise InvalidArgumentError(f"value {v!r} is outside [0, 1]")
    M = shape.cells
    i, f = _split(np.array([float(v)]), M)
    i, f = int(i[0]), float(f[0])
    nxt = min(i + 1, M - 1)
    prim = tuple(int(c) for c in _factor(i, scheme, shape))
    sec = tuple(int(c) for c in _factor(nxt, scheme, shape))
    return CellAssignment(prim, sec, 1.0 - f, f)


def flat_cells(values, scheme, shape: GridShape):
    """Row-major grid indices and weights of every (primary, secondary) pair.

    Returns ``(cells, weights)`` each of shape (n, 2).
    """
    scheme = EncodingScheme.parse(scheme)
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size and (np.any(~(v >= 0.0)) or np.any(~(v <= 1.0))):
        raise InvalidArgumentError("encode() needs all values in [0, 1]")
    M = shape.cells
    i, f = _split(v, M)
    nxt = np.minimum(i + 1, M - 1)
    idx = np.stack([i, nxt], axis=1)
    pos, dim = _factor(idx, scheme, shape)
    cells = pos * shape.K + dim
    weights = np.stack([1.0 - f, f], axis=1)
    return cells, weights


def encode(values, scheme, shape: GridShape) -> np.ndarray:
    """Accumulate every observation's split weight into an (L, K) float32 grid."""
    cells, weights = flat_cells(values, scheme, shape)
    grid = np.bincount(cells.ravel(), weights=weights.ravel(), minlength=shape.cells)
    return grid.astype(np.float32).reshape(shape.L, shape.K)


def encode_batch(samples, scheme, shape: GridShape) -> np.ndarray:
    """Encode a list of normalized samples (ragged sizes allowed) into (B, L, K)."""
    parts = []
    for b, values in enumerate(samples):
        cells, weights = flat_cells(values, scheme, shape)
        parts.append((cells + b * shape.cells, weights))
    if not parts:
        return np.zeros((0, shape.L, shape.K), dtype=np.float32)
    cells = np.concatenate([c.ravel() for c, _ in parts])
    weights = np.concatenate([w.ravel() for _, w in parts])
    B = len(parts)
    grid = np.bincount(cells, weights=weights, minlength=B * shape.cells)
    return grid.astype(np.float32).reshape(B, shape.L, shape.K)


def decode_single(grid, scheme, shape: GridShape) -> float:
    """Weighted centroid of a one-observation grid, mapped back to [0, 1]."""
    scheme = EncodingScheme.parse(scheme)
    grid = np.asarray(grid, dtype=np.float64).reshape(shape.L, shape.K)
    total = grid.sum()
    if abs(total - 1.0) > 1e-4:
        raise InvalidArgumentError(f"grid holds weight {total}, expected exactly one observation")
    pos, dim = np.nonzero(grid)
    if scheme is EncodingScheme.SEQ_FIRST:
        flat = pos * shape.K + dim
    else:
        flat = dim * shape.L + pos
    centroid = float((grid[pos, dim] * flat).sum() / total)
    return min(max(centroid / shape.cells, 0.0), 1.0)


def occupied_cells(grid) -> list[tuple[int, int, float]]:
    """Non-zero cells as (pos, dim, weight) in row-major order."""
    grid = np.asarray(grid)
    pos, dim = np.nonzero(grid)
    return [(int(p), int(d), grid[p, d]) for p, d in zip(pos, dim)]


def format_cells(grid) -> str:
    return "".join(f"{p} {d} {str(np.float32(w))}\n" for p, d, w in occupied_cells(grid))
