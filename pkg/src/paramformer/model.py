"""Transformer regressor over encoded sample grids.

The L rows of an encoded grid are the input embeddings (width K). A stack of
pre-norm encoder blocks (multi-head self-attention, then a GELU feed-forward
layer, each with a residual connection) is followed by a final layer norm,
and a linear head reads the parameters off the first output embedding. There
is no extra summary token: position 0 of the data grid is the readout slot.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nncore as nn
from .distributions import Family, Rng
from .errors import InvalidArgumentError, ShapeError
from .normalize import NormMode, NormRecord
from .nncore import Tensor

INIT_STD = 0.02
_INIT_STREAM = 7


@dataclass(frozen=True)
class ModelConfig:
    L: int = 64
    K: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ffn_dim: int = 256
    n_params_out: int = 1
    positional: bool = True

    def __post_init__(self):
        if self.L < 1 or self.K < 2:
            raise InvalidArgumentError(f"bad grid shape {self.L}x{self.K}")
        if self.n_layers < 1 or self.n_heads < 1 or self.ffn_dim < 1:
            raise InvalidArgumentError("n_layers, n_heads and ffn_dim must be positive")
        if self.K % self.n_heads:
            raise InvalidArgumentError(f"K={self.K} is not divisible by n_heads={self.n_heads}")
        if self.n_params_out not in (1, 2):
            raise InvalidArgumentError("n_params_out must be 1 or 2")

    @property
    def head_dim(self) -> int:
        return self.K // self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    # 6 layers at width 384 over a 1024-long sequence
    "paper-full": dict(L=1024, K=384, n_layers=6, n_heads=6, ffn_dim=1536),
    "desk": dict(L=64, K=64, n_layers=2, n_heads=4, ffn_dim=256),
}


def preset_config(name: str, n_params_out: int = 1, **overrides) -> ModelConfig:
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise InvalidArgumentError(f"unknown model preset {name!r}; have {sorted(PRESETS)}") from None
    base.update(overrides)
    return ModelConfig(n_params_out=n_params_out, **base)


def param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Every weight tensor in declaration order (the checkpoint order)."""
    L, K, F, P = config.L, config.K, config.ffn_dim, config.n_params_out
    shapes = []
    if config.positional:
        shapes.append(("pos_emb", (L, K)))
    for i in range(config.n_layers):
        p = f"layer{i}."
        shapes += [
            (p + "ln1.gain", (K,)), (p + "ln1.bias", (K,)),
            (p + "attn.w_qkv", (K, 3 * K)), (p + "attn.b_qkv", (3 * K,)),
            (p + "attn.w_out", (K, K)), (p + "attn.b_out", (K,)),
            (p + "ln2.gain", (K,)), (p + "ln2.bias", (K,)),
            (p + "ffn.w1", (K, F)), (p + "ffn.b1", (F,)),
            (p + "ffn.w2", (F, K)), (p + "ffn.b2", (K,)),
        ]
    shapes += [("ln_f.gain", (K,)), ("ln_f.bias", (K,)),
               ("head.w", (K, P)), ("head.b", (P,))]
    return shapes


def count_params(config: ModelConfig) -> int:
    return sum(math.prod(s) for _, s in param_shapes(config))


@dataclass
class ModelState:
    config: ModelConfig
    params: dict[str, Tensor]
    step: int = 0
    meta: dict = field(default_factory=dict)

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def astype(self, dtype) -> "ModelState":
        """Deep copy with every weight cast, e.g. to float64 for gradient checks."""
        params = {k: Tensor(v.data.astype(dtype), requires_grad=True, name=k)
                  for k, v in self.params.items()}
        return ModelState(self.config, params, self.step, dict(self.meta))

    def copy(self) -> "ModelState":
        return self.astype(self.dtype)


def init_model(config: ModelConfig, seed: int) -> ModelState:
    """Gains 1, biases 0, everything else N(0, 0.02^2); deterministic per seed."""
    gen = Rng(seed).derive(_INIT_STREAM, 0).gen
    params = {}
    for name, shape in param_shapes(config):
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "gain":
            data = np.ones(shape, np.float32)
        elif leaf.startswith("b"):
            data = np.zeros(shape, np.float32)
        else:
            data = (gen.standard_normal(shape) * INIT_STD).astype(np.float32)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return ModelState(config, params)


def _attention(state: ModelState, prefix: str, x: Tensor, query_rows: int | None) -> Tensor:
    """Multi-head self-attention; with ``query_rows`` only the first rows emit outputs."""
    cfg = state.config
    P = state.params
    B, L, K = x.shape
    H, dh = cfg.n_heads, cfg.head_dim
    qkv = nn.linear(x, P[prefix + "w_qkv"], P[prefix + "b_qkv"])          # B, L, 3K
    qkv = nn.transpose(nn.reshape(qkv, (B, L, 3, H, dh)), (2, 0, 3, 1, 4))  # 3, B, H, L, dh
    q, k, v = qkv[0], qkv[1], qkv[2]
    Lq = L
    if query_rows is not None:
        q = q[:, :, :query_rows, :]
        Lq = query_rows
    scores = nn.scale(q @ nn.transpose(k, (0, 1, 3, 2)), 1.0 / math.sqrt(dh))  # B, H, Lq, L
    ctx = nn.softmax(scores, axis=-1) @ v                                      # B, H, Lq, dh
    ctx = nn.reshape(nn.transpose(ctx, (0, 2, 1, 3)), (B, Lq, K))
    return nn.linear(ctx, P[prefix + "w_out"], P[prefix + "b_out"])


def forward(state: ModelState, grid) -> Tensor:
    """Raw head outputs, shape (B, P) for a (B, L, K) batch or (P,) for one grid.

    The last block only computes its output at position 0 (the readout slot);
    keys and values still come from every position, so the result equals the
    full computation.
    """
    cfg = state.config
    P = state.params
    single = False
    if isinstance(grid, Tensor):
        x = grid
    else:
        x = Tensor(np.asarray(grid, dtype=state.dtype))
    if x.ndim == 2:
        single = True
        x = nn.reshape(x, (1,) + x.shape)
    if x.shape[1:] != (cfg.L, cfg.K):
        raise ShapeError(f"grid shape {x.shape[1:]} does not match model {(cfg.L, cfg.K)}")
    if x.dtype != state.dtype:
        x = Tensor(x.data.astype(state.dtype))
    h = x + P["pos_emb"] if cfg.positional else x
    for i in range(cfg.n_layers):
        p = f"layer{i}."
        last = i == cfg.n_layers - 1
        a = nn.layer_norm(h, P[p + "ln1.gain"], P[p + "ln1.bias"])
        att = _attention(state, p + "attn.", a, 1 if last else None)
        if last:
            h = h[:, :1, :]
        h = h + att
        f = nn.layer_norm(h, P[p + "ln2.gain"], P[p + "ln2.bias"])
        f = nn.gelu(nn.linear(f, P[p + "ffn.w1"], P[p + "ffn.b1"]))
        h = h + nn.linear(f, P[p + "ffn.w2"], P[p + "ffn.b2"])
    first = nn.layer_norm(h[:, 0, :], P["ln_f.gain"], P["ln_f.bias"])
    out = nn.linear(first, P["head.w"], P["head.b"])
    return out[0] if single else out


def predict(state: ModelState, grids, batch_size: int = 256) -> np.ndarray:
    """Inference without building gradient records."""
    grids = np.asarray(grids, dtype=state.dtype)
    if grids.ndim == 2:
        grids = grids[None]
    frozen = ModelState(state.config,
                        {k: Tensor(v.data, name=k) for k, v in state.params.items()},
                        state.step)
    outs = [forward(frozen, grids[i:i + batch_size]).data
            for i in range(0, len(grids), batch_size)]
    if not outs:
        return np.zeros((0, state.config.n_params_out), dtype=state.dtype)
    return np.concatenate(outs)


def batch_loss(raw: Tensor, scale, shift, true) -> Tensor:
    """Mean over batch and parameters of ((raw*scale + shift) - true)^2.

    ``scale``/``shift`` hold each example's recovery affine map (see
    :meth:`NormRecord.affine`), so the error is measured in parameter units
    and the gradient flows through the recovery.
    """
    dt = raw.dtype
    scale = np.asarray(scale, dtype=dt)
    shift = np.asarray(shift, dtype=dt)
    true = np.asarray(true, dtype=dt)
    if raw.shape != true.shape:
        raise ShapeError(f"raw outputs {raw.shape} vs true params {true.shape}")
    est = raw * Tensor(scale) + Tensor(shift)
    return nn.mean(nn.square(est - Tensor(true)))


def loss(family, mode, record: NormRecord, raw, true_params):
    """Squared error in parameter units, averaged over parameters, for one example.

    Returns a Tensor when ``raw`` is a Tensor (differentiable), else a float.
    """
    family = Family.parse(family)
    mode = NormMode.parse(mode)
    if record.mode is not mode or record.family is not family:
        raise InvalidArgumentError("record does not match family/mode")
    true = np.asarray(true_params, dtype=float)
    if true.shape != (family.n_params,):
        raise ShapeError(f"{family.value} has {family.n_params} parameters, got {true.shape}")
    scale, shift = record.affine()
    if isinstance(raw, Tensor):
        if raw.shape != true.shape:
            raise ShapeError(f"raw outputs {raw.shape} vs true params {true.shape}")
        return batch_loss(nn.reshape(raw, (1, -1)), scale[None], shift[None], true[None])
    raw = np.asarray(raw, dtype=float)
    if raw.shape != true.shape:
        raise ShapeError(f"raw outputs {raw.shape} vs true params {true.shape}")
    return float(np.mean((raw * scale + shift - true) ** 2))
