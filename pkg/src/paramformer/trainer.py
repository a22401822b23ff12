"""Training loop: fresh examples every step, periodic held-out evaluation.

Example ``j`` of a run is built from ``Rng(seed).derive(TRAIN_STREAM, j)``
and held-out task ``i`` from ``Rng(seed).derive(EVAL_STREAM, i)``. No
training example is ever reused, the held-out set never overlaps training,
and a resumed run regenerates exactly the batches it would have seen.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint
from . import model as M
from . import nncore as nn
from .distributions import Family, Rng, SizeSpec, draw_task, get_prior
from .encode import EncodingScheme, GridShape, encode
from .errors import DegenerateSampleError, DivergenceError, InvalidArgumentError
from .evaluation import EVAL_STREAM, TRAIN_STREAM
from .normalize import NormMode, NormRecord, normalize
from .pipeline import prepare_batch

log = logging.getLogger(__name__)

MAX_REDRAWS = 100


@dataclass
class TrainConfig:
    family: str = "exponential"
    mode: str = "known"
    prior: str = ""
    size: str = "30"
    scheme: str = "seq-first"
    model: str = "desk"
    L: int = 0
    K: int = 0
    n_layers: int = 0
    n_heads: int = 0
    ffn_dim: int = 0
    positional: bool = True
    total_examples: int = 200_000
    batch_size: int = 32
    eval_every: int = 20_000
    eval_tasks: int = 2_000
    seed: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    warmup_frac: float = 0.01
    lr_decay: str = "none"
    clip_norm: float = 1.0
    checkpoint_dir: str = ""
    keep_checkpoints: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        fam = Family.parse(self.family)
        mode = NormMode.parse(self.mode)
        if mode is NormMode.UNKNOWN and fam is Family.BETA:
            raise InvalidArgumentError("unknown-range mode is only defined for normal and exponential")
        get_prior(fam, self.prior or None)
        SizeSpec.parse(self.size)
        EncodingScheme.parse(self.scheme)
        self.model_config()
        if self.batch_size < 1 or self.total_examples < self.batch_size:
            raise InvalidArgumentError("need total_examples >= batch_size >= 1")
        if self.eval_every < 1 or self.total_examples % self.eval_every:
            raise InvalidArgumentError("eval_every must divide total_examples")
        if self.eval_every % self.batch_size:
            raise InvalidArgumentError("eval_every must be a multiple of batch_size")
        if self.eval_tasks < 1:
            raise InvalidArgumentError("eval_tasks must be >= 1")
        if self.lr_decay not in ("none", "linear", "cosine"):
            raise InvalidArgumentError(f"lr_decay must be none, linear or cosine, not {self.lr_decay!r}")
        if not 0 <= self.warmup_frac < 1:
            raise InvalidArgumentError("warmup_frac must be in [0, 1)")

    @property
    def family_enum(self) -> Family:
        return Family.parse(self.family)

    @property
    def mode_enum(self) -> NormMode:
        return NormMode.parse(self.mode)

    @property
    def size_spec(self) -> SizeSpec:
        return SizeSpec.parse(self.size)

    @property
    def prior_spec(self):
        return get_prior(self.family, self.prior or None)

    @property
    def shape(self) -> GridShape:
        cfg = self.model_config()
        return GridShape(cfg.L, cfg.K)

    def model_config(self) -> M.ModelConfig:
        overrides = {k: getattr(self, k) for k in ("L", "K", "n_layers", "n_heads", "ffn_dim")
                     if getattr(self, k)}
        overrides["positional"] = self.positional
        return M.preset_config(self.model, Family.parse(self.family).n_params, **overrides)

    @property
    def steps(self) -> int:
        return self.total_examples // self.batch_size

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        """Build from string-valued settings (config files, CLI), rejecting unknown keys."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(values) - set(fields)
        if unknown:
            raise InvalidArgumentError(f"unknown training settings: {sorted(unknown)}")
        kwargs = {}
        for k, v in values.items():
            kwargs[k] = coerce(v, type(getattr(cls, k)) if hasattr(cls, k) else str, k)
        return cls(**kwargs)


def coerce(value, typ, key="value"):
    if not isinstance(value, str):
        return value
    try:
        if typ is bool:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if typ is int:
            return int(float(value)) if "e" in value.lower() else int(value)
        if typ is float:
            return float(value)
    except ValueError:
        raise InvalidArgumentError(f"bad value for {key}: {value!r}") from None
    return value.strip()


PRESETS = {
    "desk": dict(model="desk", total_examples=200_000, batch_size=32, eval_every=20_000, eval_tasks=2_000),
    "paper-full": dict(model="paper-full", total_examples=9_900_000, batch_size=32,
                       eval_every=220_000, eval_tasks=100_000),
}


@dataclass
class LossCurve:
    points: list[tuple[int, float]] = field(default_factory=list)

    def add(self, examples_seen: int, mse: float):
        if self.points and examples_seen <= self.points[-1][0]:
            raise InvalidArgumentError("examples_seen must increase along the curve")
        self.points.append((int(examples_seen), float(mse)))

    def to_csv(self) -> str:
        return "examples_seen,mse\n" + "".join(f"{n},{m:.8g}\n" for n, m in self.points)

    def __len__(self):
        return len(self.points)


def _draw_normalized(rng: Rng, config: TrainConfig):
    fam, prior, size = config.family_enum, config.prior_spec, config.size_spec
    for _ in range(MAX_REDRAWS):
        task = draw_task(rng, fam, prior, size)
        try:
            values, record = normalize(fam, config.mode_enum, task.sample)
        except DegenerateSampleError:
            continue
        return task, values, record
    raise DegenerateSampleError(f"{MAX_REDRAWS} consecutive degenerate samples")


def make_example(rng: Rng, config: TrainConfig) -> tuple[np.ndarray, NormRecord, np.ndarray]:
    """One (grid, normalization record, true parameters) training triple.

    Degenerate samples (zero spread) are redrawn from the same stream.
    """
    task, values, record = _draw_normalized(rng, config)
    return encode(values, config.scheme, config.shape), record, task.true_params


def _tasks(config: TrainConfig, stream: int, start: int, count: int):
    root = Rng(config.seed)
    return [_draw_normalized(root.derive(stream, j), config)[0] for j in range(start, start + count)]


def make_batch(config: TrainConfig, stream: int, start: int, count: int):
    """Grids, recovery affine maps and targets for examples start..start+count-1."""
    tasks = _tasks(config, stream, start, count)
    grids, scale, shift, _ = prepare_batch([t.sample for t in tasks], config.family_enum,
                                           config.mode_enum, config.scheme, config.shape)
    true = np.array([t.true_params for t in tasks])
    return grids, scale, shift, true


def lr_at(config: TrainConfig, step: int) -> float:
    """Linear warmup over ``warmup_frac`` of the steps, then the chosen decay."""
    total = config.steps
    warm = max(1, int(round(config.warmup_frac * total))) if config.warmup_frac > 0 else 0
    if step < warm:
        return config.lr * (step + 1) / warm
    if config.lr_decay == "none" or total <= warm:
        return config.lr
    frac = (step - warm) / max(1, total - warm)
    if config.lr_decay == "linear":
        return config.lr * (1.0 - frac)
    return config.lr * 0.5 * (1.0 + math.cos(math.pi * frac))


class HeldOut:
    """Pre-encoded held-out set, scored with the same loss as training."""

    def __init__(self, config: TrainConfig):
        self.grids, self.scale, self.shift, self.true = make_batch(
            config, EVAL_STREAM, 0, config.eval_tasks)

    def mse(self, state: M.ModelState) -> float:
        raw = M.predict(state, self.grids).astype(np.float64)
        est = raw * self.scale + self.shift
        return float(np.mean(np.mean((est - self.true) ** 2, axis=1)))


def _save(config: TrainConfig, name: str, state, opt, curve: LossCurve, best: float):
    if not config.checkpoint_dir:
        return
    meta = {"curve": curve.points, "best_mse": best, "train": config.to_dict()}
    checkpoint.save(os.path.join(config.checkpoint_dir, name), state, opt, meta)


def _write_curve(config: TrainConfig, curve: LossCurve):
    if not config.checkpoint_dir:
        return
    path = os.path.join(config.checkpoint_dir, "loss_curve.csv")
    try:
        with open(path, "w") as f:
            f.write(curve.to_csv())
    except OSError as e:
        from .errors import CheckpointError
        raise CheckpointError(f"cannot write {path}: {e}") from e


def train(config: TrainConfig, resume: str | None = None, progress=None):
    """Run (or continue) training; returns ``(state, curve)``.

    Checkpoints go to ``config.checkpoint_dir`` when set: ``last.pfck``
    after every evaluation (the last good state), ``best.pfck`` on a new
    best held-out MSE, ``final.pfck`` at the end, and ``step-<n>.pfck`` per
    evaluation if ``keep_checkpoints``. A non-finite loss raises
    :class:`DivergenceError`; ``last.pfck`` is left as it was.
    """
    config.validate()
    if config.checkpoint_dir:
        os.makedirs(config.checkpoint_dir, exist_ok=True)
    if resume:
        state, opt = checkpoint.load(resume)
        if opt is None:
            opt = nn.Adam(state.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
        curve = LossCurve([tuple(p) for p in state.meta.get("curve", [])])
        best = float(state.meta.get("best_mse", math.inf))
        if state.config != config.model_config():
            raise InvalidArgumentError("checkpoint model does not match the training config")
    else:
        state = M.init_model(config.model_config(), config.seed)
        opt = nn.Adam(state.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
        curve, best = LossCurve(), math.inf
    params = state.parameters()
    held_out = HeldOut(config)
    B = config.batch_size
    eval_steps = config.eval_every // B

    for step in range(state.step, config.steps):
        grids, scale, shift, true = make_batch(config, TRAIN_STREAM, step * B, B)
        out = M.forward(state, grids)
        loss = M.batch_loss(out, scale, shift, true)
        if not np.isfinite(loss.data):
            raise DivergenceError(f"non-finite training loss at step {step}")
        nn.backward(loss, params)
        if config.clip_norm > 0:
            nn.clip_grad_norm(params, config.clip_norm)
        opt.lr = lr_at(config, step)
        opt.step()
        state.step = step + 1
        if state.step % eval_steps == 0:
            mse = held_out.mse(state)
            if not math.isfinite(mse):
                raise DivergenceError(f"non-finite held-out MSE after step {state.step}")
            seen = state.step * B
            curve.add(seen, mse)
            log.info("examples %d  held-out mse %.6g  lr %.3g", seen, mse, opt.lr)
            if progress is not None:
                progress(seen, mse)
            if mse < best:
                best = mse
                _save(config, "best.pfck", state, opt, curve, best)
            _save(config, "last.pfck", state, opt, curve, best)
            if config.keep_checkpoints:
                _save(config, f"step-{state.step}.pfck", state, opt, curve, best)
            _write_curve(config, curve)
    state.meta = {"curve": curve.points, "best_mse": best, "train": config.to_dict()}
    _save(config, "final.pfck", state, opt, curve, best)
    return state, curve
