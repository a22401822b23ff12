import math
import os

import numpy as np
import pytest

from paramformer import checkpoint
from paramformer import model as M
from paramformer.distributions import Rng
from paramformer.errors import DivergenceError, InvalidArgumentError
from paramformer.evaluation import EVAL_STREAM, TRAIN_STREAM
from paramformer.normalize import NormMode
from paramformer.trainer import LossCurve, TrainConfig, lr_at, make_batch, make_example, train

TINY = dict(L=8, K=8, n_layers=1, n_heads=2, ffn_dim=16, total_examples=256,
            batch_size=16, eval_every=64, eval_tasks=50, lr=1e-3, seed=3)


def tiny(**kw):
    return TrainConfig(**{**TINY, **kw})


def test_example_exponential_known():
    grid, rec, true = make_example(Rng(0), TrainConfig(size="10"))
    assert abs(grid.sum(dtype=np.float64) - 10) < 1e-4
    assert rec.mode is NormMode.KNOWN and 0.5 <= true[0] <= 2


def test_example_normal_unknown_endpoints():
    cfg = TrainConfig(family="normal", mode="unknown")
    grid, rec, true = make_example(Rng(1), cfg)
    assert grid[0, 0] >= 1.0 and grid[-1, -1] >= 1.0
    assert true.shape == (2,) and rec.b > rec.a


def test_example_deterministic():
    a = make_example(Rng(2).derive(0, 9), TrainConfig())
    b = make_example(Rng(2).derive(0, 9), TrainConfig())
    assert np.array_equal(a[0], b[0]) and a[1] == b[1] and np.array_equal(a[2], b[2])


def test_train_and_eval_streams_disjoint():
    cfg = TrainConfig()
    tr = make_batch(cfg, TRAIN_STREAM, 0, 20)[3]
    ev = make_batch(cfg, EVAL_STREAM, 0, 20)[3]
    assert not set(tr.ravel()) & set(ev.ravel())


def test_batches_are_fresh():
    cfg = TrainConfig()
    a = make_batch(cfg, TRAIN_STREAM, 0, 32)[3]
    b = make_batch(cfg, TRAIN_STREAM, 32, 32)[3]
    assert len(set(np.concatenate([a, b]).ravel())) == 64


@pytest.mark.parametrize("kw", [
    dict(total_examples=16, batch_size=32),
    dict(eval_every=30_000),
    dict(family="beta", mode="unknown"),
    dict(n_heads=5),
    dict(lr_decay="step"),
])
def test_config_validation(kw):
    with pytest.raises(InvalidArgumentError):
        TrainConfig(**kw)


def test_from_mapping_coerces_and_rejects():
    cfg = TrainConfig.from_mapping({"family": "normal", "total_examples": "2e5", "lr": "0.001",
                                    "positional": "false"})
    assert cfg.total_examples == 200_000 and cfg.lr == 0.001 and cfg.positional is False
    with pytest.raises(InvalidArgumentError):
        TrainConfig.from_mapping({"learning_rate": "1"})
    with pytest.raises(InvalidArgumentError):
        TrainConfig.from_mapping({"batch_size": "many"})


def test_lr_warmup_and_decay():
    cfg = TrainConfig(total_examples=3200, batch_size=32, eval_every=320, lr_decay="linear")
    assert cfg.steps == 100
    assert lr_at(cfg, 0) == cfg.lr  # 1% of 100 steps is a one-step warmup
    assert lr_at(cfg, 99) < 0.02 * cfg.lr
    cos = TrainConfig(lr_decay="cosine")
    assert lr_at(cos, cos.steps // 2) == pytest.approx(0.5 * cos.lr, rel=0.02)
    assert lr_at(cos, cos.steps - 1) < 1e-6 * cos.lr


def test_loss_curve_must_increase():
    c = LossCurve()
    c.add(10, 1.0)
    with pytest.raises(InvalidArgumentError):
        c.add(10, 0.5)
    assert c.to_csv() == "examples_seen,mse\n10,1\n"


def test_train_deterministic_and_curve(tmp_path):
    s1, c1 = train(tiny(checkpoint_dir=str(tmp_path)))
    s2, c2 = train(tiny())
    assert [n for n, _ in c1.points] == [64, 128, 192, 256]
    assert c1.points == c2.points
    assert all(np.array_equal(s1.params[k].data, s2.params[k].data) for k in s1.params)
    for name in ("best.pfck", "last.pfck", "final.pfck", "loss_curve.csv"):
        assert os.path.exists(tmp_path / name)
    with open(tmp_path / "loss_curve.csv") as f:
        assert f.read() == c1.to_csv()


def test_resume_reproduces_trajectory(tmp_path):
    full_state, full_curve = train(tiny(checkpoint_dir=str(tmp_path / "a"), keep_checkpoints=True))
    # step 8 = 128 examples = second evaluation point
    resumed, curve = train(tiny(checkpoint_dir=str(tmp_path / "b")),
                           resume=str(tmp_path / "a" / "step-8.pfck"))
    assert curve.points == full_curve.points
    assert all(np.array_equal(resumed.params[k].data, full_state.params[k].data) for k in full_state.params)


def test_resume_rejects_other_model(tmp_path):
    train(tiny(checkpoint_dir=str(tmp_path)))
    with pytest.raises(InvalidArgumentError):
        train(tiny(ffn_dim=32), resume=str(tmp_path / "final.pfck"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_keeps_last_good_checkpoint(tmp_path):
    cfg = tiny(checkpoint_dir=str(tmp_path), lr=1e36, warmup_frac=0.0, eval_every=16)
    with pytest.raises(DivergenceError):
        train(cfg)
    if os.path.exists(tmp_path / "last.pfck"):
        st, _ = checkpoint.load(tmp_path / "last.pfck")
        assert all(np.all(np.isfinite(t.data)) for t in st.parameters())


def test_learning_reduces_held_out_error():
    _, curve = train(tiny(total_examples=2048, eval_every=512, batch_size=32, eval_tasks=200))
    assert curve.points[-1][1] < curve.points[0][1]


@pytest.mark.parametrize("name", ["desk", "paper-full"])
def test_presets_are_valid(name):
    from paramformer.trainer import PRESETS
    cfg = TrainConfig(**PRESETS[name])
    assert cfg.total_examples % cfg.eval_every == 0
