"""Finite-difference gradient checks in float64.

Derivatives are estimated with the fourth-order five-point stencil

    f'(x) ~ (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / (12 h)

which at h = 1e-3 has truncation error ~h^4, far below the 1e-4 relative
tolerance. The plain central difference is O(h^2) and is visibly biased
for weights feeding a layer norm of near-constant rows.
"""
from __future__ import annotations

import numpy as np

from . import model as M
from . import nncore as nn

REL_FLOOR = 1e-8


def numeric_derivative(f, arr: np.ndarray, idx, h: float = 1e-3) -> float:
    old = arr[idx]
    vals = []
    for k in (2, 1, -1, -2):
        arr[idx] = old + k * h
        vals.append(float(f()))
    arr[idx] = old
    f2, f1, fm1, fm2 = vals
    return (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h)


def rel_error(a: float, b: float, floor: float = REL_FLOOR) -> float:
    """|a - b| / max(|a|, |b|, floor); the floor handles exactly-zero gradients."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_model_gradients(state: M.ModelState, grids, scale, shift, true,
                          probes: int = 100, seed: int = 0, h: float = 1e-3):
    """Compare autodiff against finite differences at ``probes`` random weights.

    Runs entirely in float64 on a copy of ``state``. Returns a list of
    ``(name, index, analytic, numeric, rel_error)``.
    """
    shadow = state.astype(np.float64)
    grids = np.asarray(grids, dtype=np.float64)

    def f():
        return M.batch_loss(M.forward(shadow, grids), scale, shift, true).data

    loss = M.batch_loss(M.forward(shadow, grids), scale, shift, true)
    nn.backward(loss, shadow.parameters())
    grads = {k: v.grad.copy() for k, v in shadow.params.items()}

    rng = np.random.default_rng(seed)
    names = list(shadow.params)
    sizes = np.array([shadow.params[k].data.size for k in names], dtype=float)
    results = []
    for _ in range(probes):
        # probe weights uniformly over all scalars, not uniformly over tensors
        name = names[rng.choice(len(names), p=sizes / sizes.sum())]
        arr = shadow.params[name].data
        idx = tuple(int(rng.integers(0, n)) for n in arr.shape)
        num = numeric_derivative(f, arr, idx, h)
        ana = float(grads[name][idx])
        results.append((name, idx, ana, num, rel_error(ana, num)))
    return results
