"""Central finite-difference gradient checking over a recorded graph."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .core import Graph, Tensor, backward, forward

# below this magnitude gradients are compared on an absolute scale
GRAD_FLOOR = 1e-6
# central differences of a loss L carry roundoff near |L| * 1e-16 / eps, so
# gradients under |L| * LOSS_FLOOR are also compared on that absolute scale
LOSS_FLOOR = 1e-6


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = GRAD_FLOOR) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def grad_check(
    g: Graph,
    loss: Tensor,
    params: Optional[Iterable[Tensor]] = None,
    eps: float = 1e-5,
    max_elements: int = 100,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Every element of each parameter is probed, except that tensors larger
    than ``max_elements`` are probed at a random sample of that many
    elements. Parameter ``.grad`` slots are left as they were. Gradients
    smaller than ``LOSS_FLOOR * |loss|`` are measured against that floor,
    since the finite difference cannot resolve them.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = list(g.parameters if params is None else params)
    saved = [p.grad for p in params]
    for p in params:
        p.grad = None
    try:
        backward(g, loss)
        analytic = [np.zeros(p.shape) if p.grad is None else p.grad.copy() for p in params]
    finally:
        for p, s in zip(params, saved):
            p.grad = s

    forward(g)
    floor = max(GRAD_FLOOR, LOSS_FLOOR * abs(float(loss.data)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        p.data = np.ascontiguousarray(p.data)
        flat = p.data.reshape(-1)
        if flat.size > max_elements:
            picks = rng.choice(flat.size, size=max_elements, replace=False)
        else:
            picks = np.arange(flat.size)
        numeric = np.empty(len(picks))
        for k, idx in enumerate(picks):
            orig = flat[idx]
            flat[idx] = orig + eps
            forward(g)
            up = float(loss.data)
            flat[idx] = orig - eps
            forward(g)
            down = float(loss.data)
            flat[idx] = orig
            numeric[k] = (up - down) / (2 * eps)
        forward(g)
        err = relative_error(grad.reshape(-1)[picks], numeric, floor)
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
