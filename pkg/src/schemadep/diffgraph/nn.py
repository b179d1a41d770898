"""Layers built from the primitives: LSTM cells and stacks, bilinear and biaffine scorers."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .core import (
    Tensor,
    concat,
    matmul,
    param,
    reshape,
    sigmoid,
    stack,
    take,
    tanh,
    transpose,
)


def glorot(rng: np.random.Generator, shape: Sequence[int], name: str) -> Tensor:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)) over the last two axes."""
    fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) >= 2 else (shape[0], 1)
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return param(rng.uniform(-a, a, size=tuple(shape)), name)


def zeros(shape: Sequence[int], name: str) -> Tensor:
    return param(np.zeros(tuple(shape)), name)


def lstm_step(gates_x, h, c, w_hh) -> tuple[Tensor, Tensor]:
    """One LSTM update given precomputed input projections ``gates_x``.

    Gate order along the last axis is input, forget, output, candidate. ``h``
    and ``c`` may be None for an all-zero initial state.
    """
    hidden = w_hh.shape[-2]
    gates = gates_x if h is None else gates_x + matmul(h, w_hh)
    sig = sigmoid(take(gates, (Ellipsis, slice(0, 3 * hidden))))
    cand = tanh(take(gates, (Ellipsis, slice(3 * hidden, None))))
    i = take(sig, (Ellipsis, slice(0, hidden)))
    o = take(sig, (Ellipsis, slice(2 * hidden, 3 * hidden)))
    c_new = i * cand
    if c is not None:
        f = take(sig, (Ellipsis, slice(hidden, 2 * hidden)))
        c_new = f * c + c_new
    h_new = o * tanh(c_new)
    return h_new, c_new


def lstm_cell(x, h, c, w_ih, w_hh, b) -> tuple[Tensor, Tensor]:
    """Standard gated cell: c' = f*c + i*g, h' = o*tanh(c')."""
    return lstm_step(matmul(x, w_ih) + b, h, c, w_hh)


class BiLSTMParams:
    """Weights of one bidirectional layer; axis 0 indexes direction (forward, backward)."""

    def __init__(self, rng: np.random.Generator, d_in: int, hidden: int, prefix: str):
        self.hidden = hidden
        self.w_ih = glorot(rng, (2, d_in, 4 * hidden), f"{prefix}.w_ih")
        self.w_hh = glorot(rng, (2, hidden, 4 * hidden), f"{prefix}.w_hh")
        self.b = zeros((2, 1, 4 * hidden), f"{prefix}.b")

    def tensors(self) -> list[Tensor]:
        return [self.w_ih, self.w_hh, self.b]


def _reverse_index(lengths: Sequence[int], steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row index reversing the first ``length`` positions; padding stays in place."""
    idx = np.tile(np.arange(steps), (len(lengths), 1))
    for row, n in enumerate(lengths):
        idx[row, :n] = np.arange(n - 1, -1, -1)
    return np.arange(len(lengths))[:, None], idx


def bilstm(xs: Tensor, lengths: Sequence[int], layer: BiLSTMParams, h0=None, c0=None):
    """Run a bidirectional layer over a right-padded batch.

    ``xs`` is (B, T, d_in); row ``b`` holds ``lengths[b]`` real positions.
    Returns per-position outputs (B, T, 2H), with both directions aligned to
    the original positions, and final states (B, 2H) as the concatenation of
    the forward state after the last token and the backward state after the
    first token. ``h0``/``c0`` are optional (2, B, H) initial states.
    Positions past a row's length hold unspecified values.
    """
    batch, steps, _ = xs.shape
    rows, rev = _reverse_index(lengths, steps)
    backwards = take(xs, (rows, rev))
    both = stack([xs, backwards], axis=0)  # (2, B, T, d_in)
    w_ih = reshape(layer.w_ih, (2, 1) + layer.w_ih.shape[1:])
    proj = matmul(both, w_ih) + reshape(layer.b, (2, 1, 1, -1))
    proj = transpose(proj, (2, 0, 1, 3))  # (T, 2, B, 4H)
    h, c = h0, c0
    hs = []
    for t in range(steps):
        h, c = lstm_step(take(proj, t), h, c, layer.w_hh)
        hs.append(h)
    out = stack(hs, axis=2)  # (2, B, T, H)
    fwd = take(out, 0)
    bwd_steps = take(out, 1)
    bwd = take(bwd_steps, (rows, rev))
    last = np.asarray(lengths) - 1
    flat_rows = np.arange(batch)
    finals = concat([take(fwd, (flat_rows, last)), take(bwd_steps, (flat_rows, last))], axis=-1)
    return concat([fwd, bwd], axis=-1), finals


def bilinear(h1, h2, u) -> Tensor:
    """``h1ᵀ U h2`` for vectors; ``u`` is (d1, d2) for a scalar or (L, d1, d2) for an L-vector."""
    a = reshape(h1, (1, h1.shape[-1]))
    b = reshape(h2, (h2.shape[-1], 1))
    out = matmul(matmul(a, u), b)
    return reshape(out, () if u.ndim == 2 else (u.shape[0],))


def biaffine(dep: Tensor, head: Tensor, u: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Scores for all (dependent, head) pairs.

    ``dep`` (N1, d), ``head`` (N2, d), ``u`` (L, d, d), ``w`` (2d, L) acting on
    ``dep ⊕ head``, ``b`` (L,). Returns (N1, N2, L) with
    ``out[i, j] = dep_iᵀ U head_j + W (dep_i ⊕ head_j) + b``.
    """
    d = dep.shape[-1]
    pairs = matmul(matmul(dep, u), transpose(head))  # (L, N1, N2)
    pairs = transpose(pairs, (1, 2, 0))
    lin_dep = matmul(dep, take(w, slice(0, d)))  # (N1, L)
    lin_head = matmul(head, take(w, slice(d, None)))  # (N2, L)
    n1, n2, labels = dep.shape[0], head.shape[0], u.shape[0]
    return (
        pairs
        + reshape(lin_dep, (n1, 1, labels))
        + reshape(lin_head, (1, n2, labels))
        + b
    )


def linear(x, w, b: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, w)
    return out if b is None else out + b
