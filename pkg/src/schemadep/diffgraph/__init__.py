"""Minimal reverse-mode differentiation for the parser's network."""

from .check import grad_check, relative_error
from .checkpoint import CheckpointError, load_arrays, load_checkpoint, save_arrays, save_checkpoint
from .core import (
    Graph,
    NonFiniteError,
    ShapeError,
    Tensor,
    add,
    backward,
    concat,
    constant,
    exp,
    forward,
    log,
    log_softmax,
    masked_fill,
    matmul,
    mul,
    neg,
    param,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    softmax,
    softplus,
    stack,
    sub,
    take,
    tanh,
    transpose,
    zero_grad,
)
from .nn import BiLSTMParams, biaffine, bilinear, bilstm, glorot, linear, lstm_cell, lstm_step, zeros
