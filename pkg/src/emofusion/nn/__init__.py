"""From-scratch numpy kernels: parameters, layers, LSTM, gradient checking."""

from .gradcheck import GradCheckReport, grad_check
from .layers import (
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    embedding_forward,
    mean_pool_backward,
    mean_pool_forward,
    softmax,
    softmax_cross_entropy,
)
from .lstm import LstmLayer, lstm_cell_step, lstm_layer_backward, lstm_layer_forward
from .params import Parameter, adam_update, uniform_init

__all__ = [
    "GradCheckReport",
    "LstmLayer",
    "Parameter",
    "adam_update",
    "conv1d_backward",
    "conv1d_forward",
    "dense_backward",
    "dense_forward",
    "dropout_backward",
    "dropout_forward",
    "embedding_backward",
    "embedding_forward",
    "grad_check",
    "lstm_cell_step",
    "lstm_layer_backward",
    "lstm_layer_forward",
    "mean_pool_backward",
    "mean_pool_forward",
    "softmax",
    "softmax_cross_entropy",
    "uniform_init",
]
