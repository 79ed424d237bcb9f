"""Forward-only LSTM layer with full backpropagation through time.

Gate weights are packed along the last axis in the order
[input, forget, candidate, output], so wx has shape (D, 4H), wh has
shape (H, 4H) and the bias has shape (4H,). The forget-gate bias slice
is initialized to one, everything else uniformly in [-0.05, 0.05].
No peephole connections; the initial hidden and cell states are zero.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigError, EmptySequenceError, NumericError, ShapeError
from .params import Parameter, uniform_init

__all__ = ["LstmLayer", "lstm_cell_step", "lstm_layer_backward", "lstm_layer_forward"]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class LstmLayer:
    """Parameters for one LSTM layer."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> None:
        if input_dim < 1 or hidden_dim < 1:
            raise ConfigError(
                f"LSTM dims must be >= 1, got input_dim={input_dim}, hidden_dim={hidden_dim}"
            )
        self.input_dim = int(input_dim)
        self.hidden_dim = int(hidden_dim)
        self.wx = Parameter(uniform_init(rng, (self.input_dim, 4 * self.hidden_dim)))
        self.wh = Parameter(uniform_init(rng, (self.hidden_dim, 4 * self.hidden_dim)))
        bias = np.zeros(4 * self.hidden_dim)
        bias[self.hidden_dim : 2 * self.hidden_dim] = 1.0
        self.b = Parameter(bias)

    def parameters(self) -> dict[str, Parameter]:
        return {"wx": self.wx, "wh": self.wh, "b": self.b}


def lstm_cell_step(
    wx: np.ndarray,
    wh: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, tuple]:
    """One LSTM time step on raw weight arrays.

    Returns (h, c, cache). Exposed separately so single-step behavior
    (e.g. a saturated forget gate passing cell state through) can be
    probed with forced previous states.
    """
    hidden = h_prev.shape[0]
    raw = x @ wx + h_prev @ wh + b
    i = _sigmoid(raw[:hidden])
    f = _sigmoid(raw[hidden : 2 * hidden])
    g = np.tanh(raw[2 * hidden : 3 * hidden])
    o = _sigmoid(raw[3 * hidden :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    cache = (x, h_prev, c_prev, i, f, g, o, tc)
    return h, c, cache


def lstm_layer_forward(layer: LstmLayer, x: np.ndarray) -> tuple[np.ndarray, list[tuple]]:
    """Run the layer over a (T, D) sequence. Returns ((T, H) outputs, caches)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"LSTM input must be 2-D, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptySequenceError("LSTM needs at least one time step")
    if x.shape[1] != layer.input_dim:
        raise ShapeError(
            f"LSTM input width {x.shape[1]} != expected {layer.input_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError("LSTM input contains NaN or infinity")
    steps = x.shape[0]
    hidden = layer.hidden_dim
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    outputs = np.empty((steps, hidden))
    caches: list[tuple] = []
    wx, wh, b = layer.wx.value, layer.wh.value, layer.b.value
    for t in range(steps):
        h, c, cache = lstm_cell_step(wx, wh, b, x[t], h, c)
        outputs[t] = h
        caches.append(cache)
    return outputs, caches


def lstm_layer_backward(
    layer: LstmLayer, caches: list[tuple], d_outputs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagation through time.

    d_outputs is the (T, H) gradient on every hidden output. Returns
    (d_x, d_wx, d_wh, d_b).
    """
    d_outputs = np.asarray(d_outputs, dtype=np.float64)
    steps = len(caches)
    if d_outputs.shape != (steps, layer.hidden_dim):
        raise ShapeError(
            f"upstream gradient must have shape ({steps}, {layer.hidden_dim}), "
            f"got {d_outputs.shape}"
        )
    hidden = layer.hidden_dim
    wx, wh = layer.wx.value, layer.wh.value
    d_wx = np.zeros_like(wx)
    d_wh = np.zeros_like(wh)
    d_b = np.zeros(4 * hidden)
    d_x = np.empty((steps, layer.input_dim))
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        x_t, h_prev, c_prev, i, f, g, o, tc = caches[t]
        dh = d_outputs[t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        d_raw = np.empty(4 * hidden)
        d_raw[:hidden] = dc * g * i * (1.0 - i)
        d_raw[hidden : 2 * hidden] = dc * c_prev * f * (1.0 - f)
        d_raw[2 * hidden : 3 * hidden] = dc * i * (1.0 - g * g)
        d_raw[3 * hidden :] = dh * tc * o * (1.0 - o)
        d_wx += np.outer(x_t, d_raw)
        d_wh += np.outer(h_prev, d_raw)
        d_b += d_raw
        d_x[t] = wx @ d_raw
        dh_next = wh @ d_raw
        dc_next = dc * f
    return d_x, d_wx, d_wh, d_b
