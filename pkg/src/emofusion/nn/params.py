"""Trainable parameters and the Adam update rule."""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigError, NumericError, ShapeError

__all__ = ["Parameter", "adam_update", "uniform_init"]


class Parameter:
    """A float64 weight array with its gradient and Adam moment buffers.

    Gradients accumulate across backward calls; the optimizer clears them
    after applying an update. ``step_count`` is the per-parameter Adam
    timestep used for bias correction.
    """

    __slots__ = ("value", "grad", "m", "v", "step_count")

    def __init__(self, value: np.ndarray) -> None:
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.step_count = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter(shape={self.value.shape}, steps={self.step_count})"


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], scale: float = 0.05) -> np.ndarray:
    """Weights drawn uniformly from [-scale, scale]."""
    if scale <= 0.0:
        raise ConfigError(f"init scale must be positive, got {scale}")
    return rng.uniform(-scale, scale, size=shape)


def adam_update(
    param: Parameter,
    learning_rate: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> None:
    """Apply one Adam step in place and clear the gradient.

    Moment estimates are bias-corrected; the denominator is
    sqrt(v_hat) + epsilon. Entries whose gradient has always been zero
    have zero moments and therefore never move.
    """
    if learning_rate <= 0.0:
        raise ConfigError(f"learning_rate must be positive, got {learning_rate}")
    if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
        raise ConfigError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
    if epsilon <= 0.0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    g = param.grad
    if g.shape != param.value.shape:
        raise ShapeError(f"gradient shape {g.shape} != value shape {param.value.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("gradient contains NaN or infinity")

    t = param.step_count + 1
    param.m *= beta1
    param.m += (1.0 - beta1) * g
    param.v *= beta2
    param.v += (1.0 - beta2) * g * g
    m_hat = param.m / (1.0 - beta1**t)
    v_hat = param.v / (1.0 - beta2**t)
    param.value -= learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
    param.step_count = t
    param.zero_grad()
