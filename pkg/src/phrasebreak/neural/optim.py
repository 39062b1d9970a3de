"""Adam optimizer and global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from phrasebreak.neural.param import Parameter


@dataclass
class AdamState:
    """Per-parameter first/second moment estimates."""

    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameter(cls, param: Parameter, **kwargs) -> "AdamState":
        return cls(m=np.zeros_like(param.value), v=np.zeros_like(param.value), **kwargs)


def adam_step(param: Parameter, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place."""
    grad = param.grad
    if not np.isfinite(grad).all():
        raise ValueError(f"non-finite gradient for parameter {param.name!r}")
    state.step_count += 1
    t = state.step_count
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**t)
    v_hat = state.v / (1.0 - state.beta2**t)
    param.value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


class Adam:
    """Adam over a parameter list; keeps one AdamState per parameter."""

    def __init__(self, params: list[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.states = {
            p.name: AdamState.for_parameter(p, beta1=beta1, beta2=beta2, eps=eps)
            for p in self.params
        }
        if len(self.states) != len(self.params):
            raise ValueError("parameter names must be unique")

    def step(self) -> None:
        for p in self.params:
            adam_step(p, self.states[p.name], self.lr)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def clip_gradients(params: list[Parameter], max_norm: float) -> float:
    """Scale gradients so the global L2 norm is at most max_norm.

    Returns the scaling factor that was applied (1.0 when under the limit).
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    total = 0.0
    for p in params:
        total += float((p.grad.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if norm <= max_norm or norm == 0.0:
        return 1.0
    factor = max_norm / norm
    for p in params:
        p.grad *= factor
    return factor
