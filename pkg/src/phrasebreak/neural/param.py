"""Named parameter: a value tensor and its accumulated gradient."""

from __future__ import annotations

import numpy as np


class Parameter:
    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape}, dtype={self.value.dtype})"


def zero_gradients(params) -> None:
    for p in params:
        p.zero_grad()


def check_unique_names(params) -> None:
    seen = set()
    for p in params:
        if p.name in seen:
            raise ValueError(f"duplicate parameter name {p.name!r}")
        seen.add(p.name)
