"""Adam with L2 weight decay folded into the gradient."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mmgnn.autodiff.tape import Parameter


@dataclass
class AdamState:
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, values: Sequence[np.ndarray]) -> AdamState:
        return cls(0, [np.zeros_like(x) for x in values], [np.zeros_like(x) for x in values])


def adam_step(
    values: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    wd: float = 0.0,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns new values and state, inputs untouched."""
    if len(state.m) != len(values):
        state = AdamState.zeros_like(values)
    t = state.step + 1
    new_values, new_m, new_v = [], [], []
    for theta, g, m, v in zip(values, grads, state.m, state.v):
        if m.shape != theta.shape or g.shape != theta.shape:
            raise ValueError(f"Adam state shape {m.shape} does not match parameter {theta.shape}")
        g = g + wd * theta
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new_values.append(theta - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_values, AdamState(t, new_m, new_v)


class Adam:
    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 1e-2,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros_like([p.values for p in self.params])

    def step(self) -> None:
        values, self.state = adam_step(
            [p.values for p in self.params],
            [p.grad for p in self.params],
            self.state,
            self.lr,
            self.weight_decay,
            self.beta1,
            self.beta2,
            self.eps,
        )
        for p, value in zip(self.params, values):
            p.assign(value)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
