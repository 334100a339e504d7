# autodiff/optim.py
from __future__ import annotations

from typing import Sequence

import numpy as np

from core.errors import ArgumentError

from .tensor import Tensor


class Adam:
    """
    Adam with decoupled weight decay.

    Parameters whose ``grad`` is None after backward (unused this step) keep
    their moments untouched and are not decayed.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ArgumentError(f"learning rate must be > 0, got {lr}")
        if weight_decay < 0:
            raise ArgumentError(f"weight decay must be >= 0, got {weight_decay}")

        # Shared tensors must be stepped once.
        unique: dict[int, Tensor] = {}
        for p in params:
            unique.setdefault(id(p), p)
        self.params = list(unique.values())

        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * p.grad
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (p.grad * p.grad)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data = p.data - self.lr * update

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
