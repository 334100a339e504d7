# autodiff/nn.py
"""
Parameter containers and the two layers everything else is built from.

Initialization (the model description never specifies one):
- weight matrices: uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))
- biases: zeros
- embedding rows: normal(0, 0.01)
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from core.errors import CheckpointError

from .tensor import Tensor, matmul, relu, reshape


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / max(fan_in + fan_out, 1))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def normal_rows(
    rng: np.random.Generator, n_rows: int, dim: int, std: float = 0.01
) -> np.ndarray:
    return rng.normal(0.0, std, size=(n_rows, dim))


def parameter(data: np.ndarray) -> Tensor:
    return Tensor(data, requires_grad=True)


class Module:
    """
    Minimal parameter tree.

    Parameters are discovered from instance attributes in definition order:
    requires_grad Tensors, nested Modules, and lists/dicts of Modules. A tensor
    reachable twice (shared embedding table) is reported once, under the first
    name it was found at.
    """

    def _children(self) -> Iterator[tuple[str, object]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, (Tensor, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Tensor, Module)):
                        yield f"{name}.{i}", item
            elif isinstance(value, dict):
                for key, item in value.items():
                    if isinstance(item, (Tensor, Module)):
                        yield f"{name}.{key}", item

    def named_parameters(
        self, prefix: str = "", _seen: set[int] | None = None
    ) -> Iterator[tuple[str, Tensor]]:
        seen = set() if _seen is None else _seen
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor):
                if value.requires_grad and id(value) not in seen:
                    seen.add(id(value))
                    yield full, value
            else:
                yield from value.named_parameters(f"{full}.", seen)

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names differ (missing={missing[:5]}, unexpected={unexpected[:5]})"
            )
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise CheckpointError(
                    f"{name}: checkpoint shape {value.shape} != model shape {p.shape}"
                )
            p.data = value.copy()


class Linear(Module):
    """y = x W + b over the last axis; leading axes are flattened and restored."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        *,
        bias: bool = True,
        zero_init: bool = False,
    ):
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            w = np.zeros((in_features, out_features))
        else:
            w = xavier_uniform(rng, in_features, out_features)
        self.weight = parameter(w)
        self.bias = parameter(np.zeros(out_features)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        lead = x.shape[:-1]
        flat = x if x.ndim == 2 else reshape(x, (-1, x.shape[-1]))
        out = matmul(flat, self.weight)
        if self.bias is not None:
            out = out + self.bias
        return out if x.ndim == 2 else reshape(out, (*lead, self.out_features))


class MLP(Module):
    """Stack of Linear layers with ReLU after every layer except optionally the last."""

    def __init__(
        self,
        sizes: list[int],
        rng: np.random.Generator,
        *,
        final_activation: bool = True,
    ):
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self._final_activation = final_activation

    @property
    def out_features(self) -> int:
        return self.layers[-1].out_features

    def __call__(self, x: Tensor) -> Tensor:
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < last or self._final_activation:
                x = relu(x)
        return x
