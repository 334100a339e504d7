# autodiff/gradcheck.py
"""
Central finite-difference oracle for analytical gradients.

A coordinate is counted in ``skipped`` rather than compared when the stencil
straddles a kink (ReLU, clamp): either the central quotient moves between
step ``eps`` and ``eps / 2``, or the forward and backward one-sided quotients
disagree (a kink sitting exactly on the evaluation point).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .tensor import Tensor


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_error: float
    checked: int
    skipped: int
    worst: str

    @property
    def skipped_fraction(self) -> float:
        total = self.checked + self.skipped
        return self.skipped / total if total else 0.0


def relative_error(analytic: float, numeric: float, floor: float = 1e-3) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _evaluate_at(
    loss_fn: Callable[[], Tensor], param: Tensor, index: tuple[int, ...], value: float
) -> float:
    orig = param.data[index]
    param.data[index] = value
    try:
        return loss_fn().item()
    finally:
        param.data[index] = orig


def numerical_grad(
    loss_fn: Callable[[], Tensor], param: Tensor, index: tuple[int, ...], eps: float
) -> float:
    orig = float(param.data[index])
    up = _evaluate_at(loss_fn, param, index, orig + eps)
    down = _evaluate_at(loss_fn, param, index, orig - eps)
    return (up - down) / (2.0 * eps)


def _coordinates(
    shape: tuple[int, ...], sample: int | None, rng: np.random.Generator | None
) -> Iterator[tuple[int, ...]]:
    indices = list(np.ndindex(shape))
    if sample is None or sample >= len(indices):
        yield from indices
        return
    rng = rng or np.random.default_rng(0)
    for flat in rng.choice(len(indices), size=sample, replace=False):
        yield indices[int(flat)]


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Sequence[Tensor],
    *,
    eps: float = 1e-5,
    smooth_tol: float = 1e-6,
    kink_tol: float = 1e-3,
    floor: float = 1e-3,
    sample: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """
    Compare backward() against central differences for the coordinates of ``params``.

    ``sample`` limits the check to that many random coordinates per parameter.
    """
    named = (
        dict(params)
        if isinstance(params, Mapping)
        else {f"param{i}": p for i, p in enumerate(params)}
    )
    for p in named.values():
        p.grad = None
    base = loss_fn()
    base.backward()
    f0 = base.item()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in named.items()
    }

    worst, worst_at = 0.0, ""
    checked = skipped = 0
    for name, p in named.items():
        for index in _coordinates(p.data.shape, sample, rng):
            orig = float(p.data[index])
            up = _evaluate_at(loss_fn, p, index, orig + eps)
            down = _evaluate_at(loss_fn, p, index, orig - eps)
            full = (up - down) / (2.0 * eps)
            forward, backward = (up - f0) / eps, (f0 - down) / eps
            if abs(forward - backward) > kink_tol * max(1.0, abs(forward), abs(backward)):
                skipped += 1
                continue
            half = numerical_grad(loss_fn, p, index, eps / 2.0)
            if abs(full - half) > smooth_tol * max(1.0, abs(full)):
                skipped += 1
                continue
            err = relative_error(float(analytic[name][index]), full, floor)
            checked += 1
            if err > worst:
                worst, worst_at = err, f"{name}{list(index)}"
    return GradCheckResult(
        max_rel_error=worst, checked=checked, skipped=skipped, worst=worst_at
    )
