# ensemble/fusion.py
"""
Confidence-based fusion and the collaborative objective.

    H_m = binary entropy of ŷ_m
    C_m = -H_m                     (detached when use_gradient_stop)
    w   = softmax_m(C)             per example
    e   = [w_1 e'_1 ‖ ... ‖ w_N e'_N]   or  Σ w_m e'_m   or  [e'_1 ‖ ... ‖ e'_N]
    ŷ   = clamp(sigmoid(W e + b))

    L_final = L_fusion + Σ_m L_m + α · L_kl
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from autodiff.nn import Linear, Module
from autodiff.tensor import (
    Tensor,
    as_tensor,
    clamp_prob,
    concat,
    log,
    mean,
    reshape,
    sigmoid,
    softmax,
    stop_gradient,
)
from core.errors import ArgumentError, ConfigError, ShapeError

FUSION_MODES = ("weighted_concat", "weighted_sum", "plain_concat")
HEAD_INPUTS = ("raw", "projected")


@dataclass(frozen=True)
class FusionConfig:
    mode: str = "weighted_concat"
    use_confidence: bool = True
    use_gradient_stop: bool = True
    alpha: float = 0.5
    d_proj: int = 16
    head_input: str = "raw"
    component_losses: bool = True

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ConfigError(f"unknown fusion mode {self.mode!r}; expected {FUSION_MODES}")
        if self.head_input not in HEAD_INPUTS:
            raise ConfigError(f"unknown head_input {self.head_input!r}; expected {HEAD_INPUTS}")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.d_proj < 1:
            raise ConfigError(f"d_proj must be >= 1, got {self.d_proj}")

    @property
    def weighted(self) -> bool:
        """Whether confidence weights actually enter the fused embedding."""
        return self.use_confidence and self.mode != "plain_concat"

    def fused_width(self, n_components: int) -> int:
        if self.mode == "weighted_sum":
            return self.d_proj
        return n_components * self.d_proj

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> FusionConfig:
        unknown = sorted(set(raw) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"fusion config: unknown keys {unknown}")
        return cls(**raw)


@dataclass
class FusionResult:
    confidences: np.ndarray  # [B x N]
    weights: Tensor  # [B x N]
    fused: Tensor  # [B x D]
    prediction: Tensor  # [B]


@dataclass
class LossBreakdown:
    component: dict[str, Tensor]
    fusion: Tensor
    kl: Tensor
    alpha: float
    total: Tensor = field(init=False)
    include_components: bool = True

    def __post_init__(self):
        self.total = total_objective(
            self.fusion,
            list(self.component.values()) if self.include_components else [],
            self.kl,
            self.alpha,
        )

    def as_floats(self) -> dict[str, Any]:
        return {
            "final": self.total.item(),
            "fusion": self.fusion.item(),
            "kl": self.kl.item(),
            "components": {name: t.item() for name, t in self.component.items()},
        }


# ---------------------------------------------------------------------
# Confidence
# ---------------------------------------------------------------------


def binary_entropy(p) -> Tensor:
    """H = -p ln p - (1-p) ln(1-p); inputs are expected clamped."""
    p = as_tensor(p)
    q = 1.0 - p
    return -(p * log(p)) - q * log(q)


def confidence(p, *, gradient_stop: bool = True) -> Tensor:
    c = -binary_entropy(p)
    return stop_gradient(c) if gradient_stop else c


def fusion_weights(confidences: Tensor) -> Tensor:
    """Softmax over the component axis, one row per example."""
    return softmax(confidences, axis=-1)


# ---------------------------------------------------------------------
# Fusion
# ---------------------------------------------------------------------


def fuse(projected: Sequence[Tensor], weights: Tensor | None, mode: str) -> Tensor:
    if mode not in FUSION_MODES:
        raise ConfigError(f"unknown fusion mode {mode!r}; expected {FUSION_MODES}")
    if not projected:
        raise ArgumentError("fuse needs at least one embedding")
    widths = {e.shape for e in projected}
    if len(widths) > 1:
        raise ShapeError(f"projected embeddings differ in shape: {sorted(widths)}")
    if mode == "plain_concat":
        return concat(list(projected), axis=1)

    if weights is None:
        raise ArgumentError(f"{mode} fusion needs weights")
    batch, n = weights.shape
    if n != len(projected) or batch != projected[0].shape[0]:
        raise ShapeError(
            f"weights {weights.shape} do not match {len(projected)} embeddings "
            f"of shape {projected[0].shape}"
        )
    scaled = [e * weights[:, m : m + 1] for m, e in enumerate(projected)]
    if mode == "weighted_concat":
        return concat(scaled, axis=1)
    total = scaled[0]
    for e in scaled[1:]:
        total = total + e
    return total


class Readout(Module):
    """ŷ_fused = clamp(sigmoid(W e + b))"""

    def __init__(self, width: int, rng: np.random.Generator, *, zero_init: bool = False):
        self.linear = Linear(width, 1, rng, zero_init=zero_init)

    def __call__(self, fused: Tensor) -> Tensor:
        return clamp_prob(sigmoid(reshape(self.linear(fused), (-1,))))


def confidence_fusion(
    cfg: FusionConfig,
    predictions: Sequence[Tensor],
    projected: Sequence[Tensor],
    readout: Readout,
) -> FusionResult:
    batch = projected[0].shape[0]
    n = len(projected)
    conf = concat(
        [
            reshape(confidence(p, gradient_stop=cfg.use_gradient_stop), (batch, 1))
            for p in predictions
        ],
        axis=1,
    )
    if cfg.weighted:
        weights = fusion_weights(conf)
    else:
        weights = Tensor(np.full((batch, n), 1.0 / n))
    # plain_concat never reads weights; the uniform 1/N is only reported.
    fused = fuse(projected, weights, cfg.mode)
    return FusionResult(
        confidences=conf.numpy().copy(),
        weights=weights,
        fused=fused,
        prediction=readout(fused),
    )


# ---------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------


def bce(p, y) -> Tensor:
    """Mean binary cross-entropy in nats."""
    p = as_tensor(p)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeError(f"bce: predictions {p.shape} vs labels {y.shape}")
    return -mean(y * log(p) + (1.0 - y) * log(1.0 - p))


def bernoulli_kl(p, q) -> Tensor:
    """Per-sample KL(Bern(p) ‖ Bern(q))."""
    p, q = as_tensor(p), as_tensor(q)
    return p * (log(p) - log(q)) + (1.0 - p) * (log(1.0 - p) - log(1.0 - q))


def symmetric_kl(p, q) -> Tensor:
    """½KL(p‖q) + ½KL(q‖p), averaged over the batch."""
    return mean(0.5 * bernoulli_kl(p, q) + 0.5 * bernoulli_kl(q, p))


def pairwise_kl(predictions: Sequence[Tensor]) -> Tensor:
    """Mean symmetric KL over unordered component pairs; 0 for a single component."""
    pairs = list(itertools.combinations(predictions, 2))
    if not pairs:
        return Tensor(0.0)
    total = symmetric_kl(*pairs[0])
    for a, b in pairs[1:]:
        total = total + symmetric_kl(a, b)
    return total * (1.0 / len(pairs))


def total_objective(fusion_loss, component_losses: Sequence, kl, alpha: float) -> Tensor:
    if alpha < 0:
        raise ArgumentError(f"alpha must be >= 0, got {alpha}")
    total = as_tensor(fusion_loss)
    for loss in component_losses:
        total = total + loss
    if alpha:
        total = total + as_tensor(kl) * alpha
    return total
