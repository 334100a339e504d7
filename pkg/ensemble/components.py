# ensemble/components.py
"""
Interchangeable component models.

Every kind maps (sparse [B x n x d], sequences [B x k x N x d] + lengths,
dense [B x d]) to an output embedding e_m [B x d_out]; a per-component head
turns an embedding into ŷ_m = clamp(sigmoid(w·e + b)).

The hier_ensemble and seq_attention kinds are compact stand-ins for the two
roles an industrial ensemble pairs up (stacked heterogeneous interaction
blocks vs. target-aware sequence modelling); they are not reimplementations
of any particular production architecture.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np

from autodiff.nn import MLP, Linear, Module
from autodiff.tensor import (
    Tensor,
    broadcast_to,
    clamp_prob,
    concat,
    reshape,
    sigmoid,
    softmax,
    take,
    tsum,
)
from core.errors import ConfigError
from features.schema import FeatureSchema

COMPONENT_KINDS = ("mlp_tower", "cross_net", "seq_attention", "hier_ensemble", "linear")


@dataclass(frozen=True)
class ComponentConfig:
    name: str
    kind: str
    embed_dim: int = 16
    d_out: int = 16
    depth: int = 2
    hidden: int = 64
    att_hidden: int = 16

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise ConfigError(
                f"component {self.name!r}: unknown kind {self.kind!r}; expected {COMPONENT_KINDS}"
            )
        if self.depth < 1:
            raise ConfigError(f"component {self.name!r}: depth must be >= 1")
        if self.d_out < 1 or self.embed_dim < 1 or self.hidden < 1:
            raise ConfigError(
                f"component {self.name!r}: embed_dim, d_out and hidden must be >= 1"
            )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ComponentConfig:
        known = {k: raw[k] for k in cls.__dataclass_fields__ if k in raw}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ConfigError(f"component config: unknown keys {unknown}")
        return cls(**known)


@dataclass(frozen=True)
class ComponentInputs:
    sparse: Tensor  # [B x n x d]
    sequences: Tensor  # [B x k x N x d]
    seq_lengths: np.ndarray  # [B x k]
    dense: Tensor  # [B x d]

    @property
    def batch_size(self) -> int:
        return self.sparse.shape[0]


@dataclass(frozen=True)
class ComponentOutput:
    embedding: Tensor  # [B x d_out]
    prediction: Tensor  # [B], clamped into [PROB_EPS, 1 - PROB_EPS]


# ---------------------------------------------------------------------
# Input adapters
# ---------------------------------------------------------------------


def valid_mask(lengths: np.ndarray, width: int) -> np.ndarray:
    """Boolean [..., width]: position t is valid iff t < length."""
    return np.arange(width) < np.asarray(lengths)[..., None]


def masked_mean_pool(sequences: Tensor, lengths: np.ndarray) -> Tensor:
    """[B x k x N x d] -> [B x k x d]; empty sequences pool to the zero vector."""
    width = sequences.shape[2]
    mask = valid_mask(lengths, width)[..., None].astype(np.float64)
    counts = np.maximum(np.asarray(lengths, dtype=np.float64), 1.0)[..., None]
    return tsum(sequences * mask, axis=2) * (1.0 / counts)


def flatten_inputs(
    sparse: Tensor, sequences: Tensor, lengths: np.ndarray, dense: Tensor
) -> Tensor:
    """Concatenate sparse rows, masked-mean pooled sequences and the dense vector."""
    batch = sparse.shape[0]
    pooled = masked_mean_pool(sequences, lengths)
    return concat(
        [
            reshape(sparse, (batch, -1)),
            reshape(pooled, (batch, -1)),
            dense,
        ],
        axis=1,
    )


def flat_width(schema: FeatureSchema, embed_dim: int) -> int:
    return (schema.n_sparse + schema.n_sequence + 1) * embed_dim


# ---------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------


class CrossLayer(Module):
    """x_{l+1} = x_0 ⊙ (W x_l + b) + x_l"""

    def __init__(self, width: int, rng: np.random.Generator):
        self.linear = Linear(width, width, rng)

    def __call__(self, x0: Tensor, xl: Tensor) -> Tensor:
        return x0 * self.linear(xl) + xl


def attend(
    scorer: MLP, history: Tensor, query: Tensor, lengths: np.ndarray
) -> tuple[Tensor, Tensor]:
    """
    Target-aware attention over one behaviour sequence.

    history [B x N x d], query [B x d], lengths [B]
    -> (context [B x d], weights [B x N]); padding positions get weight 0.
    """
    batch, width, dim = history.shape
    q = broadcast_to(reshape(query, (batch, 1, dim)), (batch, width, dim))
    features = concat([history, q, history * q], axis=-1)
    scores = reshape(scorer(features), (batch, width))
    weights = softmax(scores, axis=-1, mask=valid_mask(lengths, width))
    context = tsum(history * reshape(weights, (batch, width, 1)), axis=1)
    return context, weights


# ---------------------------------------------------------------------
# Component kinds
# ---------------------------------------------------------------------


class Component(Module):
    kind = ""

    def __init__(
        self,
        cfg: ComponentConfig,
        schema: FeatureSchema,
        rng: np.random.Generator,
        head_dim: int | None = None,
    ):
        self.cfg = cfg
        self.schema = schema
        self.head = Linear(head_dim or cfg.d_out, 1, rng)

    @property
    def name(self) -> str:
        return self.cfg.name

    def encode(self, inputs: ComponentInputs) -> Tensor:
        raise NotImplementedError

    def predict(self, embedding: Tensor) -> Tensor:
        logits = reshape(self.head(embedding), (-1,))
        return clamp_prob(sigmoid(logits))

    def __call__(self, inputs: ComponentInputs) -> ComponentOutput:
        embedding = self.encode(inputs)
        return ComponentOutput(embedding=embedding, prediction=self.predict(embedding))


class MlpTower(Component):
    kind = "mlp_tower"

    def __init__(self, cfg, schema, rng, head_dim=None):
        super().__init__(cfg, schema, rng, head_dim)
        width = flat_width(schema, cfg.embed_dim)
        self.tower = MLP([width] + [cfg.hidden] * (cfg.depth - 1) + [cfg.d_out], rng)

    def encode(self, inputs):
        x = flatten_inputs(inputs.sparse, inputs.sequences, inputs.seq_lengths, inputs.dense)
        return self.tower(x)


class CrossNet(Component):
    kind = "cross_net"

    def __init__(self, cfg, schema, rng, head_dim=None):
        super().__init__(cfg, schema, rng, head_dim)
        width = flat_width(schema, cfg.embed_dim)
        self.layers = [CrossLayer(width, rng) for _ in range(cfg.depth)]
        self.out = Linear(width, cfg.d_out, rng)

    def cross(self, x0: Tensor) -> Tensor:
        x = x0
        for layer in self.layers:
            x = layer(x0, x)
        return x

    def encode(self, inputs):
        x0 = flatten_inputs(inputs.sparse, inputs.sequences, inputs.seq_lengths, inputs.dense)
        return self.out(self.cross(x0))


class SeqAttention(Component):
    kind = "seq_attention"

    def __init__(self, cfg, schema, rng, head_dim=None):
        super().__init__(cfg, schema, rng, head_dim)
        target = schema.resolved_target_field()
        if schema.n_sequence == 0:
            raise ConfigError(f"component {cfg.name!r}: seq_attention needs a sequence field")
        if target is None:
            raise ConfigError(f"component {cfg.name!r}: seq_attention needs a target item field")
        self._target_index = schema.sparse_index(target)
        d = cfg.embed_dim
        self.scorer = MLP([3 * d, cfg.att_hidden, 1], rng, final_activation=False)
        width = flat_width(schema, d)
        self.tower = MLP([width] + [cfg.hidden] * (cfg.depth - 1) + [cfg.d_out], rng)

    def contexts(self, inputs: ComponentInputs) -> list[tuple[Tensor, Tensor]]:
        query = take(inputs.sparse, (slice(None), self._target_index))
        return [
            attend(
                self.scorer,
                take(inputs.sequences, (slice(None), j)),
                query,
                inputs.seq_lengths[:, j],
            )
            for j in range(inputs.sequences.shape[1])
        ]

    def encode(self, inputs):
        batch = inputs.batch_size
        pooled = [context for context, _ in self.contexts(inputs)]
        x = concat(
            [reshape(inputs.sparse, (batch, -1)), *pooled, inputs.dense], axis=1
        )
        return self.tower(x)


class HierEnsemble(Component):
    """
    Stacked blocks; each runs a cross layer and a small MLP side by side on the
    block input, re-projects their concatenation and adds the input back:
    z_{l+1} = proj([cross(z_l) ‖ mlp(z_l)]) + z_l
    """

    kind = "hier_ensemble"

    def __init__(self, cfg, schema, rng, head_dim=None):
        super().__init__(cfg, schema, rng, head_dim)
        width = flat_width(schema, cfg.embed_dim)
        self.crosses = [CrossLayer(width, rng) for _ in range(cfg.depth)]
        self.mlps = [
            MLP([width, cfg.hidden, width], rng, final_activation=False)
            for _ in range(cfg.depth)
        ]
        self.projs = [Linear(2 * width, width, rng) for _ in range(cfg.depth)]
        self.out = Linear(width, cfg.d_out, rng)

    def blocks(self, z: Tensor) -> Tensor:
        for cross, mlp, proj in zip(self.crosses, self.mlps, self.projs):
            z = proj(concat([cross(z, z), mlp(z)], axis=1)) + z
        return z

    def encode(self, inputs):
        z = flatten_inputs(inputs.sparse, inputs.sequences, inputs.seq_lengths, inputs.dense)
        return self.out(self.blocks(z))


class LinearModel(Component):
    """Logistic-regression style baseline: e_m is a linear map of the flat input."""

    kind = "linear"

    def __init__(self, cfg, schema, rng, head_dim=None):
        super().__init__(cfg, schema, rng, head_dim)
        self.out = Linear(flat_width(schema, cfg.embed_dim), cfg.d_out, rng)

    def encode(self, inputs):
        x = flatten_inputs(inputs.sparse, inputs.sequences, inputs.seq_lengths, inputs.dense)
        return self.out(x)


_REGISTRY: dict[str, Callable[..., Component]] = {
    cls.kind: cls for cls in (MlpTower, CrossNet, SeqAttention, HierEnsemble, LinearModel)
}


def build_component(
    cfg: ComponentConfig,
    schema: FeatureSchema,
    rng: np.random.Generator,
    head_dim: int | None = None,
) -> Component:
    return _REGISTRY[cfg.kind](cfg, schema, rng, head_dim)


class Projection(Module):
    """Per-component linear map from d_out to the common fusion width d_proj."""

    def __init__(
        self,
        d_in: int,
        d_proj: int,
        rng: np.random.Generator,
        *,
        identity_init: bool = False,
    ):
        self.linear = Linear(d_in, d_proj, rng)
        if identity_init:
            if d_in != d_proj:
                raise ConfigError(
                    f"identity projection needs a square map, got {d_in} -> {d_proj}"
                )
            self.linear.weight.data = np.eye(d_in)

    def __call__(self, embedding: Tensor) -> Tensor:
        return self.linear(embedding)
