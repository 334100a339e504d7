# ensemble/network.py
"""
Assembly of embedding bank, components, projections and readout.

A single-component network skips fusion entirely: its fused prediction is the
component's own head and only that component's BCE enters the loss.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from autodiff.nn import Module
from autodiff.tensor import Tensor
from core.errors import ConfigError
from core.seeding import derive_rng
from features.batching import batch_iter
from features.schema import Dataset, ExampleBatch, FeatureSchema

from .components import (
    Component,
    ComponentConfig,
    ComponentInputs,
    ComponentOutput,
    Projection,
    build_component,
)
from .embedding_bank import EmbeddingBank
from .fusion import (
    FusionConfig,
    FusionResult,
    LossBreakdown,
    Readout,
    bce,
    confidence_fusion,
    pairwise_kl,
)

logger = logging.getLogger(__name__)


@dataclass
class NetworkOutput:
    components: dict[str, ComponentOutput]
    projected: dict[str, Tensor]
    fusion: FusionResult | None
    prediction: Tensor  # [B]


class EnsembleNetwork(Module):
    def __init__(
        self,
        schema: FeatureSchema,
        components: Sequence[ComponentConfig],
        fusion: FusionConfig,
        *,
        bank_mode: str = "multi",
        share_dense_mlp: bool = True,
        seed: int = 42,
    ):
        if not components:
            raise ConfigError("network needs at least one component")
        names = [c.name for c in components]
        if len(set(names)) != len(names):
            raise ConfigError(f"component names must be unique, got {names}")

        self.schema = schema
        self.fusion_cfg = fusion
        self.configs = list(components)
        self.bank = EmbeddingBank(
            schema,
            {c.name: c.embed_dim for c in components},
            mode=bank_mode,
            share_dense_mlp=share_dense_mlp,
            seed=seed,
        )

        ensemble = len(components) > 1
        self._project_heads = ensemble and fusion.head_input == "projected"
        self.components: dict[str, Component] = {}
        self.projections: dict[str, Projection] = {}
        for index, cfg in enumerate(components):
            rng = derive_rng(seed, 202, index)
            head_dim = fusion.d_proj if self._project_heads else cfg.d_out
            self.components[cfg.name] = build_component(cfg, schema, rng, head_dim)
            if ensemble:
                self.projections[cfg.name] = Projection(cfg.d_out, fusion.d_proj, rng)
        self.readout = (
            Readout(fusion.fused_width(len(components)), derive_rng(seed, 303))
            if ensemble
            else None
        )
        logger.debug(
            "Built network: %d components, bank=%s, %d parameters",
            len(components),
            bank_mode,
            self.parameter_count(),
        )

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def names(self) -> list[str]:
        return list(self.components)

    def inputs(self, name: str, batch: ExampleBatch) -> ComponentInputs:
        sequences, lengths = self.bank.lookup_sequence(name, batch)
        return ComponentInputs(
            sparse=self.bank.lookup_sparse(name, batch),
            sequences=sequences,
            seq_lengths=lengths,
            dense=self.bank.encode_dense(name, batch),
        )

    def forward(self, batch: ExampleBatch) -> NetworkOutput:
        outputs: dict[str, ComponentOutput] = {}
        projected: dict[str, Tensor] = {}
        for name, component in self.components.items():
            embedding = component.encode(self.inputs(name, batch))
            if name in self.projections:
                projected[name] = self.projections[name](embedding)
            head_in = projected[name] if self._project_heads else embedding
            outputs[name] = ComponentOutput(embedding, component.predict(head_in))

        if self.readout is None:
            only = next(iter(outputs.values()))
            return NetworkOutput(outputs, projected, None, only.prediction)

        result = confidence_fusion(
            self.fusion_cfg,
            [o.prediction for o in outputs.values()],
            list(projected.values()),
            self.readout,
        )
        return NetworkOutput(outputs, projected, result, result.prediction)

    __call__ = forward

    def loss(self, batch: ExampleBatch, output: NetworkOutput | None = None) -> LossBreakdown:
        output = output or self.forward(batch)
        component = {
            name: bce(o.prediction, batch.labels) for name, o in output.components.items()
        }
        if output.fusion is None:
            return LossBreakdown(
                component=component,
                fusion=Tensor(0.0),
                kl=Tensor(0.0),
                alpha=0.0,
            )
        return LossBreakdown(
            component=component,
            fusion=bce(output.prediction, batch.labels),
            kl=pairwise_kl([o.prediction for o in output.components.values()]),
            alpha=self.fusion_cfg.alpha,
            include_components=self.fusion_cfg.component_losses,
        )

    def predict(
        self, dataset: Dataset, batch_size: int = 1024
    ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """(fused scores [n], per-component scores {name: [n]}) in dataset order."""
        fused: list[np.ndarray] = []
        per: dict[str, list[np.ndarray]] = {name: [] for name in self.components}
        for batch in batch_iter(dataset, batch_size):
            out = self.forward(batch)
            fused.append(out.prediction.numpy())
            for name, o in out.components.items():
                per[name].append(o.prediction.numpy())
        return _join(fused), {name: _join(parts) for name, parts in per.items()}

    # -----------------------------------------------------------------
    # Accounting
    # -----------------------------------------------------------------

    def embedding_tables(self) -> dict[str, np.ndarray]:
        return {name: self.bank.table(name).numpy() for name in self.components}

    def parameter_counts(self) -> dict[str, int]:
        return {
            "total": self.parameter_count(),
            "embedding": self.bank.table_parameter_count(),
        }


def _join(parts: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if parts else np.zeros(0)
