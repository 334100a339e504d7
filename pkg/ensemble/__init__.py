from .components import (
    COMPONENT_KINDS,
    ComponentConfig,
    ComponentInputs,
    ComponentOutput,
    Projection,
    attend,
    build_component,
    flatten_inputs,
)
from .embedding_bank import BANK_MODES, EmbeddingBank
from .fusion import (
    FUSION_MODES,
    FusionConfig,
    FusionResult,
    LossBreakdown,
    Readout,
    bce,
    binary_entropy,
    confidence,
    fuse,
    fusion_weights,
    pairwise_kl,
    symmetric_kl,
    total_objective,
)
from .network import EnsembleNetwork, NetworkOutput

__all__ = [
    "BANK_MODES",
    "COMPONENT_KINDS",
    "FUSION_MODES",
    "ComponentConfig",
    "ComponentInputs",
    "ComponentOutput",
    "EmbeddingBank",
    "EnsembleNetwork",
    "FusionConfig",
    "FusionResult",
    "LossBreakdown",
    "NetworkOutput",
    "Projection",
    "Readout",
    "attend",
    "bce",
    "binary_entropy",
    "build_component",
    "confidence",
    "flatten_inputs",
    "fuse",
    "fusion_weights",
    "pairwise_kl",
    "symmetric_kl",
    "total_objective",
]
