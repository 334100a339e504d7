# experiments/ablation.py
"""Ablation variants: each is a pure TrainConfig -> TrainConfig transformation."""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from core.errors import ArgumentError, ConfigError

from .config import TrainConfig
from .records import RunRecord, metric_value, summarize_seeds, summary_fields
from .trainer import train

logger = logging.getLogger(__name__)


def _concat_only(cfg: TrainConfig) -> TrainConfig:
    return cfg.with_fusion(mode="plain_concat", alpha=0.0, use_confidence=False)


TRANSFORMS: dict[str, Callable[[TrainConfig], TrainConfig]] = {
    "full": lambda cfg: cfg,
    "no_confidence_fusion": lambda cfg: cfg.with_fusion(mode="plain_concat"),
    "no_kl": lambda cfg: cfg.with_fusion(alpha=0.0),
    "no_multi_embedding": lambda cfg: replace(cfg, bank_mode="shared"),
    "no_gradient_stop": lambda cfg: cfg.with_fusion(use_gradient_stop=False),
    "single_embedding_concat": lambda cfg: _concat_only(replace(cfg, bank_mode="shared")),
    "multi_embedding_concat": lambda cfg: _concat_only(replace(cfg, bank_mode="multi")),
}
VARIANTS = tuple(TRANSFORMS)

ABLATION_METRICS = ("auc", "gauc", "logloss", "ne")
ABLATION_FIELDS = ("variant", "seed", "config_hash", *ABLATION_METRICS)
ABLATION_SUMMARY_FIELDS = summary_fields(("variant",), ABLATION_METRICS)


def apply_variant(cfg: TrainConfig, variant: str) -> TrainConfig:
    try:
        transform = TRANSFORMS[variant]
    except KeyError:
        raise ArgumentError(f"unknown ablation variant {variant!r}; expected one of {VARIANTS}")
    if len(cfg.components) < 2:
        raise ConfigError("ablations need an ensemble config with at least 2 components")
    return transform(cfg)


def parse_variants(text: str) -> list[str]:
    if text.strip() == "all":
        return list(VARIANTS)
    variants = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [v for v in variants if v not in TRANSFORMS]
    if unknown:
        raise ArgumentError(f"unknown ablation variants {unknown}; expected one of {VARIANTS}")
    return variants


def run_ablation(
    base: TrainConfig, variant: str, out_dir: str | Path, **kwargs: Any
) -> RunRecord:
    cfg = apply_variant(base, variant)
    cfg = replace(cfg, name=f"{base.name}-{variant}")
    return train(cfg, out_dir, kind="ablation", variant=variant, **kwargs)


def run_ablations(
    base: TrainConfig,
    variants: Sequence[str],
    seeds: Iterable[int],
    out_dir: str | Path,
) -> list[RunRecord]:
    records = []
    for seed in seeds:
        seeded = base.with_seed(seed)
        # Every variant of one seed trains on the same split.
        splits = seeded.data.load_splits(seed)
        for variant in variants:
            logger.info("Ablation %s, seed %d", variant, seed)
            records.append(run_ablation(seeded, variant, out_dir, splits=splits))
    return records


def ablation_rows(records: Iterable[RunRecord]) -> list[dict[str, Any]]:
    rows = []
    for record in records:
        fused = record.headline().get("fused", {})
        rows.append(
            {
                "variant": record.variant,
                "seed": record.seed,
                "config_hash": record.config_hash,
                **{key: metric_value(fused, key) for key in ABLATION_METRICS},
            }
        )
    return rows


def ablation_summary(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    """Per-variant mean and std over seeds."""
    return summarize_seeds(rows, ("variant",), ABLATION_METRICS)
