# experiments/sweep.py
"""
Embedding-scale sweep.

For a multiplier k and the first component c of the base config (base dim d):
  se           one model, c at dim k·d
  me           c duplicated k times at dim d, plain concat, shared head only
  ours_sum     k components at dim d (cycling through the base components),
               confidence fusion by weighted sum
  ours_concat  same with weighted concat
At k = 1 every mode is the single base model.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from core.errors import ArgumentError
from ensemble.components import ComponentConfig

from .config import TrainConfig
from .records import RunRecord, metric_value, summarize_seeds, summary_fields
from .trainer import one_epoch, train

logger = logging.getLogger(__name__)

SWEEP_MODES = ("se", "me", "ours_sum", "ours_concat")
MULTIPLIERS = (1, 2, 3, 4, 10)
SWEEP_METRICS = ("auc", "gauc", "logloss", "ne")
SWEEP_FIELDS = (
    "mode",
    "multiplier",
    "seed",
    "config_hash",
    *SWEEP_METRICS,
    "parameters",
    "embedding_parameters",
)
SWEEP_SUMMARY_FIELDS = summary_fields(("mode", "multiplier"), SWEEP_METRICS)


def _copies(components: Sequence[ComponentConfig], k: int) -> list[ComponentConfig]:
    picked = [components[i % len(components)] for i in range(k)]
    return [replace(c, name=f"{c.name}_{i}") for i, c in enumerate(picked)]


def sweep_config(base: TrainConfig, mode: str, multiplier: int) -> TrainConfig:
    if mode not in SWEEP_MODES:
        raise ArgumentError(f"unknown sweep mode {mode!r}; expected {SWEEP_MODES}")
    if multiplier not in MULTIPLIERS:
        raise ArgumentError(f"multiplier must be one of {MULTIPLIERS}, got {multiplier}")

    first = base.components[0]
    name = f"{base.name}-{mode}-x{multiplier}"
    if multiplier == 1 or mode == "se":
        single = replace(first, embed_dim=first.embed_dim * multiplier)
        return base.with_components([single], name=name)
    if mode == "me":
        cfg = base.with_components(_copies([first], multiplier), name=name)
        return cfg.with_fusion(
            mode="plain_concat", alpha=0.0, use_confidence=False, component_losses=False
        )
    fusion_mode = "weighted_sum" if mode == "ours_sum" else "weighted_concat"
    cfg = base.with_components(_copies(base.components, multiplier), name=name)
    return cfg.with_fusion(mode=fusion_mode, use_confidence=True)


def parse_csv_list(text: str, cast=str) -> list:
    try:
        return [cast(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ArgumentError(f"bad list {text!r}: {e}") from e


def scale_sweep(
    base: TrainConfig,
    multipliers: Iterable[int],
    modes: Iterable[str],
    out_dir: str | Path,
    *,
    seeds: Iterable[int] | None = None,
    one_epoch_mode: bool = False,
) -> list[RunRecord]:
    multipliers = list(multipliers)
    modes = list(modes)
    for k in multipliers:
        if k not in MULTIPLIERS:
            raise ArgumentError(f"multiplier must be one of {MULTIPLIERS}, got {k}")
    for mode in modes:
        if mode not in SWEEP_MODES:
            raise ArgumentError(f"unknown sweep mode {mode!r}; expected {SWEEP_MODES}")

    records = []
    for seed in seeds or [base.seed]:
        seeded = base.with_seed(seed)
        splits = seeded.data.load_splits(seed)
        for mode in modes:
            for k in multipliers:
                cfg = sweep_config(seeded, mode, k)
                logger.info("Sweep %s x%d, seed %d", mode, k, seed)
                runner = one_epoch if one_epoch_mode else train
                record = runner(cfg, out_dir, kind="sweep", variant=f"{mode}-x{k}", splits=splits)
                record.tags.update({"mode": mode, "multiplier": k})
                records.append(record)
    return records


def sweep_rows(records: Iterable[RunRecord]) -> list[dict[str, Any]]:
    rows = []
    for record in records:
        fused = record.headline().get("fused", {})
        rows.append(
            {
                "mode": record.tags.get("mode"),
                "multiplier": record.tags.get("multiplier"),
                "seed": record.seed,
                "config_hash": record.config_hash,
                **{key: metric_value(fused, key) for key in SWEEP_METRICS},
                "parameters": record.parameter_counts.get("total"),
                "embedding_parameters": record.parameter_counts.get("embedding"),
            }
        )
    return rows


def sweep_summary(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    """Per (mode, multiplier) mean and std over seeds."""
    return summarize_seeds(rows, ("mode", "multiplier"), SWEEP_METRICS)
