# experiments/studies.py
"""
Two comparison studies built on the trainer.

component_study: each component trained alone vs. its head inside the
ensemble vs. the fused prediction, under identical seeds, splits and budgets.

ne_study: one-epoch NE of a baseline single model against (a) the same model
with a 1.5x embedding and (b) the baseline plus a lightweight second
component at half the embedding size, fused by plain concatenation or by
confidence fusion.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable

from metrics.scoring import ne_delta

from .config import TrainConfig
from .records import RunRecord, summarize_seeds, summary_fields
from .trainer import one_epoch, train

logger = logging.getLogger(__name__)

COMPONENT_STUDY_METRICS = (
    "standalone_auc",
    "in_ensemble_auc",
    "fused_auc",
    "standalone_ne",
    "in_ensemble_ne",
    "fused_ne",
)
COMPONENT_STUDY_FIELDS = ("seed", "component", *COMPONENT_STUDY_METRICS)
COMPONENT_STUDY_SUMMARY_FIELDS = summary_fields(("component",), COMPONENT_STUDY_METRICS)
NE_STUDY_VARIANTS = ("baseline", "wide_1_5x", "plus_light_concat", "plus_light_confidence")
NE_STUDY_METRICS = ("ne", "ne_delta", "auc")
NE_STUDY_FIELDS = ("seed", "variant", *NE_STUDY_METRICS, "parameters", "config_hash")
NE_STUDY_SUMMARY_FIELDS = summary_fields(("variant",), NE_STUDY_METRICS)


def component_study(
    base: TrainConfig, seeds: Iterable[int], out_dir: str | Path
) -> tuple[list[RunRecord], list[dict[str, Any]]]:
    records: list[RunRecord] = []
    rows: list[dict[str, Any]] = []
    for seed in seeds:
        seeded = base.with_seed(seed)
        splits = seeded.data.load_splits(seed)
        ensemble = train(
            seeded, out_dir, kind="component_study", variant="ensemble", splits=splits
        )
        records.append(ensemble)
        fused = ensemble.headline()["fused"]
        heads = ensemble.headline()["components"]

        for component in seeded.components:
            solo_cfg = seeded.with_components(
                [component], name=f"{base.name}-solo-{component.name}"
            )
            solo = train(
                solo_cfg,
                out_dir,
                kind="component_study",
                variant=f"solo:{component.name}",
                splits=splits,
            )
            records.append(solo)
            standalone = solo.headline()["fused"]
            rows.append(
                {
                    "seed": seed,
                    "component": component.name,
                    "standalone_auc": standalone["auc"],
                    "in_ensemble_auc": heads[component.name]["auc"],
                    "fused_auc": fused["auc"],
                    "standalone_ne": standalone["ne"],
                    "in_ensemble_ne": heads[component.name]["ne"],
                    "fused_ne": fused["ne"],
                }
            )
            logger.info(
                "seed %d %s: standalone AUC=%.5f, in-ensemble AUC=%.5f, fused AUC=%.5f",
                seed,
                component.name,
                standalone["auc"],
                heads[component.name]["auc"],
                fused["auc"],
            )
    return records, rows


def component_study_summary(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    return summarize_seeds(rows, ("component",), COMPONENT_STUDY_METRICS)


def ne_study_configs(base: TrainConfig) -> dict[str, TrainConfig]:
    first = base.components[0]
    d = first.embed_dim
    light_src = base.components[1] if len(base.components) > 1 else first
    light = replace(light_src, name=f"{light_src.name}_light", embed_dim=max(1, d // 2))
    pair = [first, light]
    return {
        "baseline": base.with_components([first], name=f"{base.name}-baseline"),
        "wide_1_5x": base.with_components(
            [replace(first, embed_dim=max(d + 1, round(1.5 * d)))],
            name=f"{base.name}-wide_1_5x",
        ),
        "plus_light_concat": base.with_components(
            pair, name=f"{base.name}-plus_light_concat"
        ).with_fusion(mode="plain_concat", alpha=0.0, use_confidence=False),
        "plus_light_confidence": base.with_components(
            pair, name=f"{base.name}-plus_light_confidence"
        ).with_fusion(mode="weighted_concat", use_confidence=True),
    }


def ne_study(
    base: TrainConfig,
    out_dir: str | Path,
    *,
    seeds: Iterable[int] | None = None,
    cadence: int | None = None,
) -> tuple[list[RunRecord], list[dict[str, Any]]]:
    records: list[RunRecord] = []
    rows: list[dict[str, Any]] = []
    for seed in seeds or [base.seed]:
        seeded = base.with_seed(seed)
        splits = seeded.data.load_splits(seed)
        baseline_ne = None
        for variant, cfg in ne_study_configs(seeded).items():
            record = one_epoch(
                cfg, out_dir, cadence=cadence, kind="ne_study", variant=variant, splits=splits
            )
            records.append(record)
            fused = record.headline()["fused"]
            if baseline_ne is None:
                baseline_ne = fused["ne"]
            rows.append(
                {
                    "seed": seed,
                    "variant": variant,
                    "ne": fused["ne"],
                    "ne_delta": ne_delta(baseline_ne, fused["ne"]),
                    "auc": fused["auc"],
                    "parameters": record.parameter_counts["total"],
                    "config_hash": record.config_hash,
                }
            )
            logger.info(
                "seed %d %s: NE=%.5f (%+.3f%% vs baseline)",
                seed,
                variant,
                fused["ne"],
                100.0 * rows[-1]["ne_delta"],
            )
    return records, rows


def ne_study_summary(rows: Iterable[dict[str, Any]]) -> list[dict[str, Any]]:
    return summarize_seeds(rows, ("variant",), NE_STUDY_METRICS)
