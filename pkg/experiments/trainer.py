# experiments/trainer.py
"""
Training and evaluation loops.

``train`` runs shuffled mini-batch epochs, scores the validation split every
``eval_every`` epochs, keeps the best-validation-AUC checkpoint and reports
final metrics from that checkpoint. ``one_epoch`` is a single pass in stored
order with an NE learning curve.
"""

from __future__ import annotations

import logging
import math
import time
from collections import defaultdict
from pathlib import Path
from typing import Any

import numpy as np

from autodiff.optim import Adam
from core.errors import ConfigError, DivergenceError, NumericDomainError
from core.seeding import derive_seed
from ensemble.network import EnsembleNetwork
from features.batching import batch_iter, n_batches
from features.schema import Dataset, ExampleBatch
from metrics.scoring import compute_report, effective_rank, normalized_entropy

from .checkpoint import build_network, restore_network, save_checkpoint
from .config import TrainConfig
from .records import RunRecord

logger = logging.getLogger(__name__)

Splits = tuple[Dataset, Dataset, Dataset]
SPLIT_NAMES = ("train", "val", "test")


def evaluate_network(
    network: EnsembleNetwork,
    dataset: Dataset,
    *,
    gauc_weighting: str = "uniform",
    batch_size: int = 1024,
) -> dict[str, Any]:
    """Fused and per-component metric reports on ``dataset``; parameters untouched."""
    fused, per_component = network.predict(dataset, batch_size)

    def report(scores: np.ndarray) -> dict[str, Any]:
        return compute_report(scores, dataset.labels, dataset.user_ids, gauc_weighting).to_dict()

    return {
        "fused": report(fused),
        "components": {name: report(scores) for name, scores in per_component.items()},
    }


def evaluate(checkpoint: str | Path, dataset: Dataset, *, batch_size: int = 1024) -> dict[str, Any]:
    cfg, network = restore_network(checkpoint)
    if dataset.schema != cfg.schema:
        raise ConfigError(f"dataset schema does not match the schema stored in {checkpoint}")
    return evaluate_network(
        network, dataset, gauc_weighting=cfg.gauc_weighting, batch_size=batch_size
    )


def train_step(
    network: EnsembleNetwork, optimizer: Adam, batch: ExampleBatch, step: int
) -> dict[str, Any]:
    optimizer.zero_grad()
    try:
        breakdown = network.loss(batch)
    except NumericDomainError as e:
        raise DivergenceError(str(e), batch_index=step) from e
    losses = breakdown.as_floats()
    if not math.isfinite(losses["final"]):
        raise DivergenceError(f"loss is {losses['final']}", batch_index=step)
    breakdown.total.backward()
    optimizer.step()
    for p in optimizer.params:
        if not np.all(np.isfinite(p.data)):
            raise DivergenceError("non-finite parameters after the update", batch_index=step)
    return losses


def _mean_losses(rows: list[dict[str, Any]]) -> dict[str, Any]:
    if not rows:
        return {}
    components: dict[str, float] = defaultdict(float)
    for row in rows:
        for name, value in row["components"].items():
            components[name] += value
    n = len(rows)
    return {
        "final": sum(r["final"] for r in rows) / n,
        "fusion": sum(r["fusion"] for r in rows) / n,
        "kl": sum(r["kl"] for r in rows) / n,
        "components": {name: total / n for name, total in components.items()},
    }


def _eval_split(splits: Splits) -> Dataset:
    _, val, _ = splits
    return val if len(val) else splits[0]


def _finish(
    record: RunRecord,
    network: EnsembleNetwork,
    cfg: TrainConfig,
    splits: Splits,
    started: float,
) -> RunRecord:
    for name, ds in zip(SPLIT_NAMES, splits):
        if len(ds):
            record.final[name] = evaluate_network(
                network, ds, gauc_weighting=cfg.gauc_weighting, batch_size=cfg.batch_size
            )
    record.effective_ranks = {
        name: effective_rank(table) for name, table in network.embedding_tables().items()
    }
    record.parameter_counts = network.parameter_counts()
    record.wall_clock = time.perf_counter() - started
    fused = record.headline().get("fused", {})
    logger.info(
        "%s finished in %.1fs: %s AUC=%.5f NE=%.5f",
        record.name,
        record.wall_clock,
        record.headline_split,
        fused.get("auc", float("nan")),
        fused.get("ne", float("nan")),
    )
    return record


def _new_record(cfg: TrainConfig, kind: str, variant: str) -> RunRecord:
    return RunRecord(
        name=cfg.name,
        kind=kind,
        variant=variant,
        seed=cfg.seed,
        config_hash=cfg.config_hash(),
        config=cfg.to_dict(),
    )


def train(
    cfg: TrainConfig,
    out_dir: str | Path,
    *,
    kind: str = "train",
    variant: str = "",
    splits: Splits | None = None,
) -> RunRecord:
    started = time.perf_counter()
    out_dir = Path(out_dir)
    splits = splits or cfg.data.load_splits(cfg.seed)
    train_ds = splits[0]
    eval_ds = _eval_split(splits)

    network = build_network(cfg)
    optimizer = Adam(network.parameters(), cfg.optimizer.lr, cfg.optimizer.weight_decay)
    record = _new_record(cfg, kind, variant)
    checkpoint = out_dir / f"{cfg.name}-{record.config_hash}.ckpt"
    best_auc = -math.inf

    logger.info(
        "Training %s (%s) seed=%d: %d train rows, %d components, %d parameters",
        cfg.name,
        variant or kind,
        cfg.seed,
        len(train_ds),
        network.n_components,
        network.parameter_count(),
    )
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        rows = []
        for batch in batch_iter(train_ds, cfg.batch_size, derive_seed(cfg.seed, 404, epoch)):
            rows.append(train_step(network, optimizer, batch, step))
            step += 1
        losses = _mean_losses(rows)
        record.epochs.append({"epoch": epoch, **losses})
        logger.info(
            "epoch %d: L_final=%.5f L_fusion=%.5f L_kl=%.5f",
            epoch,
            losses["final"],
            losses["fusion"],
            losses["kl"],
        )

        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            metrics = evaluate_network(
                network, eval_ds, gauc_weighting=cfg.gauc_weighting, batch_size=cfg.batch_size
            )
            record.evals.append({"epoch": epoch, "step": step, **metrics})
            auc = metrics["fused"]["auc"]
            logger.info("epoch %d: val AUC=%.5f NE=%.5f", epoch, auc, metrics["fused"]["ne"])
            if auc > best_auc:
                best_auc = auc
                save_checkpoint(network, cfg, checkpoint)

    record.steps = step
    record.checkpoint = str(checkpoint)
    # Final numbers come from the reloaded best checkpoint, exactly what evaluate() sees.
    _, network = restore_network(checkpoint)
    return _finish(record, network, cfg, splits, started)


def curve_steps(total_steps: int, cadence: int) -> list[int]:
    """Steps after which NE is sampled: every ``cadence``, plus the last step."""
    points = list(range(cadence, total_steps + 1, cadence))
    if total_steps and (not points or points[-1] != total_steps):
        points.append(total_steps)
    return points


def one_epoch(
    cfg: TrainConfig,
    out_dir: str | Path,
    *,
    cadence: int | None = None,
    kind: str = "one_epoch",
    variant: str = "",
    splits: Splits | None = None,
) -> RunRecord:
    started = time.perf_counter()
    out_dir = Path(out_dir)
    cadence = cadence or cfg.curve_cadence
    if cadence < 1:
        raise ConfigError(f"cadence must be >= 1, got {cadence}")
    splits = splits or cfg.data.load_splits(cfg.seed)
    train_ds = splits[0]
    eval_ds = _eval_split(splits)

    network = build_network(cfg)
    optimizer = Adam(network.parameters(), cfg.optimizer.lr, cfg.optimizer.weight_decay)
    record = _new_record(cfg, kind, variant)
    samples = set(curve_steps(n_batches(train_ds, cfg.batch_size), cadence))

    rows = []
    step = 0
    for batch in batch_iter(train_ds, cfg.batch_size):
        rows.append(train_step(network, optimizer, batch, step))
        step += 1
        if step in samples:
            fused, per_component = network.predict(eval_ds, cfg.batch_size)
            point = {
                "step": step,
                "ne": normalized_entropy(fused, eval_ds.labels),
                "components": {
                    name: normalized_entropy(scores, eval_ds.labels)
                    for name, scores in per_component.items()
                },
            }
            record.curve.append(point)
            logger.info("step %d: NE=%.5f", step, point["ne"])

    record.epochs.append({"epoch": 1, **_mean_losses(rows)})
    record.steps = step
    checkpoint = out_dir / f"{cfg.name}-{record.config_hash}.ckpt"
    record.checkpoint = str(save_checkpoint(network, cfg, checkpoint))
    return _finish(record, network, cfg, splits, started)
