# experiments/records.py
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .models import Run

logger = logging.getLogger(__name__)

RUN_KINDS = ("train", "ablation", "sweep", "one_epoch", "component_study", "ne_study")


@dataclass
class RunRecord:
    """Everything one training run logged; ``config`` is the post-transformation config."""

    name: str
    kind: str
    seed: int
    config_hash: str
    config: dict[str, Any]
    variant: str = ""
    epochs: list[dict[str, Any]] = field(default_factory=list)
    evals: list[dict[str, Any]] = field(default_factory=list)
    curve: list[dict[str, Any]] = field(default_factory=list)
    final: dict[str, Any] = field(default_factory=dict)
    effective_ranks: dict[str, float] = field(default_factory=dict)
    parameter_counts: dict[str, int] = field(default_factory=dict)
    steps: int = 0
    wall_clock: float = 0.0
    checkpoint: str = ""
    tags: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @property
    def headline_split(self) -> str:
        for name in ("test", "val", "train"):
            if name in self.final:
                return name
        return ""

    def headline(self) -> dict[str, Any]:
        """Final metrics on the most held-out split that was scored."""
        return self.final.get(self.headline_split, {})

    def summary(self) -> dict[str, Any]:
        headline = self.headline()
        return {
            "split": self.headline_split,
            "fused": headline.get("fused", {}),
            "components": headline.get("components", {}),
            "parameter_counts": self.parameter_counts,
            "effective_ranks": self.effective_ranks,
        }


def append_jsonl(path: str | Path, record: RunRecord) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    return path


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_table(path: str | Path, rows: Sequence[dict[str, Any]], fieldnames: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info("Wrote %d rows to %s", len(rows), path)
    return path


def metric_value(report: dict[str, Any], key: str) -> float:
    """A report entry as a float; metrics that could not be computed become NaN."""
    value = report.get(key)
    return float("nan") if value is None else float(value)


def summary_fields(keys: Sequence[str], metrics: Sequence[str]) -> list[str]:
    return [*keys, "seeds", *(f"{m}_{stat}" for m in metrics for stat in ("mean", "std"))]


def summarize_seeds(
    rows: Iterable[dict[str, Any]], keys: Sequence[str], metrics: Sequence[str]
) -> list[dict[str, Any]]:
    """
    One row per distinct ``keys`` tuple with the mean and population std of each
    metric over its seeds. NaN entries are ignored; a metric with no finite
    value stays NaN.
    """
    groups: dict[tuple, list[dict[str, Any]]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)

    summary = []
    for group, members in groups.items():
        out: dict[str, Any] = {**dict(zip(keys, group)), "seeds": len(members)}
        for metric in metrics:
            values = np.asarray([metric_value(r, metric) for r in members], dtype=np.float64)
            finite = values[np.isfinite(values)]
            out[f"{metric}_mean"] = float(finite.mean()) if finite.size else float("nan")
            out[f"{metric}_std"] = float(finite.std()) if finite.size else float("nan")
        summary.append(out)
    return summary


def save_run(record: RunRecord, out_dir: str | Path):
    """Append to ``<out_dir>/runs.jsonl`` and store a ``Run`` row."""
    append_jsonl(Path(out_dir) / "runs.jsonl", record)
    return Run.objects.create(
        kind=record.kind,
        name=record.name,
        variant=record.variant,
        seed=record.seed,
        config_hash=record.config_hash,
        config=record.config,
        summary=record.summary(),
        record=record.to_dict(),
        checkpoint=record.checkpoint,
        wall_clock=record.wall_clock,
    )
