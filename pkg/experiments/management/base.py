# experiments/management/base.py
from pathlib import Path

from django.conf import settings  # pyright: ignore[reportMissingModuleSource]
from django.core.management.base import (  # pyright: ignore[reportMissingModuleSource]
    BaseCommand,
    CommandError,
)

from core.errors import LabError
from experiments.config import TrainConfig, load_config, resolve_output_dir
from experiments.records import RunRecord, save_run
from experiments.sweep import parse_csv_list


class LabCommand(BaseCommand):
    """Base for lab commands: library errors surface as CommandError."""

    # Multi-seed comparisons default to LAB_DIRECTIONAL_SEEDS instead of the config seed.
    directional = False

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except LabError as e:
            raise CommandError(f"{type(e).__name__}: {e}") from e

    def add_config_argument(self, parser):
        parser.add_argument("config", help="Experiment TOML file.")
        parser.add_argument(
            "--out",
            default=None,
            help="Output directory (default: LAB_OUTPUT_ROOT/<config name>).",
        )

    def add_seeds_argument(self, parser):
        fallback = "LAB_DIRECTIONAL_SEEDS" if self.directional else "the config seed"
        parser.add_argument(
            "--seeds",
            default=None,
            help=f"Comma-separated seeds, e.g. 42,43,44 (default: {fallback}).",
        )

    def load(self, options) -> tuple[TrainConfig, Path]:
        cfg = load_config(options["config"])
        return cfg, resolve_output_dir(cfg.name, options.get("out"))

    def seeds(self, options, cfg: TrainConfig) -> list[int]:
        raw = options.get("seeds")
        if raw:
            return parse_csv_list(raw, int)
        return list(settings.LAB_DIRECTIONAL_SEEDS) if self.directional else [cfg.seed]

    def save(self, record: RunRecord, out_dir):
        run = save_run(record, out_dir)
        fused = record.headline().get("fused", {})
        self.stdout.write(
            f" → run #{run.id} {record.name} [{record.variant or record.kind}] "
            f"seed={record.seed} AUC={fused.get('auc', float('nan')):.5f} "
            f"NE={fused.get('ne', float('nan')):.5f}"
        )
        return run
