from dataclasses import replace

from experiments.management.base import LabCommand
from experiments.trainer import train


class Command(LabCommand):
    help = "Train the configured ensemble, keep the best-validation checkpoint and log the run."

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--epochs", type=int, default=None)

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        if options["seed"] is not None:
            cfg = cfg.with_seed(options["seed"])
        if options["epochs"] is not None:
            cfg = replace(cfg, epochs=options["epochs"])

        self.stdout.write(f"Training {cfg.name} ({len(cfg.components)} components) → {out_dir}")
        record = train(cfg, out_dir)
        self.save(record, out_dir)
        self.stdout.write(self.style.SUCCESS(f"✅ Checkpoint: {record.checkpoint}"))
