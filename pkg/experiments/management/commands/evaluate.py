import json

from experiments.checkpoint import load_checkpoint
from experiments.management.base import LabCommand
from experiments.trainer import evaluate
from features.csv_io import load_csv


def _cell(value) -> str:
    return f"{value:>9.5f}" if value is not None else f"{'n/a':>9}"


class Command(LabCommand):
    help = "Score a checkpoint on a CSV dataset (fused and per-component metrics)."

    def add_arguments(self, parser):
        parser.add_argument("checkpoint")
        parser.add_argument("csv")
        parser.add_argument("--json", action="store_true", help="Print the raw JSON report.")

    def handle(self, *args, **options):
        cfg, _ = load_checkpoint(options["checkpoint"])
        dataset = load_csv(options["csv"], cfg.schema)
        reports = evaluate(options["checkpoint"], dataset, batch_size=cfg.batch_size)

        if options["json"]:
            self.stdout.write(json.dumps(reports, indent=2, sort_keys=True))
            return
        rows = [("fused", reports["fused"])] + list(reports["components"].items())
        self.stdout.write(f"{'head':<24} {'AUC':>9} {'gAUC':>9} {'LogLoss':>9} {'NE':>9}")
        for name, r in rows:
            self.stdout.write(
                f"{name:<24} {r['auc']:>9.5f} {_cell(r['gauc'])} "
                f"{r['logloss']:>9.5f} {r['ne']:>9.5f}"
            )
        self.stdout.write(self.style.SUCCESS(f"✅ Scored {len(dataset)} examples."))
