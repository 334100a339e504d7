from dataclasses import replace

from experiments.config import load_synthetic_spec
from experiments.management.base import LabCommand
from features.csv_io import write_csv
from features.synthetic import gen_synthetic


class Command(LabCommand):
    help = "Generate a planted-interaction synthetic CTR dataset and write it as CSV."

    def add_arguments(self, parser):
        parser.add_argument("spec", help="Synthetic spec TOML (top-level keys + optional [schema]).")
        parser.add_argument("--out", required=True, help="Destination CSV path.")
        parser.add_argument("--n-samples", type=int, default=None)
        parser.add_argument("--seed", type=int, default=None)

    def handle(self, *args, **options):
        spec = load_synthetic_spec(options["spec"])
        overrides = {}
        if options["n_samples"] is not None:
            overrides["n_samples"] = options["n_samples"]
        if options["seed"] is not None:
            overrides["seed"] = options["seed"]
        if overrides:
            spec = replace(spec, **overrides)
            spec.validate()

        dataset = gen_synthetic(spec)
        path = write_csv(dataset, options["out"])
        self.stdout.write(
            self.style.SUCCESS(
                f"✅ Wrote {len(dataset)} rows to {path} "
                f"(positive rate {dataset.positive_rate:.4f})."
            )
        )
