from experiments.ablation import (
    ABLATION_FIELDS,
    ABLATION_SUMMARY_FIELDS,
    ablation_rows,
    ablation_summary,
    parse_variants,
    run_ablations,
)
from experiments.management.base import LabCommand
from experiments.records import write_table


class Command(LabCommand):
    help = "Train ablation variants of an ensemble config over one or more seeds."
    directional = True

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument("--variants", default="all", help="'all' or a comma-separated list.")
        self.add_seeds_argument(parser)

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        variants = parse_variants(options["variants"])
        seeds = self.seeds(options, cfg)
        self.stdout.write(f"Ablating {len(variants)} variant(s) over seeds {seeds}...")

        records = run_ablations(cfg, variants, seeds, out_dir)
        for record in records:
            self.save(record, out_dir)
        rows = ablation_rows(records)
        path = write_table(out_dir / "ablation.csv", rows, ABLATION_FIELDS)
        summary = write_table(
            out_dir / "ablation_summary.csv", ablation_summary(rows), ABLATION_SUMMARY_FIELDS
        )
        self.stdout.write(self.style.SUCCESS(f"✅ {len(records)} runs; tables: {path}, {summary}"))
