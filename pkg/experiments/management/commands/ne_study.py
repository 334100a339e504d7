from experiments.management.base import LabCommand
from experiments.records import write_table
from experiments.studies import (
    NE_STUDY_FIELDS,
    NE_STUDY_SUMMARY_FIELDS,
    ne_study,
    ne_study_summary,
)


class Command(LabCommand):
    help = "One-epoch NE of a baseline vs. a 1.5x embedding vs. baseline + light component."

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        self.add_seeds_argument(parser)
        parser.add_argument("--cadence", type=int, default=None)

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        seeds = self.seeds(options, cfg)
        records, rows = ne_study(cfg, out_dir, seeds=seeds, cadence=options["cadence"])
        for record in records:
            self.save(record, out_dir)
        for row in rows:
            self.stdout.write(
                f"    seed {row['seed']} {row['variant']:<24} NE {row['ne']:.5f} "
                f"({100 * row['ne_delta']:+.3f}%)"
            )
        path = write_table(out_dir / "ne_study.csv", rows, NE_STUDY_FIELDS)
        summary = write_table(
            out_dir / "ne_study_summary.csv", ne_study_summary(rows), NE_STUDY_SUMMARY_FIELDS
        )
        self.stdout.write(self.style.SUCCESS(f"✅ {len(records)} runs; tables: {path}, {summary}"))
