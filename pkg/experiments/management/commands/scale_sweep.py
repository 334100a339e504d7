from experiments.management.base import LabCommand
from experiments.records import write_table
from experiments.sweep import (
    SWEEP_FIELDS,
    SWEEP_SUMMARY_FIELDS,
    parse_csv_list,
    scale_sweep,
    sweep_rows,
    sweep_summary,
)


class Command(LabCommand):
    help = "Embedding-scale sweep over SE / ME / ours_sum / ours_concat."
    directional = True

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument("--multipliers", default="1,2,3,4,10")
        parser.add_argument("--modes", default="se,me,ours_sum,ours_concat")
        self.add_seeds_argument(parser)
        parser.add_argument(
            "--one-epoch",
            action="store_true",
            help="Train every point with a single stored-order pass.",
        )

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        multipliers = parse_csv_list(options["multipliers"], int)
        modes = parse_csv_list(options["modes"])
        seeds = self.seeds(options, cfg)
        self.stdout.write(
            f"Sweeping modes {modes} × multipliers {multipliers} over seeds {seeds}..."
        )

        records = scale_sweep(
            cfg, multipliers, modes, out_dir, seeds=seeds, one_epoch_mode=options["one_epoch"]
        )
        for record in records:
            self.save(record, out_dir)
        rows = sweep_rows(records)
        path = write_table(out_dir / "scale_sweep.csv", rows, SWEEP_FIELDS)
        summary = write_table(
            out_dir / "scale_sweep_summary.csv", sweep_summary(rows), SWEEP_SUMMARY_FIELDS
        )
        self.stdout.write(self.style.SUCCESS(f"✅ {len(records)} runs; tables: {path}, {summary}"))
