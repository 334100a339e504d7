from experiments.management.base import LabCommand
from experiments.records import write_table
from experiments.studies import (
    COMPONENT_STUDY_FIELDS,
    COMPONENT_STUDY_SUMMARY_FIELDS,
    component_study,
    component_study_summary,
)


class Command(LabCommand):
    help = "Compare each component trained alone with its head inside the ensemble."
    directional = True

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        self.add_seeds_argument(parser)

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        seeds = self.seeds(options, cfg)
        records, rows = component_study(cfg, seeds, out_dir)
        for record in records:
            self.save(record, out_dir)
        path = write_table(out_dir / "component_study.csv", rows, COMPONENT_STUDY_FIELDS)
        summary = write_table(
            out_dir / "component_study_summary.csv",
            component_study_summary(rows),
            COMPONENT_STUDY_SUMMARY_FIELDS,
        )
        self.stdout.write(self.style.SUCCESS(f"✅ {len(records)} runs; tables: {path}, {summary}"))
