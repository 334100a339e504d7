from experiments.management.base import LabCommand
from experiments.trainer import one_epoch


class Command(LabCommand):
    help = "Single stored-order pass over the training split with an NE learning curve."

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument("--cadence", type=int, default=None, help="Batches between NE samples.")
        parser.add_argument("--seed", type=int, default=None)

    def handle(self, *args, **options):
        cfg, out_dir = self.load(options)
        if options["seed"] is not None:
            cfg = cfg.with_seed(options["seed"])

        record = one_epoch(cfg, out_dir, cadence=options["cadence"])
        run = self.save(record, out_dir)
        for point in record.curve:
            self.stdout.write(f"    step {point['step']:>6}  NE {point['ne']:.5f}")
        self.stdout.write(
            self.style.SUCCESS(
                f"✅ {record.steps} steps, {len(record.curve)} curve points "
                f"(GET /runs/{run.id}/curve.csv)."
            )
        )
