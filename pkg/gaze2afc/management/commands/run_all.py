from gaze2afc.management.base import PipelineCommand
from gaze2afc.pipeline import run_all


class Command(PipelineCommand):
    help = "Run the whole analysis on every participant of a data directory."
    stage = "run-all"

    def add_stage_arguments(self, parser):
        parser.add_argument("--data-dir")
        parser.add_argument("--out-dir")
        parser.add_argument("--workers", type=int)
        parser.add_argument("--seed", type=int, help="Sampler seed")

    def handle(self, *args, **options):
        config = self.load_config(
            options,
            run={
                "data_dir": options["data_dir"],
                "output_dir": options["out_dir"],
                "workers": options["workers"],
            },
            sampler={"seed": options["seed"]},
        )
        report = run_all(config)
        self.wrote(*report.files)
        self.stdout.write(self.style.SUCCESS(f"Analysed {len(report.participants)} participant(s)"))
