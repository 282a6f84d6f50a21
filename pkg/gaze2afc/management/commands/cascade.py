from gaze2afc.cascade import cascade_report, cascade_test
from gaze2afc.management.base import PipelineCommand
from gaze2afc.serializers import read_csv, write_csv


class Command(PipelineCommand):
    help = "Gaze cascade test per participant: p(beta_MSE < 0) and its classification."
    stage = "cascade"

    def add_stage_arguments(self, parser):
        parser.add_argument("features", nargs="+", help="features.csv file(s), one per participant")
        parser.add_argument("--effect-threshold", type=float)
        parser.add_argument("--absent-threshold", type=float)
        parser.add_argument("--out", default="cascade.csv")

    def handle(self, *args, **options):
        config = self.load_config(
            options,
            cascade={
                "effect_threshold": options["effect_threshold"],
                "absent_threshold": options["absent_threshold"],
            },
        )
        results = []
        for path in options["features"]:
            table = read_csv(path)
            participant_id = str(table["participant_id"].iloc[0]) if len(table) else path
            results.append(
                cascade_test(
                    table["congruence"].to_numpy(),
                    table["mse"].to_numpy(),
                    config.sampler,
                    participant_id,
                )
            )
        report = cascade_report(results, config.cascade)
        self.wrote(write_csv(options["out"], report, self.header(config), float_format=None))
