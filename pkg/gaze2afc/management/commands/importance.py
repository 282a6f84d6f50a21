import pandas as pd

from gaze2afc import plots
from gaze2afc.evidence import loo_importance
from gaze2afc.features import FEATURE_NAMES, OUTCOMES, build_model
from gaze2afc.management.base import PipelineCommand
from gaze2afc.serializers import read_csv, write_csv


class Command(PipelineCommand):
    help = "Leave-one-feature-out log odds of model evidence for every gaze feature."
    stage = "importance"

    def add_stage_arguments(self, parser):
        parser.add_argument("features", help="features.csv written by the features command")
        parser.add_argument("--outcome", choices=OUTCOMES, default="decision")
        parser.add_argument("--workers", type=int, default=1)
        parser.add_argument("--out", default="importance.csv")
        parser.add_argument("--svg")

    def handle(self, *args, **options):
        config = self.load_config(options, run={"workers": options["workers"]})
        table = read_csv(options["features"])
        model, _ = build_model(table, options["outcome"], FEATURE_NAMES, config.features)
        importances = loo_importance(model, config.sampler, config.evidence, config.run.workers)
        participant_id = str(table["participant_id"].iloc[0]) if len(table) else ""
        result = pd.DataFrame(
            [
                {"participant_id": participant_id, "outcome": options["outcome"]} | item.to_row()
                for item in importances
            ]
        )
        self.wrote(write_csv(options["out"], result, self.header(config)))
        if options["svg"]:
            self.wrote(plots.importance_svg(result, options["svg"]))
