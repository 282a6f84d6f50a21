import logging

import pandas as pd

from gaze2afc import plots
from gaze2afc.features import OUTCOMES, build_model
from gaze2afc.inference import PosteriorSamples
from gaze2afc.information import mi_report
from gaze2afc.management.base import PipelineCommand
from gaze2afc.pipeline import fit_outcome
from gaze2afc.serializers import read_csv, read_json, write_csv

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = "Mutual information between the gaze and the decision, the task and correctness."
    stage = "mi"

    def add_stage_arguments(self, parser):
        parser.add_argument("features", help="features.csv written by the features command")
        parser.add_argument("posteriors", nargs="*", help="posterior_<outcome>.json files")
        parser.add_argument("--mode", choices=("posterior_mean", "draws"))
        parser.add_argument("--out", default="mi.csv")
        parser.add_argument("--svg")

    def handle(self, *args, **options):
        config = self.load_config(options, information={"mode": options["mode"]})
        table = read_csv(options["features"])
        fits = {}
        for path in options["posteriors"]:
            data = read_json(path)
            model, _ = build_model(table, data["outcome"], settings=config.features)
            fits[data["outcome"]] = (model, PosteriorSamples.from_dict(data["posterior"]))
        for outcome in OUTCOMES:
            if outcome not in fits:
                logger.info("No posterior given for %s; sampling it", outcome)
                fit = fit_outcome(table, outcome, config)
                fits[outcome] = (fit.model, fit.posterior)

        participant_id = str(table["participant_id"].iloc[0]) if len(table) else ""
        report = mi_report(participant_id, table, fits, config.information)
        mi = pd.DataFrame([report.to_row()])
        self.wrote(write_csv(options["out"], mi, self.header(config)))
        if options["svg"]:
            self.wrote(plots.mi_svg(mi, options["svg"]))
