from pathlib import Path

from gaze2afc import plots
from gaze2afc.features import OUTCOMES
from gaze2afc.inference import find_map, posterior_normal_fit, prior_posterior_kl
from gaze2afc.management.base import PipelineCommand
from gaze2afc.pipeline import fit_outcome
from gaze2afc.serializers import read_csv, write_json


class Command(PipelineCommand):
    help = "Sample the posterior of the logistic regression of one outcome on the gaze features."
    stage = "fit"

    def add_stage_arguments(self, parser):
        parser.add_argument("features", help="features.csv written by the features command")
        parser.add_argument("--outcome", choices=OUTCOMES, default="decision")
        parser.add_argument("--chains", type=int)
        parser.add_argument("--draws", type=int)
        parser.add_argument("--warmup", type=int)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--out", help="Default: posterior_<outcome>.json")
        parser.add_argument("--svg-dir", help="Write one posterior overlay SVG per parameter here")

    def handle(self, *args, **options):
        config = self.load_config(
            options,
            sampler={key: options[key] for key in ("chains", "draws", "warmup", "seed")},
        )
        table = read_csv(options["features"])
        outcome = options["outcome"]
        fit = fit_outcome(table, outcome, config)
        normal_fits = posterior_normal_fit(fit.posterior)
        data = {
            "participant_id": str(table["participant_id"].iloc[0]) if len(table) else "",
            "outcome": outcome,
            "posterior": fit.posterior,
            "scaling": fit.scaling,
            "normal_fits": normal_fits,
            "kl_bits": {f.name: prior_posterior_kl(f, fit.model.prior_sd) for f in normal_fits},
            "map": dict(zip(fit.model.param_names, find_map(fit.model))),
        }
        out = options["out"] or f"posterior_{outcome}.json"
        self.wrote(write_json(out, data, config.provenance()))
        if options["svg_dir"]:
            self.wrote(
                *plots.posterior_svgs(
                    fit.posterior.draws,
                    normal_fits,
                    Path(options["svg_dir"]),
                    stem=f"posterior_{outcome}",
                    prior_sd=fit.model.prior_sd,
                )
            )
