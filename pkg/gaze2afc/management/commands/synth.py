from gaze2afc.conf import load_synth_table
from gaze2afc.management.base import PipelineCommand
from gaze2afc.synth import DECISION_MODELS, SynthConfig, gen_sessions


class Command(PipelineCommand):
    help = "Generate synthetic participants with known ground truth in the ingest formats."
    stage = "synth"

    def add_stage_arguments(self, parser):
        parser.add_argument("--out-dir", default="data")
        parser.add_argument("--participants", type=int)
        parser.add_argument("--trials", type=int)
        parser.add_argument("--decision-model", choices=DECISION_MODELS)
        parser.add_argument("--layout", choices=("long", "wide"))
        parser.add_argument("--seed", type=int)
        parser.add_argument("--workers", type=int, default=1)

    def handle(self, *args, **options):
        values = load_synth_table(options["config"])
        flags = {
            "n_participants": options["participants"],
            "n_trials": options["trials"],
            "decision_model": options["decision_model"],
            "keypoint_layout": options["layout"],
            "seed": options["seed"],
        }
        values |= {key: value for key, value in flags.items() if value is not None}
        config = SynthConfig.from_dict(values)
        paths = gen_sessions(config, options["out_dir"], options["workers"])
        self.wrote(*paths)
