from gaze2afc.features import session_features
from gaze2afc.ingest import parse_trials
from gaze2afc.kinematics import TrialSegmentation
from gaze2afc.management.base import PipelineCommand
from gaze2afc.serializers import read_json, write_csv


class Command(PipelineCommand):
    help = "Extract the six gaze features and the outcomes of every segmented trial."
    stage = "features"

    def add_stage_arguments(self, parser):
        parser.add_argument("segments", help="segments.json written by the segment command")
        parser.add_argument("trials", help="Trial log CSV of the same participant")
        parser.add_argument("--out", default="features.csv")

    def handle(self, *args, **options):
        config = self.load_config(options)
        data = read_json(options["segments"])
        participant_id = data.get("participant_id", "")
        segmentations = [TrialSegmentation.from_dict(trial) for trial in data["trials"]]
        trials = parse_trials(options["trials"], participant_id, config.ingest)
        table, excluded = session_features(segmentations, trials, config.features)
        if excluded:
            self.stderr.write(f"Excluded {len(excluded)} trial(s) without gaze segments")
        self.wrote(write_csv(options["out"], table, self.header(config)))
