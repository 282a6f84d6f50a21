from pathlib import Path

from django.core.management.base import CommandError

from gaze2afc.ingest import load_session, session_to_json
from gaze2afc.management.base import PipelineCommand
from gaze2afc.pipeline import INPUT_FILES, ingest_participant, stage


class Command(PipelineCommand):
    help = "Parse, filter and align one participant's gaze, keypoint and trial files."
    stage = "ingest"

    def add_stage_arguments(self, parser):
        parser.add_argument(
            "directory",
            nargs="?",
            help="Directory holding gaze.csv, keypoints.csv, trials.csv (instead of the three file options)",
        )
        parser.add_argument("--gaze", help="Eye-tracker samples CSV")
        parser.add_argument("--keypoints", help="Scene-camera keypoints CSV")
        parser.add_argument("--trials", help="Trial log CSV")
        parser.add_argument("--participant", help="Participant id (default: name of the input directory)")
        parser.add_argument("--layout", choices=("long", "wide"), help="Keypoint table layout")
        parser.add_argument("--p-cutoff", type=float, help="Keypoint likelihood cutoff")
        parser.add_argument("--out", default="session.json")

    def handle(self, *args, **options):
        files = {name: options[name] for name in ("gaze", "keypoints", "trials")}
        if options["directory"] and any(files.values()):
            raise CommandError("Give either a directory or --gaze/--keypoints/--trials, not both")
        if not options["directory"] and not all(files.values()):
            missing = ", ".join(f"--{name}" for name, path in files.items() if not path)
            raise CommandError(
                f"Missing {missing}; or give a directory holding {', '.join(INPUT_FILES)}"
            )

        config = self.load_config(
            options,
            ingest={"keypoint_layout": options["layout"], "p_cutoff": options["p_cutoff"]},
        )
        if options["directory"]:
            directory = Path(options["directory"])
            participant_id = options["participant"] or directory.resolve().name
            session = ingest_participant(directory, participant_id, config)
        else:
            participant_id = options["participant"] or Path(files["gaze"]).resolve().parent.name
            with stage("ingest", participant_id):
                session = load_session(
                    files["gaze"], files["keypoints"], files["trials"], participant_id, config.ingest
                )
        self.wrote(session_to_json(session, options["out"], config.provenance()))
