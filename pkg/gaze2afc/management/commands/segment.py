from gaze2afc.ingest import session_from_json
from gaze2afc.kinematics import segment_session
from gaze2afc.management.base import PipelineCommand
from gaze2afc.serializers import write_json


class Command(PipelineCommand):
    help = "Calibrate a session and split every trial's gaze into per-avatar segments."
    stage = "segment"

    def add_stage_arguments(self, parser):
        parser.add_argument("session", help="session.json written by the ingest command")
        parser.add_argument("--threshold", type=float, help="Saccade threshold in deg/s")
        parser.add_argument("--gate", type=float, help="Calibration gate in deg")
        parser.add_argument("--out", default="segments.json")

    def handle(self, *args, **options):
        config = self.load_config(
            options,
            kinematics={
                "saccade_threshold_deg_s": options["threshold"],
                "calibration_gate_deg": options["gate"],
            },
        )
        session = session_from_json(options["session"])
        _, offsets, segmentations = segment_session(session, config.kinematics, config.ingest)
        data = {
            "participant_id": session.participant_id,
            "calibration": offsets,
            "trials": segmentations,
        }
        self.wrote(write_json(options["out"], data, config.provenance()))
