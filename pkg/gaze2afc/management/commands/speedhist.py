from gaze2afc import plots
from gaze2afc.ingest import session_from_json
from gaze2afc.kinematics import segment_session, speed_histogram
from gaze2afc.management.base import PipelineCommand
from gaze2afc.pipeline import histogram_table
from gaze2afc.serializers import write_csv


class Command(PipelineCommand):
    help = "Histogram and kernel density estimate of within-segment gaze speed."
    stage = "speedhist"

    def add_stage_arguments(self, parser):
        parser.add_argument("sessions", nargs="+", help="session.json file(s)")
        parser.add_argument("--bandwidth", help="KDE bandwidth: scott, silverman or a number")
        parser.add_argument("--out", default="hist.csv")
        parser.add_argument("--svg")

    def handle(self, *args, **options):
        bandwidth = options["bandwidth"]
        if bandwidth is not None and bandwidth not in ("scott", "silverman"):
            bandwidth = float(bandwidth)
        config = self.load_config(options, kinematics={"kde_bandwidth": bandwidth})
        histograms = {}
        for path in options["sessions"]:
            session = session_from_json(path)
            _, _, segmentations = segment_session(session, config.kinematics, config.ingest)
            histograms[session.participant_id] = speed_histogram(segmentations, config.kinematics)
        self.wrote(write_csv(options["out"], histogram_table(histograms), self.header(config)))
        if options["svg"]:
            self.wrote(plots.speed_histogram_svg(histograms, options["svg"]))
