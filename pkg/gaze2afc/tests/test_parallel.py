import pickle

from django.test import SimpleTestCase

from gaze2afc.exceptions import MalformedRow, NonMonotonicTimestamp, StageError
from gaze2afc.parallel import parallel_map


def absolute_pair(n):
    return parallel_map(abs, [-n, n], workers=2)


class TestParallelMap(SimpleTestCase):
    def test_serial_map(self):
        self.assertEqual(parallel_map(abs, [-3, 1, -2]), [3, 1, 2])

    def test_pool_keeps_input_order(self):
        self.assertEqual(parallel_map(abs, list(range(-20, 0)), workers=3), list(range(20, 0, -1)))

    def test_map_inside_a_pool_worker_runs_serially(self):
        self.assertEqual(parallel_map(absolute_pair, [1, 2], workers=2), [[1, 1], [2, 2]])

    def test_empty_input(self):
        self.assertEqual(parallel_map(abs, [], workers=4), [])


class TestPicklableErrors(SimpleTestCase):
    def test_stage_error_survives_pickling(self):
        cause = MalformedRow(7, "x_px 'a' is not a number")
        cause.add_note("In gaze.csv")
        error = pickle.loads(pickle.dumps(StageError("ingest", "01m25", cause)))
        self.assertEqual(error.stage, "ingest")
        self.assertEqual(error.participant_id, "01m25")
        self.assertIn("MalformedRow", str(error))
        self.assertIn("In gaze.csv", error.__notes__)

    def test_row_errors_survive_pickling(self):
        error = pickle.loads(pickle.dumps(NonMonotonicTimestamp(4, 0.2, 0.1)))
        self.assertEqual((error.line, error.previous, error.current), (4, 0.2, 0.1))
        self.assertEqual(pickle.loads(pickle.dumps(MalformedRow(3, "bad"))).message, "bad")

    def test_stage_error_message(self):
        self.assertEqual(str(StageError("discover", None, "nothing found")), "[discover] nothing found")
