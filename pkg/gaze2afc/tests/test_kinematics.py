import numpy as np
from django.test import SimpleTestCase

from gaze2afc.conf import KinematicsSettings
from gaze2afc.exceptions import EmptyTrialWindow, NoIsiData, TooFewSamples
from gaze2afc.factories import Participant
from gaze2afc.features import session_features
from gaze2afc.ingest import Side
from gaze2afc.kinematics import (
    AvatarTracks,
    CameraGeometry,
    TrialSegmentation,
    block_offset,
    deg_to_px,
    detect_saccades,
    gaze_speed,
    post_calibrate,
    px_to_deg,
    segment_session,
    segment_trajectory,
    speed_histogram,
    split_trajectory,
)
from gaze2afc.synth import SynthConfig, gen_session


def tracks(n: int, left: float = -8.0, right: float = 8.0) -> AvatarTracks:
    return AvatarTracks(
        {Side.LEFT: np.full(n, left), Side.RIGHT: np.full(n, right)},
        {Side.LEFT: np.zeros(n), Side.RIGHT: np.zeros(n)},
        {Side.LEFT: np.zeros(n), Side.RIGHT: np.zeros(n)},
        np.zeros(n),
    )


class TestGeometry(SimpleTestCase):
    def test_image_center_is_origin(self):
        np.testing.assert_allclose(px_to_deg([640, 480]), [0.0, 0.0])

    def test_image_corner_is_half_the_field_of_view(self):
        np.testing.assert_allclose(px_to_deg([1280, 960]), [30.0, 23.0])

    def test_deg_to_px_inverts_px_to_deg(self):
        points = np.array([[0.0, 0.0], [100.5, 900.25], [-30.0, 1500.0]])
        np.testing.assert_allclose(deg_to_px(px_to_deg(points)), points)

    def test_geometry_must_be_positive(self):
        with self.assertRaises(ValueError):
            CameraGeometry(width_px=0)


class TestSaccades(SimpleTestCase):
    def test_gaze_speed(self):
        speeds = gaze_speed([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], frame_rate=24.0)
        np.testing.assert_allclose(speeds, [24.0, 24.0])

    def test_gaze_speed_through_a_gap_is_nan(self):
        speeds = gaze_speed([[0.0, 0.0], [np.nan, np.nan], [1.0, 1.0]])
        self.assertTrue(np.isnan(speeds).all())

    def test_gaze_speed_needs_two_samples(self):
        with self.assertRaises(TooFewSamples):
            gaze_speed([[0.0, 0.0]])

    def test_runs_above_threshold_become_events(self):
        events = detect_saccades([10.0, 150.0, 200.0, 10.0, 120.0], 100.0)
        self.assertEqual([(e.start, e.end) for e in events], [(1, 2), (4, 4)])
        self.assertEqual(events[0].peak_speed, 200.0)
        self.assertEqual(list(events[0].interior_frames), [2])

    def test_threshold_is_exclusive(self):
        self.assertEqual(detect_saccades([100.0, 99.0], 100.0), [])

    def test_nan_speeds_are_not_saccades(self):
        self.assertEqual(detect_saccades([np.nan, 50.0], 100.0), [])


class TestSegmentTrajectory(SimpleTestCase):
    def trial(self, xs):
        n = len(xs)
        t = np.arange(n) / 24.0
        points = np.column_stack([np.asarray(xs, dtype=float), np.zeros(n)])
        saccades = detect_saccades(gaze_speed(points), 100.0)
        return t, points, saccades

    def test_splits_at_a_saccade(self):
        t, points, saccades = self.trial([-8.0] * 5 + [8.0] * 5)
        segments = segment_trajectory(t, points, saccades, tracks(10), first_frame=100)
        self.assertEqual([s.side for s in segments], [Side.LEFT, Side.RIGHT])
        self.assertEqual((segments[0].start_frame, segments[0].end_frame), (100, 104))
        self.assertEqual((segments[1].start_frame, segments[1].end_frame), (105, 109))
        self.assertAlmostEqual(segments[0].duration, 5 / 24)
        self.assertEqual(segments[1].trajectory.shape, (5, 3))

    def test_saccade_interior_frames_are_dropped(self):
        t, points, saccades = self.trial([-8.0] * 5 + [0.0] + [8.0] * 4)
        segments = segment_trajectory(t, points, saccades, tracks(10))
        self.assertEqual(len(segments), 2)
        self.assertEqual(segments[0].end_frame, 4)
        self.assertEqual(segments[1].start_frame, 6)

    def test_fixation_at_the_cross_is_not_a_segment(self):
        t, points, saccades = self.trial([0.1] * 4 + [8.0] * 6)
        segments = segment_trajectory(t, points, saccades, tracks(10))
        self.assertEqual(len(segments), 1)
        self.assertEqual(segments[0].side, Side.RIGHT)
        self.assertEqual(segments[0].start_frame, 4)

    def test_leading_fixation_is_returned_as_a_span(self):
        t, points, saccades = self.trial([0.1] * 4 + [8.0] * 6)
        segments, fixations = split_trajectory(t, points, saccades, tracks(10), first_frame=100)
        self.assertEqual(fixations, [(100, 103)])
        self.assertEqual([(s.start_frame, s.end_frame) for s in segments], [(104, 109)])

    def test_gaze_near_the_cross_after_a_saccade_is_a_segment(self):
        t, points, saccades = self.trial([-8.0] * 4 + [0.1] * 4 + [-8.0] * 4)
        segments, fixations = split_trajectory(t, points, saccades, tracks(12))
        self.assertEqual(fixations, [])
        self.assertEqual(len(segments), 3)
        self.assertEqual((segments[1].start_frame, segments[1].end_frame), (4, 7))

    def test_gaps_split_segments(self):
        t, points, saccades = self.trial([8.0] * 3 + [np.nan] + [8.0] * 3)
        segments = segment_trajectory(t, points, saccades, tracks(7))
        self.assertEqual([(s.start_frame, s.end_frame) for s in segments], [(0, 2), (4, 6)])

    def test_side_falls_back_to_the_midline(self):
        t, points, saccades = self.trial([-8.0] * 4)
        segments = segment_trajectory(t, points, saccades, tracks(4, np.nan, np.nan))
        self.assertEqual(segments[0].side, Side.LEFT)

    def test_empty_window_raises(self):
        with self.assertRaises(EmptyTrialWindow):
            segment_trajectory(np.zeros(0), np.zeros((0, 2)), [], tracks(0))


class TestSpeedHistogram(SimpleTestCase):
    def test_density_integrates_to_one(self):
        histogram = speed_histogram(np.array([0.5, 1.5, 1.5, 50.0]))
        self.assertEqual(len(histogram.bin_edges), 41)
        self.assertAlmostEqual(float(histogram.density.sum()), 1.0)
        self.assertEqual(histogram.mode, 1.5)
        self.assertEqual(histogram.n_speeds, 4)

    def test_speeds_above_the_range_land_in_the_last_bin(self):
        histogram = speed_histogram(np.array([1.5, 500.0]))
        self.assertGreater(histogram.density[-1], 0)

    def test_empty_histogram(self):
        histogram = speed_histogram(np.zeros(0))
        self.assertEqual(histogram.n_speeds, 0)
        self.assertTrue(np.isnan(histogram.mode))
        self.assertEqual(histogram.kde_grid.size, 0)

    def test_bin_width_setting(self):
        settings = KinematicsSettings(histogram_bin_width=2.0, histogram_max_speed=10.0)
        histogram = speed_histogram(np.array([1.0, 3.0]), settings)
        np.testing.assert_allclose(histogram.bin_edges, [0, 2, 4, 6, 8, 10])


class TestCalibration(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        config = SynthConfig(n_trials=12, n_blocks=2, seed=3)
        participant = Participant("05w31", ((30.0, -20.0), (0.5, 0.5)))
        cls.session = gen_session(config, participant).load()

    def test_block_offset_measures_the_shift(self):
        offset = block_offset(self.session, 1, (640.0, 480.0))
        self.assertAlmostEqual(offset.dx_px, 30.0, delta=2.0)
        self.assertAlmostEqual(offset.dy_px, -20.0, delta=2.0)
        self.assertGreater(offset.n_samples, 0)

    def test_only_offsets_beyond_the_gate_are_applied(self):
        _, offsets = post_calibrate(self.session)
        self.assertEqual([o.block for o in offsets], [1, 2])
        self.assertTrue(offsets[0].applied)
        self.assertFalse(offsets[1].applied)

    def test_calibrated_fixations_sit_on_the_cross(self):
        calibrated, _ = post_calibrate(self.session)
        offset = block_offset(calibrated, 1, (640.0, 480.0))
        self.assertLess(abs(offset.dx_px), 2.0)
        self.assertLess(abs(offset.dy_px), 2.0)

    def test_missing_block_raises(self):
        with self.assertRaises(NoIsiData):
            block_offset(self.session, 9, (640.0, 480.0))


class TestSegmentSession(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.synth = gen_session(SynthConfig(n_trials=24, n_blocks=2, seed=11))
        cls.session = cls.synth.load()
        _, cls.offsets, cls.segmentations = segment_session(
            cls.session, ingest_settings=cls.synth.config.ingest_settings()
        )

    def test_every_trial_is_segmented(self):
        self.assertEqual(len(self.segmentations), 24)
        for segmentation in self.segmentations:
            self.assertIsNone(segmentation.error)
            self.assertEqual(segmentation.n_frames, 84)

    def test_every_frame_is_claimed_once(self):
        for segmentation in self.segmentations:
            with self.subTest(trial=segmentation.trial_id):
                np.testing.assert_array_equal(segmentation.frame_coverage(), 1)
                self.assertEqual(len(segmentation.fixation_spans), 1)

    def test_segments_follow_the_generated_gaze(self):
        for segmentation, truth in zip(self.segmentations, self.synth.truth):
            self.assertEqual(tuple(int(s.side) for s in segmentation.segments), truth.sides)

    def test_features_match_the_generated_truth(self):
        table, excluded = session_features(self.segmentations, self.session.trials)
        self.assertEqual(excluded, [])
        for row, truth in zip(table.itertuples(), self.synth.truth):
            self.assertEqual(row.n_saccades, truth.n_saccades)
            self.assertEqual(row.first_side, truth.first_side)
            self.assertEqual(row.last_side, truth.last_side)
            self.assertAlmostEqual(row.duration_left, truth.duration_left, delta=1 / 24 + 1e-9)
            self.assertAlmostEqual(row.duration_right, truth.duration_right, delta=1 / 24 + 1e-9)

    def test_within_segment_speeds_peak_below_the_threshold(self):
        histogram = speed_histogram(self.segmentations)
        self.assertGreater(histogram.n_speeds, 0)
        self.assertTrue(5.0 <= histogram.mode <= 9.0)

    def test_segmentation_round_trips_through_dicts(self):
        first = self.segmentations[0]
        restored = TrialSegmentation.from_dict(first.to_dict())
        self.assertEqual(restored.fixation_spans, first.fixation_spans)
        self.assertEqual(len(restored.segments), len(first.segments))
        np.testing.assert_allclose(restored.points, first.points)


class TestWorkedExamples(SimpleTestCase):
    def test_avatar_separation_in_degrees(self):
        np.testing.assert_allclose(px_to_deg([640 + 341.3, 480]), [16.0, 0.0], atol=0.01)
        np.testing.assert_allclose(px_to_deg([1280, 480]), [30.0, 0.0])

    def test_one_saccade_spanning_two_speeds(self):
        events = detect_saccades([5.0, 5.0, 140.0, 150.0, 6.0])
        self.assertEqual([(e.start, e.end) for e in events], [(2, 3)])

    def test_stationary_gaze_has_zero_speed(self):
        np.testing.assert_array_equal(gaze_speed(np.ones((5, 2))), 0.0)

    def test_pursuit_ramp_speed(self):
        t = np.arange(48) / 24.0
        speeds = gaze_speed(np.column_stack([3.0 * t, np.zeros(48)]))
        self.assertAlmostEqual(float(speeds.mean()), 3.0, delta=0.1)

    def test_three_jumps_are_three_saccades(self):
        xs = [-8.0] * 6 + [8.0] * 6 + [-8.0] * 6 + [8.0] * 6
        points = np.column_stack([xs, np.zeros(len(xs))])
        self.assertEqual(len(detect_saccades(gaze_speed(points))), 3)
        segments = segment_trajectory(
            np.arange(len(xs)) / 24.0, points, detect_saccades(gaze_speed(points)), tracks(len(xs))
        )
        self.assertEqual([s.side for s in segments], [Side.LEFT, Side.RIGHT, Side.LEFT, Side.RIGHT])

    def test_equidistant_segment_goes_left(self):
        t = np.arange(4) / 24.0
        points = np.column_stack([np.full(4, 3.0), np.zeros(4)])
        segments = segment_trajectory(t, points, [], tracks(4, left=0.0, right=6.0))
        self.assertEqual(segments[0].side, Side.LEFT)

    def test_equidistant_gaze_on_the_midline_goes_left(self):
        t = np.arange(4) / 24.0
        points = np.column_stack([np.zeros(4), np.full(4, 0.5)])
        segments = segment_trajectory(t, points, [], tracks(4, left=-8.0, right=8.0))
        self.assertEqual([s.side for s in segments], [Side.LEFT])
        self.assertEqual((segments[0].start_frame, segments[0].end_frame), (0, 3))

    def test_bimodal_speeds(self):
        speeds = np.concatenate([np.full(200, 3.2), np.full(200, 9.4)])
        histogram = speed_histogram(speeds)
        peaks = histogram.bin_centers[histogram.density > 0]
        np.testing.assert_allclose(peaks, [3.5, 9.5])
