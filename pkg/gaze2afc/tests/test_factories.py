import dataclasses

from django.test import SimpleTestCase

from gaze2afc.factories import (
    AvatarLayout,
    AvatarLayoutFactory,
    Factory,
    Participant,
    ParticipantFactory,
    TrialPlan,
    TrialPlanFactory,
)
from gaze2afc.mixins import SynthTestMixin


class TestFactory(SimpleTestCase):
    def test_factory_must_be_implemented(self):
        with self.assertRaises(NotImplementedError):
            Factory().make()

    def test_get_factory(self):
        plan_factory = Factory.get_factory("gaze2afc.TrialPlanFactory")
        self.assertEqual(plan_factory, TrialPlanFactory)

    def test_get_factory_with_app_and_name(self):
        self.assertEqual(Factory.get_factory("gaze2afc", "ParticipantFactory"), ParticipantFactory)

    def test_factory_make_returns_instance(self):
        plan_factory = TrialPlanFactory(0)
        plan = plan_factory.make()
        self.assertIsNotNone(plan)
        self.assertIsInstance(plan, plan_factory.model)

    def test_factory_make_with_unknown_field_raises_type_error(self):
        with self.assertRaises(TypeError):
            TrialPlanFactory(0).make(colour="red")

    def test_factory_make_batch_returns_list(self):
        plans = TrialPlanFactory(0).make_batch(3)
        self.assertIsInstance(plans, list)
        self.assertEqual(len(plans), 3)

    def test_factory_make_batch_with_seq_returns_list(self):
        plans = TrialPlanFactory(0).make_batch(3, sequence=[{"n_saccades": 2}])
        self.assertEqual(len(plans), 3)
        for plan in plans:
            self.assertEqual(plan.n_saccades, 2)

    def test_factory_make_batch_cycles_sequence(self):
        plans = TrialPlanFactory(0).make_batch(4, sequence=[{"first_side": -1}, {"first_side": 1}])
        self.assertEqual([plan.first_side for plan in plans], [-1, 1, -1, 1])

    def test_factory_make_batch_merges_kwargs(self):
        plans = TrialPlanFactory(0).make_batch(3, sequence=[{"n_saccades": 1}], natural_side=1)
        for plan in plans:
            self.assertEqual(plan.n_saccades, 1)
            self.assertEqual(plan.natural_side, 1)

    def test_factory_with_incorrect_seq_raises_type_error(self):
        with self.assertRaises(TypeError):
            TrialPlanFactory(0).make_batch(3, sequence=[[]])

    def test_factory_handles_nested_factory(self):
        plan = TrialPlanFactory(0).make()
        self.assertIsInstance(plan.layout, AvatarLayout)

    def test_factory_handles_nested_kwargs(self):
        plan = TrialPlanFactory(0).make(layout__separation_deg=20.0)
        self.assertEqual(plan.layout.separation_deg, 20.0)

    def test_factory_handles_nested_dict(self):
        plan = TrialPlanFactory(0).make(layout={"phase": 0.0, "speed_deg_s": 0.0})
        self.assertEqual(plan.layout.phase, 0.0)
        self.assertEqual(plan.layout.speed_deg_s, 0.0)

    def test_factory_accepts_record_for_nested_field(self):
        layout = AvatarLayout(phase=1.0)
        plan = TrialPlanFactory(0).make(layout=layout)
        self.assertIs(plan.layout, layout)

    def test_same_seed_makes_same_records(self):
        self.assertEqual(TrialPlanFactory(7).make_batch(5), TrialPlanFactory(7).make_batch(5))

    def test_options_reach_nested_factory(self):
        plan = TrialPlanFactory(0, separation_deg=12.0).make()
        self.assertEqual(plan.layout.separation_deg, 12.0)


class TestRecords(SimpleTestCase):
    def test_sides_alternate_from_first_side(self):
        plan = TrialPlanFactory(0).make(n_saccades=3, first_side=-1)
        self.assertEqual(plan.sides, (-1, 1, -1, 1))
        self.assertEqual(plan.last_side, 1)

    def test_no_saccade_plan_has_one_side(self):
        plan = TrialPlanFactory(0).make(n_saccades=0, first_side=1)
        self.assertEqual(plan.sides, (1,))

    def test_invalid_side_raises(self):
        with self.assertRaises(ValueError):
            TrialPlanFactory(0).make(first_side=0)

    def test_segment_frames_fill_the_trial(self):
        plan = TrialPlanFactory(3).make(n_saccades=3, latency_frames=5)
        lengths = plan.segment_frames(84, 6)
        self.assertEqual(len(lengths), 4)
        self.assertEqual(sum(lengths), 84 - 5)
        self.assertTrue(all(length >= 6 for length in lengths))

    def test_segment_frames_that_do_not_fit_raise(self):
        plan = TrialPlanFactory(0).make(n_saccades=5, latency_frames=6)
        with self.assertRaises(ValueError):
            plan.segment_frames(20, 6)

    def test_avatar_centers_sway_around_their_side(self):
        layout = AvatarLayout(separation_deg=16.0, sway_amplitude_deg=1.5, phase=0.0)
        self.assertAlmostEqual(float(layout.center_x(-1, 0.0)), -8.0)
        self.assertAlmostEqual(float(layout.center_x(1, 0.0)), 8.0)
        t = [0.1 * i for i in range(40)]
        self.assertTrue(all(abs(x - 8.0) <= 1.5 + 1e-12 for x in layout.center_x(1, t)))

    def test_avatar_layout_factory_reads_options(self):
        layout = AvatarLayoutFactory(0, sway_amplitude_deg=0.5).make()
        self.assertEqual(layout.sway_amplitude_deg, 0.5)

    def test_participant_id_pattern(self):
        participants = ParticipantFactory(0).make_batch(10)
        for participant in participants:
            pid = participant.participant_id
            self.assertRegex(pid, r"^\d{2}[mw]\d{2}$")
            self.assertEqual(len(participant.block_offsets_px), 4)

    def test_participant_offsets_are_bounded(self):
        participant = ParticipantFactory(1, n_blocks=6, max_offset_px=10.0).make()
        self.assertEqual(len(participant.block_offsets_px), 6)
        for dx, dy in participant.block_offsets_px:
            self.assertLessEqual(abs(dx), 10.0)
            self.assertLessEqual(abs(dy), 10.0)


class TestSynthTestMixin(SynthTestMixin, SimpleTestCase):
    factories = [TrialPlanFactory, "gaze2afc.ParticipantFactory"]

    def test_get_factory_for_model(self):
        factory = self.get_factory_for(TrialPlan)
        self.assertIsInstance(factory, TrialPlanFactory)

    def test_get_factory_for_registered_name(self):
        factory = self.get_factory_for("gaze2afc.ParticipantFactory")
        self.assertIsInstance(factory.make(), Participant)

    def test_records_are_frozen(self):
        plan = self.get_factory_for(TrialPlan).make()
        with self.assertRaises(dataclasses.FrozenInstanceError):
            plan.n_saccades = 1
