import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from gaze2afc.conf import PipelineConfig, load_config, load_synth_table
from gaze2afc.exceptions import InvalidConfig

TOML = """
[sampler]
chains = 2
seed = 7

[kinematics]
saccade_threshold_deg_s = 80

[run]
outcomes = ["decision"]

[synth]
n_trials = 20
"""


class TestLoadConfig(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / "gaze2afc.toml"
        self.path.write_text(TOML, encoding="utf-8")

    @override_settings(GAZE2AFC={})
    def test_defaults(self):
        config = load_config()
        self.assertEqual(config, PipelineConfig())
        self.assertEqual(config.cascade.effect_threshold, 0.85)
        self.assertEqual(config.kinematics.saccade_threshold_deg_s, 100)

    @override_settings(GAZE2AFC={"sampler": {"chains": 3, "draws": 50}})
    def test_layers_apply_in_order(self):
        config = load_config(self.path, sampler={"seed": 11, "warmup": None})
        self.assertEqual(config.sampler.chains, 2)
        self.assertEqual(config.sampler.draws, 50)
        self.assertEqual(config.sampler.seed, 11)
        self.assertEqual(config.sampler.warmup, PipelineConfig().sampler.warmup)
        self.assertEqual(config.kinematics.saccade_threshold_deg_s, 80)
        self.assertEqual(config.run.outcomes, ("decision",))

    def test_synth_table(self):
        self.assertEqual(load_synth_table(self.path), {"n_trials": 20})
        self.assertEqual(load_synth_table(None), {})

    def test_unknown_key_raises(self):
        with self.assertRaises(InvalidConfig) as ctx:
            load_config(sampler={"chain": 2})
        self.assertTrue(any("chains" in note for note in ctx.exception.__notes__))

    def test_unknown_section_raises(self):
        with self.assertRaises(InvalidConfig):
            load_config(plotting={"dpi": 100})

    def test_unreadable_file_raises(self):
        with self.assertRaises(InvalidConfig):
            load_config(Path(self.tmp.name) / "missing.toml")
        broken = Path(self.tmp.name) / "broken.toml"
        broken.write_text("[sampler\n", encoding="utf-8")
        with self.assertRaises(InvalidConfig):
            load_config(broken)


class TestPipelineConfig(SimpleTestCase):
    def test_hash_is_stable(self):
        self.assertEqual(PipelineConfig().hash, PipelineConfig().hash)
        self.assertEqual(len(PipelineConfig().hash), 64)

    def test_hash_follows_the_values(self):
        config = PipelineConfig()
        self.assertNotEqual(config.hash, config.replace(sampler={"seed": 1}).hash)

    def test_replace_keeps_the_original(self):
        config = PipelineConfig()
        changed = config.replace(evidence={"tolerance": 1e-6})
        self.assertEqual(config.evidence.tolerance, 1e-10)
        self.assertEqual(changed.evidence.tolerance, 1e-6)

    def test_provenance(self):
        provenance = PipelineConfig().provenance()
        self.assertEqual(set(provenance), {"version", "config", "config_hash"})
        self.assertEqual(provenance["config"]["sampler"]["chains"], 4)
