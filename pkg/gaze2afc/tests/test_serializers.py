import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from gaze2afc import __version__
from gaze2afc.cascade import CascadeClass
from gaze2afc.serializers import csv_header, dumps, read_csv, read_json, write_csv, write_json


class TestJson(SimpleTestCase):
    def test_non_finite_values_become_null(self):
        data = json.loads(dumps({"a": float("nan"), "b": np.array([1.0, np.inf]), "c": np.float64(-np.inf)}))
        self.assertEqual(data, {"a": None, "b": [1.0, None], "c": None})

    def test_numpy_and_enum_values(self):
        data = json.loads(
            dumps({"n": np.int64(3), "flag": np.bool_(True), "class": CascadeClass.ABSENT, "path": Path("a")})
        )
        self.assertEqual(data, {"n": 3, "flag": True, "class": "effect absent", "path": "a"})

    def test_write_json_adds_provenance(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json(Path(tmp) / "out" / "x.json", {"value": 1}, {"config_hash": "abc"})
            self.assertEqual(read_json(path), {"value": 1, "gaze2afc": {"config_hash": "abc"}})


class TestCsv(SimpleTestCase):
    def test_header(self):
        self.assertEqual(csv_header("abc"), f"# gaze2afc {__version__} config_sha256=abc")
        self.assertEqual(csv_header(seed=3), f"# gaze2afc {__version__} seed=3")

    def test_round_trip_skips_the_comment(self):
        table = pd.DataFrame({"participant": ["01m25", "02w20"], "value": [0.1234567, 2.0]})
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(Path(tmp) / "t.csv", table, csv_header("abc"))
            text = path.read_text(encoding="utf-8")
            self.assertTrue(text.startswith("# gaze2afc"))
            self.assertNotIn("\r", text)
            loaded = read_csv(path)
        self.assertEqual(loaded["participant"].tolist(), ["01m25", "02w20"])
        self.assertEqual(loaded["value"].tolist(), [0.123457, 2.0])
