# tests/test_exporters.py
import json
import os
import shutil
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# Add root directory to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.evalkit import roc
from core.immjpf import BeliefSnapshot
from core.radio import ConnectivityGraph
from exporters.report_exporter import save_roc, save_snapshots, save_summary


class TestReportExporter(unittest.TestCase):
    """Detection report files."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp(prefix="v2x_reports_")

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def test_roc_files(self):
        truth = np.zeros(40, dtype=bool)
        truth[10:20] = True
        curve = roc(np.where(truth, 2.0, 1.0) + np.linspace(0.0, 0.5, 40), truth, name="run")

        csv_path, json_path = save_roc(curve, os.path.join(self.test_dir, "nested", "roc_run"))

        table = pd.read_csv(csv_path)
        self.assertEqual(list(table.columns), ["fpr", "tpr", "threshold"])
        self.assertEqual(len(table), len(curve.fpr))
        with open(json_path, "r", encoding="utf-8") as f:
            document = json.load(f)
        self.assertEqual(document["name"], "run")
        self.assertAlmostEqual(document["auc"], curve.auc)
        self.assertIsNone(document["points"][0]["threshold"])

    def test_summary_replaces_non_finite_values(self):
        path = save_summary(
            {"threshold": float("inf"), "nested": {"latency": float("nan"), "rates": [0.5, float("-inf")]}},
            os.path.join(self.test_dir, "summary.json")
        )
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
        self.assertIsNone(document["threshold"])
        self.assertIsNone(document["nested"]["latency"])
        self.assertEqual(document["nested"]["rates"], [0.5, None])

    def test_snapshots_are_sparse_json_lines(self):
        snapshots = [
            BeliefSnapshot(
                frame=t,
                pi_word_pos=np.array([0.9999999, 0.0000001, 0.0]),
                pi_word_comm=np.array([0.25, 0.75]),
                pi_letters=np.full((2, 2), 0.5),
                predicted_graph=ConnectivityGraph.empty(2, t),
                lambda_word_pos=np.array([0.5, 0.5, 0.0]),
                lambda_word_comm=np.array([1.0, 0.0])
            )
            for t in range(3)
        ]
        path = save_snapshots(snapshots, os.path.join(self.test_dir, "snapshots.jsonl"))

        with open(path, "r", encoding="utf-8") as f:
            lines = [json.loads(line) for line in f if line.strip()]
        self.assertEqual([line["frame"] for line in lines], [0, 1, 2])
        self.assertEqual(lines[0]["pi_word_pos"], {"size": 3, "support": {"0": 1.0}})
        self.assertEqual(lines[0]["lambda_word_comm"]["support"], {"0": 1.0})
        self.assertIsNone(lines[0]["posterior_word_pos"])
        self.assertEqual(lines[0]["predicted_graph"], ["00", "00"])


if __name__ == '__main__':
    unittest.main()
