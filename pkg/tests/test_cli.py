"""
Unit tests for the command-line front end
"""
import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd
from click.testing import CliRunner

from distress_transfer.cli import cli
from distress_transfer.models import ClassifierKind, load_model

PIPELINE_TOML = """\
[paths]
source_posts = "data/source_posts.jsonl"
target_posts = "data/target_posts.jsonl"
target_sample_labels = "data/target_sample_labels.csv"

[run]
salt = ""
threads = 1
min_target_sample = 20

[models]
classifiers = ["lr", "rf"]
lr_max_iters = 500
rf_n_trees = [9]
rf_max_depths = [4]
"""


class TestCli(unittest.TestCase):
    """Test cases for the distress-transfer commands"""

    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls._tmp.name)
        cls.config = cls.root / "pipeline.toml"
        cls.config.write_text(PIPELINE_TOML, encoding="utf-8")
        result = CliRunner().invoke(cli, [
            "--out-dir", str(cls.root / "data"), "--seed", "7", "synth",
            "--source-posts", "200", "--target-posts", "300", "--sample-size", "60", "--target-days", "30",
        ])
        assert result.exit_code == 0, result.output

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def invoke(self, *args):
        return CliRunner().invoke(cli, [str(a) for a in args])

    def run_condition(self, flag, out_dir):
        result = self.invoke("--config", self.config, "--out-dir", out_dir, "run", flag)
        self.assertEqual(result.exit_code, 0, result.output)
        return out_dir

    def test_exit_codes(self):
        cases = [
            (("--config", self.root / "missing.toml", "ingest"), 10, "CONFIG_ERROR"),
            (("report",), 18, "REPORT_ERROR"),
            (("index", "--predictions", self.root / "missing.csv"), 17, "INDEX_ERROR"),
        ]
        for args, code, error_code in cases:
            with self.subTest(args=args):
                result = self.invoke("--out-dir", self.root / "errors", *args)
                self.assertEqual(result.exit_code, code)
                self.assertIn(f'"error_code": "{error_code}"', result.stderr)

    def test_usage_error(self):
        self.assertEqual(self.invoke("no-such-command").exit_code, 2)
        self.assertEqual(self.invoke("--threads", "0", "ingest").exit_code, 2)

    def test_synth_outputs(self):
        data = self.root / "data"
        for name in ("source_posts.jsonl", "target_posts.jsonl", "target_sample_labels.csv", "generator_manifest.json"):
            with self.subTest(file=name):
                self.assertTrue((data / name).is_file())

    def test_stage_command_errors(self):
        """Every stage command exits as a config failure when the config file is missing"""
        for command in ("ingest", "features", "adapt", "train", "run"):
            with self.subTest(command=command):
                result = self.invoke("--config", self.root / "missing.toml", "--out-dir", self.root / "errors", command)
                self.assertEqual(result.exit_code, 10)
                self.assertIn('"stage": "config"', result.stderr)

    def test_ingest_command(self):
        out = self.root / "ingest"
        result = self.invoke("--config", self.config, "--out-dir", out, "ingest")
        self.assertEqual(result.exit_code, 0, result.output)
        source = pd.read_csv(out / "source_documents.csv")
        target = pd.read_csv(out / "target_documents.csv")
        self.assertEqual(len(source), 200)
        self.assertEqual(len(target), 300)
        self.assertEqual(list(source.columns[:4]), ["user_id", "date", "label", "post_count"])
        self.assertEqual(set(source["label"]), {"distress", "control"})

    def test_features_command(self):
        out = self.root / "features"
        result = self.invoke("--config", self.config, "--out-dir", out, "features")
        self.assertEqual(result.exit_code, 0, result.output)
        source = pd.read_csv(out / "source_features.csv")
        target = pd.read_csv(out / "target_features.csv")
        self.assertEqual(len(source), 200)
        self.assertEqual(len(target), 300)
        self.assertEqual(list(source.columns), list(target.columns))
        report = json.loads((out / "feature_report.json").read_text(encoding="utf-8"))
        self.assertTrue(report)

    def test_adapt_command(self):
        out = self.root / "adapt"
        result = self.invoke("--config", self.config, "--out-dir", out, "adapt")
        self.assertEqual(result.exit_code, 0, result.output)
        for name in ("adaptation.csv", "adaptation.json", "adapted_source_features.csv", "adapted_target_features.csv"):
            with self.subTest(file=name):
                self.assertTrue((out / name).is_file())
        self.assertIn("features tested", result.output)
        self.assertEqual(len(pd.read_csv(out / "adapted_target_features.csv")), 300)

    def test_train_command(self):
        out = self.root / "train"
        result = self.invoke("--config", self.config, "--out-dir", out, "train")
        self.assertEqual(result.exit_code, 0, result.output)
        for name in ("model_lr.json", "model_rf.json", "cv_table.csv"):
            with self.subTest(file=name):
                self.assertTrue((out / name).is_file())
        self.assertFalse((out / "model_svm.json").exists())
        self.assertEqual(list(pd.read_csv(out / "cv_table.csv").columns), ["kind", "params", "fold", "accuracy"])
        self.assertEqual(load_model(out / "model_lr.json").kind, ClassifierKind.LR)

    def test_run_writes_outputs(self):
        out = self.run_condition("--weighted", self.root / "weighted")
        for name in ("index.csv", "index.svg", "metrics.csv", "cv_table.csv", "predictions.csv", "model.json",
                     "feature_ranking.csv", "adaptation.csv", "adaptation.json", "manifest.json"):
            with self.subTest(file=name):
                self.assertTrue((out / name).is_file())
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest["condition"], "weighted")
        self.assertEqual(len(manifest["metrics"]), 4)
        self.assertIn("metrics.csv", manifest["outputs"])
        self.assertIn("feature_ranking.csv", manifest["outputs"])
        ranking = pd.read_csv(out / "feature_ranking.csv")
        self.assertEqual(list(ranking.columns), ["feature", "weight"])
        self.assertEqual(len(ranking), len(manifest["details"]["feature_names"]))
        magnitudes = ranking["weight"].abs().tolist()
        self.assertEqual(magnitudes, sorted(magnitudes, reverse=True))

    def test_same_seed_same_tables(self):
        first = self.run_condition("--unweighted", self.root / "repeat-a")
        second = self.run_condition("--unweighted", self.root / "repeat-b")
        for name in ("metrics.csv", "index.csv", "predictions.csv"):
            with self.subTest(file=name):
                self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_index_command(self):
        out = self.run_condition("--unweighted", self.root / "index-run")
        rows = pd.read_csv(out / "index.csv")
        (out / "index.csv").unlink()
        result = self.invoke("--config", self.config, "--out-dir", out, "index", "--unit", "posts")
        self.assertEqual(result.exit_code, 0, result.output)
        recomputed = pd.read_csv(out / "index.csv")
        self.assertEqual(list(recomputed.columns), ["date", "n_d", "n_s", "bdi"])
        # one post per user-day, so both units count the same
        pd.testing.assert_frame_equal(recomputed, rows)

    def test_report_compares_conditions(self):
        weighted = self.run_condition("--weighted", self.root / "report-w")
        unweighted = self.run_condition("--unweighted", self.root / "report-u")
        csv_path = self.root / "report.csv"
        result = self.invoke("--out-dir", self.root, "report", weighted / "manifest.json", unweighted / "manifest.json", "--csv", csv_path)
        self.assertEqual(result.exit_code, 0, result.output)
        table = pd.read_csv(csv_path)
        self.assertEqual(len(table), 8)
        self.assertEqual(set(table["condition"]), {"weighted", "unweighted"})
        self.assertIn("accuracy", result.output)


if __name__ == "__main__":
    unittest.main()
