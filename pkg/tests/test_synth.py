"""
Unit tests for the synthetic corpus generator
"""
import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd

from distress_transfer.corpus import CorpusRole, ingest_posts, load_row_labels
from distress_transfer.domainadapt import ks_two_sample
from distress_transfer.errors import SynthError
from distress_transfer.manifest import file_digest
from distress_transfer.synth import SHIFT_CHANNELS, SynthSpec, generate


def read_jsonl(path: Path):
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


class TestSynth(unittest.TestCase):
    """Test cases for generate"""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_sizes(self):
        spec = SynthSpec(n_source_posts=500, n_target_posts=301, sample_size=40)
        result = generate(spec, seed=1, out_dir=self.out)
        source, target = read_jsonl(result.source_posts), read_jsonl(result.target_posts)
        self.assertEqual(len(source), 500)
        self.assertEqual(len(target), 301)
        self.assertEqual(len({p["user_id"] for p in source}), 20)
        self.assertEqual(len(pd.read_csv(result.target_sample_labels)), 40)
        self.assertTrue(all("label" in p for p in source))
        self.assertFalse(any("label" in p for p in target))

    def test_one_post_per_user_day(self):
        result = generate(SynthSpec(n_source_posts=100, n_target_posts=120, sample_size=10), seed=2, out_dir=self.out)
        for path in (result.source_posts, result.target_posts):
            posts = read_jsonl(path)
            keys = {(p["user_id"], p["timestamp"][:10]) for p in posts}
            with self.subTest(path=path.name):
                self.assertEqual(len(keys), len(posts))

    def test_same_seed_same_bytes(self):
        spec = SynthSpec(n_source_posts=100, n_target_posts=90, sample_size=20)
        first = generate(spec, seed=3, out_dir=self.out / "a")
        second = generate(spec, seed=3, out_dir=self.out / "b")
        other = generate(spec, seed=4, out_dir=self.out / "c")
        for name in ("source_posts", "target_posts", "target_sample_labels", "manifest"):
            with self.subTest(file=name):
                self.assertEqual(getattr(first, name).read_bytes(), getattr(second, name).read_bytes())
        self.assertNotEqual(first.target_posts.read_bytes(), other.target_posts.read_bytes())

    def test_invalid_specs(self):
        cases = [
            (SynthSpec(n_source_posts=10), "fewer posts than two source users"),
            (SynthSpec(shift_fraction=1.5), "shift fraction above 1"),
            (SynthSpec(target_distress_fraction=0.0), "no target distress"),
            (SynthSpec(target_posts_per_user=100, target_days=90), "more posts than days"),
            (SynthSpec(sample_size=-1), "negative sample"),
            (SynthSpec(shift=float("nan")), "non-finite shift"),
        ]
        for spec, description in cases:
            with self.subTest(description=description):
                with self.assertRaises(SynthError):
                    generate(spec, seed=1, out_dir=self.out)

    def test_shift_moves_only_selected_channels(self):
        spec = SynthSpec(n_source_posts=100, n_target_posts=90, shift=2.0, shift_fraction=0.3, sample_size=10)
        self.assertEqual(spec.shifted_channels, SHIFT_CHANNELS[:3])
        result = generate(spec, seed=5, out_dir=self.out)
        manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
        source = manifest["profiles"]["source"]["distress"]
        target = manifest["profiles"]["target"]["distress"]
        changed = sorted(name for name in source if source[name] != target[name])
        self.assertEqual(changed, ["distress_word_rate", "extra_words_mean", "log_followers"])

    def test_manifest_digests(self):
        result = generate(SynthSpec(n_source_posts=100, n_target_posts=90, sample_size=10), seed=6, out_dir=self.out)
        manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
        self.assertEqual(manifest["seed"], 6)
        for path in (result.source_posts, result.target_posts, result.target_sample_labels):
            with self.subTest(file=path.name):
                self.assertEqual(manifest["files"][path.name], file_digest(path))

    def test_sample_rows_are_english(self):
        spec = SynthSpec(n_source_posts=100, n_target_posts=600, sample_size=200, non_english_fraction=0.4)
        result = generate(spec, seed=7, out_dir=self.out)
        english = {
            (p["user_id"], p["timestamp"][:10]) for p in read_jsonl(result.target_posts) if p["language"] == "en"
        }
        sample = pd.read_csv(result.target_sample_labels, dtype=str)
        self.assertEqual(len(sample), 200)
        self.assertTrue(set(zip(sample["user_id"], sample["date"])) <= english)

    def test_zero_shift_keeps_post_lengths(self):
        """Without a shift, source and target Distress post lengths share one distribution"""
        spec = SynthSpec(shift=0.0, sample_size=0)
        result = generate(spec, seed=8, out_dir=self.out)
        target_labels = json.loads(result.manifest.read_text(encoding="utf-8"))["target"]["labels"]
        source_lengths = [len(p["text"].split()) for p in read_jsonl(result.source_posts) if p["label"] == "distress"]
        target_lengths = [
            len(p["text"].split()) for p in read_jsonl(result.target_posts) if target_labels[p["user_id"]] == "distress"
        ]
        self.assertLess(ks_two_sample(source_lengths, target_lengths).statistic, 0.1)

    def test_output_is_ingestible(self):
        result = generate(SynthSpec(n_source_posts=100, n_target_posts=90, sample_size=15), seed=9, out_dir=self.out)
        source = ingest_posts(result.source_posts, CorpusRole.SOURCE)
        target = ingest_posts(result.target_posts, CorpusRole.TARGET)
        self.assertEqual(len(source.posts), 100)
        self.assertEqual(len(target.posts), 90)
        self.assertEqual(source.report.skipped, 0)
        self.assertEqual(len(load_row_labels(result.target_sample_labels)), 15)


if __name__ == "__main__":
    unittest.main()
