"""
Unit tests for daily counting, the distress index and its outputs
"""
import tempfile
import unittest
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd
from hypothesis import given, settings
from hypothesis import strategies as st

from distress_transfer.errors import IndexSeriesError
from distress_transfer.index import DailyCounts, bdi, daily_counts, emit, load_annotations, load_index_csv
from distress_transfer.transfer import PredictedTarget

START = date(2019, 3, 1)


def series_of(pairs):
    """DailyCounts over consecutive days from START."""
    return [DailyCounts(START + timedelta(days=i), n_d, n_s) for i, (n_d, n_s) in enumerate(pairs)]


def predicted(rows):
    """PredictedTarget from (user, day offset, label, post_count) tuples."""
    return PredictedTarget(
        row_keys=tuple((user, START + timedelta(days=offset)) for user, offset, _, _ in rows),
        labels=tuple(label for _, _, label, _ in rows),
        post_counts=tuple(n for _, _, _, n in rows),
    )


counts_pairs = st.lists(st.tuples(st.integers(0, 200), st.integers(0, 200)), min_size=2, max_size=60)


class TestBdi(unittest.TestCase):
    """Test cases for bdi"""

    def test_two_days(self):
        series = bdi(series_of([(2, 4), (4, 2)]))
        np.testing.assert_allclose(series.values, [-2.0, 2.0])
        self.assertEqual(series.stats(), {"mu_d": 3.0, "alpha_d": 1.0, "mu_s": 3.0, "alpha_s": 1.0})

    def test_constant_counts(self):
        """Zero standard deviation makes the term 0"""
        series = bdi(series_of([(5, 5)] * 4))
        np.testing.assert_array_equal(series.values, np.zeros(4))
        self.assertEqual(series.alpha_d, 0.0)

    def test_invalid_series(self):
        cases = [
            ([], "no days"),
            (series_of([(1, 1)]), "single day"),
            ([DailyCounts(START, 1, 2), DailyCounts(START, 2, 1)], "repeated date"),
            ([DailyCounts(START + timedelta(days=1), 1, 2), DailyCounts(START, 2, 1)], "decreasing dates"),
        ]
        for counts, description in cases:
            with self.subTest(description=description):
                with self.assertRaises(IndexSeriesError):
                    bdi(counts)

    @settings(deadline=None, max_examples=200)
    @given(counts_pairs)
    def test_swapping_classes_negates(self, pairs):
        forward = bdi(series_of(pairs)).values
        swapped = bdi(series_of([(s, d) for d, s in pairs])).values
        np.testing.assert_allclose(swapped, -forward, atol=1e-12)

    @settings(deadline=None, max_examples=200)
    @given(counts_pairs)
    def test_zero_mean(self, pairs):
        self.assertAlmostEqual(float(bdi(series_of(pairs)).values.mean()), 0.0, places=9)

    @settings(deadline=None, max_examples=200)
    @given(counts_pairs, st.integers(0, 1000), st.integers(0, 1000))
    def test_constant_shift_invariance(self, pairs, shift_d, shift_s):
        base = bdi(series_of(pairs)).values
        shifted = bdi(series_of([(d + shift_d, s + shift_s) for d, s in pairs])).values
        np.testing.assert_allclose(shifted, base, atol=1e-9)


class TestDailyCounts(unittest.TestCase):
    """Test cases for daily_counts"""

    def test_single_day(self):
        counts = daily_counts(predicted([("a", 0, 1, 1), ("b", 0, -1, 1), ("c", 0, 1, 1)]))
        self.assertEqual(counts, [DailyCounts(START, 2, 1)])

    def test_gap_days_count_zero(self):
        counts = daily_counts(predicted([("a", 0, 1, 1), ("a", 3, -1, 1)]))
        self.assertEqual([c.date for c in counts], [START + timedelta(days=i) for i in range(4)])
        self.assertEqual([(c.n_d, c.n_s) for c in counts], [(1, 0), (0, 0), (0, 0), (0, 1)])

    def test_every_row_counted_once(self):
        rng = np.random.default_rng(5)
        rows = [(f"u{i}", int(rng.integers(0, 20)), int(rng.choice([1, -1])), int(rng.integers(1, 4))) for i in range(150)]
        for unit, expected in (("rows", len(rows)), ("posts", sum(r[3] for r in rows))):
            with self.subTest(unit=unit):
                counts = daily_counts(predicted(rows), unit)
                self.assertEqual(sum(c.total for c in counts), expected)
                self.assertEqual(sum(c.n_d for c in counts), sum(r[3] if unit == "posts" else 1 for r in rows if r[2] == 1))

    def test_posts_unit_weights_rows(self):
        counts = daily_counts(predicted([("a", 0, 1, 3), ("b", 0, -1, 2)]), "posts")
        self.assertEqual(counts, [DailyCounts(START, 3, 2)])

    def test_invalid_inputs(self):
        with self.assertRaises(IndexSeriesError):
            daily_counts(predicted([("a", 0, 1, 1)]), "weeks")
        with self.assertRaises(IndexSeriesError):
            daily_counts(predicted([]))


class TestEmit(unittest.TestCase):
    """Test cases for the index CSV and SVG outputs"""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name)
        self.series = bdi(series_of([(2, 4), (4, 2)]))
        self.annotations = self.out / "events.csv"
        self.annotations.write_text("date,label\n2019-03-02,Budget vote\n", encoding="utf-8")

    def tearDown(self):
        self._tmp.cleanup()

    def test_csv(self):
        emit(self.series, self.out / "index.csv", self.out / "index.svg")
        lines = (self.out / "index.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines[0], "date,n_d,n_s,bdi")
        self.assertTrue(lines[1].startswith("2019-03-01,2,4,"))
        loaded = load_index_csv(self.out / "index.csv")
        self.assertEqual(loaded.dates, self.series.dates)
        np.testing.assert_allclose(loaded.values, self.series.values)

    def test_event_markers(self):
        emit(self.series, self.out / "index.csv", self.out / "index.svg", self.annotations)
        svg = (self.out / "index.svg").read_text(encoding="utf-8")
        self.assertEqual(svg.count('id="event-marker-0"'), 1)
        self.assertNotIn('id="event-marker-1"', svg)

    def test_deterministic_bytes(self):
        emit(self.series, self.out / "a.csv", self.out / "a.svg", self.annotations)
        emit(self.series, self.out / "b.csv", self.out / "b.svg", self.annotations)
        self.assertEqual((self.out / "a.svg").read_bytes(), (self.out / "b.svg").read_bytes())
        self.assertEqual((self.out / "a.csv").read_bytes(), (self.out / "b.csv").read_bytes())

    def test_annotations(self):
        self.assertEqual(load_annotations(self.annotations), [(date(2019, 3, 2), "Budget vote")])
        bad = self.out / "bad.csv"
        bad.write_text("day,name\n2019-03-02,x\n", encoding="utf-8")
        with self.assertRaises(IndexSeriesError):
            load_annotations(bad)

    def test_load_rejects_other_columns(self):
        path = self.out / "other.csv"
        pd.DataFrame({"date": ["2019-03-01"], "value": [1.0]}).to_csv(path, index=False)
        with self.assertRaises(IndexSeriesError):
            load_index_csv(path)


if __name__ == "__main__":
    unittest.main()
