"""
Unit tests for feature extraction and the four selection criteria
"""
import math
import unittest
from datetime import date

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from distress_transfer.corpus import DistressLabel
from distress_transfer.errors import FeatureError
from distress_transfer.features import (
    FeatureKind,
    Lexicon,
    TokenizedDocument,
    apply_scaling,
    build_feature_spec,
    build_unigram_vocab,
    correlation_prune,
    corpus_vocabulary,
    drop_meta,
    extract_features,
    fit_scaling,
    intersect_features,
    lexicon_percentages,
    load_lexicon,
)
from helpers import document, matrix, spec


def tokenized(stems, label=DistressLabel.DISTRESS, user_id="u1", day=date(2019, 3, 1), post_count=1):
    return TokenizedDocument(document(user_id=user_id, day=day, label=label, post_count=post_count), tuple(stems))


class TestLexicon(unittest.TestCase):
    """Test cases for lexicon parsing and category percentages"""

    def test_percentages(self):
        lexicon = Lexicon({"neg": ("sad",), "anx": ("worri*",)})
        cases = [
            ([], {"neg": 0.0, "anx": 0.0}),
            (["sad", "happi", "sad", "run"], {"neg": 50.0, "anx": 0.0}),
            (["worri"], {"neg": 0.0, "anx": 100.0}),
        ]
        for tokens, expected in cases:
            with self.subTest(tokens=tokens):
                self.assertEqual(lexicon_percentages(tokens, lexicon), expected)

    def test_invalid_patterns(self):
        for patterns in [(), ("",), ("Sad",), ("*",), ("wo*rri",)]:
            with self.subTest(patterns=patterns):
                with self.assertRaises(FeatureError):
                    Lexicon({"cat": patterns})

    def test_bundled_lexicon_matches_stems(self):
        lexicon = load_lexicon()
        self.assertIn("anx", lexicon.names)
        self.assertTrue(lexicon.matches("anx", "worri"))
        self.assertTrue(lexicon.matches("anx", "nervou"))
        self.assertFalse(lexicon.matches("anx", "brexit"))


class TestUnigramVocabulary(unittest.TestCase):
    """Test cases for build_unigram_vocab"""

    def test_single_covering_stem(self):
        docs = [tokenized(["brexit", f"w{i}"]) for i in range(5)]
        for coverage in (0.5, 0.99, 1.0):
            with self.subTest(coverage=coverage):
                self.assertEqual(build_unigram_vocab(docs, coverage), ("brexit",))

    def test_greedy_trace(self):
        """10 docs, A in 9, B in the remaining 1, coverage 0.99 -> {A, B}"""
        docs = [tokenized(["a"]) for _ in range(9)] + [tokenized(["b"])]
        docs += [tokenized(["c"], label=DistressLabel.CONTROL) for _ in range(20)]
        self.assertEqual(build_unigram_vocab(docs, 0.99), ("a", "b"))

    def test_disjoint_documents_need_one_stem_each(self):
        docs = [tokenized([f"s{i}"]) for i in range(6)]
        self.assertEqual(len(build_unigram_vocab(docs, 1.0)), 6)

    def test_no_distress_documents(self):
        with self.assertRaises(FeatureError):
            build_unigram_vocab([tokenized(["a"], label=DistressLabel.CONTROL)], 0.99)

    @settings(deadline=None, max_examples=20)
    @given(st.lists(st.sets(st.sampled_from("abcdefghij"), min_size=1, max_size=4), min_size=1, max_size=30),
           st.sampled_from([0.5, 0.9, 0.99, 1.0]))
    def test_coverage_and_minimality(self, stem_sets, coverage):
        """The vocabulary covers the required share and no shorter ranked prefix does"""
        docs = [tokenized(sorted(stems)) for stems in stem_sets]
        vocab = build_unigram_vocab(docs, coverage)
        required = math.ceil(coverage * len(docs) - 1e-9)

        def covered(words):
            return sum(1 for stems in stem_sets if stems & set(words))

        self.assertGreaterEqual(covered(vocab), required)
        self.assertLess(covered(vocab[:-1]), required)


class TestFeatureSelection(unittest.TestCase):
    """Test cases for intersection, pruning, meta removal and scaling"""

    def test_intersection(self):
        five = spec(["a", "b", "c", "d", "e"])
        self.assertEqual(intersect_features(five, five), five)
        self.assertEqual(intersect_features(five, spec(["e", "c", "a", "z"])).names, ["a", "c", "e"])
        with self.assertRaises(FeatureError):
            intersect_features(spec(["a"]), spec(["b"]))

    def test_intersection_respects_kind(self):
        lex = spec(["a"], [FeatureKind.LEXICON_PCT])
        uni = spec(["a"], [FeatureKind.UNIGRAM])
        with self.assertRaises(FeatureError):
            intersect_features(lex, uni)

    def test_correlation_prune(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=200)
        cases = [
            (np.column_stack([x, x]), ["f0"], "identical columns"),
            (np.column_stack([x, -x]), ["f0"], "negated column"),
            (np.column_stack([x, np.ones(200), rng.normal(size=200)]), ["f0", "f2"], "constant column dropped"),
        ]
        for values, kept, description in cases:
            with self.subTest(description=description):
                pruned = correlation_prune(matrix(values, [1] * 200), 0.75)
                self.assertEqual(pruned.spec.names, kept)

    def test_independent_columns_survive(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=(1000, 2))
        self.assertEqual(correlation_prune(matrix(values, [1] * 1000), 0.75).spec.names, ["f0", "f1"])

    def test_prune_rejects_all_constant(self):
        with self.assertRaises(FeatureError):
            correlation_prune(matrix(np.ones((5, 2)), [1] * 5), 0.75)

    def test_drop_meta(self):
        kinds = [FeatureKind.META, FeatureKind.META] + [FeatureKind.LEXICON_PCT] * 4
        m = matrix(np.zeros((2, 6)), [1, -1], kinds=kinds)
        self.assertEqual(len(drop_meta(m).spec), 4)
        plain = matrix(np.zeros((2, 3)), [1, -1])
        self.assertEqual(drop_meta(plain).spec, plain.spec)
        with self.assertRaises(FeatureError):
            drop_meta(matrix(np.zeros((2, 2)), [1, -1], kinds=[FeatureKind.META] * 2))

    def test_scaling(self):
        rng = np.random.default_rng(2)
        values = np.column_stack([rng.normal(3, 2, size=50), np.full(50, 7.0), rng.exponential(size=50)])
        m = matrix(values, [1] * 50)
        params = fit_scaling(m)
        scaled = apply_scaling(m, params).values

        # Two-pass oracle
        for j in range(values.shape[1]):
            column = values[:, j]
            mean = sum(column) / len(column)
            var = sum((v - mean) ** 2 for v in column) / len(column)
            self.assertAlmostEqual(params.mean[j], mean, places=9)
            self.assertAlmostEqual(params.std[j], math.sqrt(var), places=9)

        np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(scaled[:, [0, 2]].std(axis=0), 1.0, atol=1e-9)
        self.assertTrue(np.all(scaled[:, 1] == 0.0))

    def test_scaling_spec_mismatch(self):
        params = fit_scaling(matrix(np.ones((3, 2)), [1, 1, 1]))
        with self.assertRaises(FeatureError):
            apply_scaling(matrix(np.ones((3, 2)), [1, 1, 1], names=["x", "y"]), params)

    def test_matrix_rejects_non_finite(self):
        with self.assertRaises(FeatureError):
            matrix([[1.0, np.nan]], [1])


class TestExtraction(unittest.TestCase):
    """Test cases for build_feature_spec and extract_features"""

    def setUp(self):
        self.lexicon = Lexicon({"neg": ("sad",), "anx": ("worri*",)})
        self.docs = [
            tokenized(["sad", "sad", "worri", "vote"], user_id="u1", post_count=2),
            tokenized(["vote"], label=DistressLabel.CONTROL, user_id="u2", day=date(2019, 3, 2)),
        ]

    def test_spec_layout(self):
        built = build_feature_spec(self.lexicon, ("sad", "vote"))
        self.assertEqual(built.names[:2], ["meta_date", "meta_user"])
        self.assertIn("lex_neg", built.names)
        self.assertEqual(built.names[-2:], ["uni_sad", "uni_vote"])
        self.assertEqual(built.kinds()[-1], FeatureKind.UNIGRAM)

    def test_values(self):
        built = build_feature_spec(self.lexicon, ("sad", "vote", "absent"))
        m = extract_features(self.docs, built, self.lexicon)
        self.assertEqual(m.values.shape, (2, len(built)))
        row = dict(zip(built.names, m.values[0]))
        self.assertEqual(row["uni_sad"], 2.0)
        self.assertEqual(row["uni_absent"], 0.0)
        self.assertEqual(row["lex_neg"], 50.0)
        self.assertEqual(row["lex_anx"], 25.0)
        self.assertEqual(row["ling_word_count"], 4.0)
        self.assertEqual(row["ling_mean_post_length"], 2.0)
        self.assertEqual(row["eng_post_count"], 2.0)
        self.assertEqual(row["ego_followers"], 10.0)
        self.assertEqual(row["meta_date"], float(date(2019, 3, 1).toordinal()))
        self.assertEqual(list(m.y), [1, -1])
        self.assertEqual(m.row_keys[1], ("u2", date(2019, 3, 2)))
        self.assertEqual(m.post_counts, (2, 1))

    def test_deterministic(self):
        built = build_feature_spec(self.lexicon, corpus_vocabulary(self.docs))
        a = extract_features(self.docs, built, self.lexicon)
        b = extract_features(self.docs, built, self.lexicon)
        self.assertEqual(a.values.tobytes(), b.values.tobytes())
        self.assertEqual(built.fingerprint(), build_feature_spec(self.lexicon, ("sad", "vote", "worri")).fingerprint())

    def test_corpus_vocabulary_sorted(self):
        self.assertEqual(corpus_vocabulary(self.docs), ("sad", "vote", "worri"))

    def test_fingerprint_depends_on_order(self):
        self.assertNotEqual(spec(["a", "b"]).fingerprint(), spec(["b", "a"]).fingerprint())

    def test_zero_documents(self):
        with self.assertRaises(FeatureError):
            extract_features([], build_feature_spec(self.lexicon, ()), self.lexicon)


if __name__ == "__main__":
    unittest.main()
