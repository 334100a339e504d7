import math

import numpy as np
from django.test import SimpleTestCase  # pyright: ignore[reportMissingModuleSource]

from core.errors import ArgumentError, ShapeError, UndefinedMetricError

from .scoring import (
    auc,
    auc_bruteforce,
    base_entropy,
    compute_report,
    effective_rank,
    g_auc,
    group_auc,
    logloss,
    ne_delta,
    normalized_entropy,
)

SCORES = [0.1, 0.4, 0.35, 0.8]
LABELS = [0, 0, 1, 1]


class AucTests(SimpleTestCase):
    def test_hand_counted_example(self):
        self.assertAlmostEqual(auc(SCORES, LABELS), 0.75)
        self.assertAlmostEqual(auc_bruteforce(SCORES, LABELS), 0.75)

    def test_perfect_ranking(self):
        self.assertEqual(auc([0.1, 0.2, 0.8, 0.9], LABELS), 1.0)

    def test_all_ties(self):
        self.assertEqual(auc([0.3] * 4, LABELS), 0.5)

    def test_equals_pairwise_count_exactly(self):
        rng = np.random.default_rng(0)
        for i in range(200):
            n = int(rng.integers(2, 1001))
            tied = i % 2 == 0
            scores = rng.integers(0, 8, size=n) / 8.0 if tied else rng.random(n)
            labels = rng.integers(0, 2, size=n)
            labels[:2] = (0, 1)
            with self.subTest(instance=i, tied=tied):
                self.assertEqual(auc(scores, labels), auc_bruteforce(scores, labels))

    def test_single_class_undefined(self):
        with self.assertRaises(UndefinedMetricError):
            auc([0.2, 0.3], [1, 1])

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            auc([0.2, 0.3], [1])


class GroupAucTests(SimpleTestCase):
    def test_one_user_equals_auc(self):
        self.assertEqual(g_auc(SCORES, LABELS, [7] * 4), auc(SCORES, LABELS))
        rng = np.random.default_rng(1)
        scores, labels = rng.random(300), rng.integers(0, 2, size=300)
        self.assertEqual(g_auc(scores, labels, np.zeros(300)), auc(scores, labels))

    def test_two_users(self):
        result = group_auc(SCORES * 2, LABELS * 2, [1] * 4 + [2] * 4)
        self.assertAlmostEqual(result.value, 0.75)
        self.assertEqual((result.users_scored, result.users_skipped), (2, 0))

    def test_single_class_users_skipped(self):
        result = group_auc(SCORES + [0.5, 0.6], LABELS + [1, 1], [1] * 4 + [2, 2])
        self.assertAlmostEqual(result.value, 0.75)
        self.assertEqual((result.users_scored, result.users_skipped), (1, 1))

    def test_impression_weighting(self):
        scores = [0.9, 0.1, 0.1, 0.9, 0.2, 0.3]
        labels = [1, 0, 1, 0, 0, 0]
        users = [1, 1, 2, 2, 2, 2]
        uniform = g_auc(scores + [0.6, 0.4], labels + [1, 1], users + [2, 2])
        weighted = g_auc(
            scores + [0.6, 0.4], labels + [1, 1], users + [2, 2], weighting="impressions"
        )
        # user 1: AUC 1.0 over 2 rows; user 2: 6 rows
        user2 = auc([0.1, 0.9, 0.2, 0.3, 0.6, 0.4], [1, 0, 0, 0, 1, 1])
        self.assertAlmostEqual(uniform, (1.0 + user2) / 2)
        self.assertAlmostEqual(weighted, (2 * 1.0 + 6 * user2) / 8)

    def test_no_scoreable_user(self):
        with self.assertRaises(UndefinedMetricError):
            group_auc([0.1, 0.9], [0, 1], [1, 2])

    def test_unknown_weighting(self):
        with self.assertRaises(ArgumentError):
            group_auc(SCORES, LABELS, [1] * 4, weighting="clicks")


class EntropyMetricTests(SimpleTestCase):
    def test_logloss_at_half(self):
        self.assertAlmostEqual(logloss([0.5] * 4, LABELS), math.log(2), delta=1e-12)

    def test_logloss_clamps_to_prob_eps(self):
        eps = 1e-7
        expected = -(2 * math.log(eps) + math.log(1 - eps)) / 3
        self.assertAlmostEqual(logloss([0.0, 1.0, 1.0], [1, 0, 1]), expected, delta=1e-9)
        self.assertAlmostEqual(logloss([0.0, 1.0, 1.0], [1, 0, 1]), 10.745, places=3)

    def test_perfect_predictions_near_zero(self):
        eps = 1e-7
        self.assertLess(logloss([eps, eps, 1 - eps, 1 - eps], LABELS), 1e-6)

    def test_ne_above_one_for_bad_predictor(self):
        expected_ll = 0.5 * (-math.log(0.8) - math.log(0.2))
        self.assertAlmostEqual(logloss([0.8] * 4, LABELS), expected_ll)
        self.assertAlmostEqual(normalized_entropy([0.8] * 4, LABELS), 1.32193, places=5)

    def test_constant_base_rate_predictor_is_one(self):
        labels = [1, 0, 0, 0, 0]
        self.assertAlmostEqual(normalized_entropy([0.2] * 5, labels), 1.0, delta=1e-9)

    def test_better_than_base_rate_below_one(self):
        self.assertLess(normalized_entropy([0.1, 0.2, 0.7, 0.9], LABELS), 1.0)

    def test_base_entropy(self):
        self.assertAlmostEqual(base_entropy(LABELS), math.log(2))
        with self.assertRaises(UndefinedMetricError):
            base_entropy([0, 0, 0])

    def test_ne_delta(self):
        self.assertAlmostEqual(ne_delta(0.8, 0.78), -0.025)
        with self.assertRaises(ArgumentError):
            ne_delta(0.0, 0.5)


class EffectiveRankTests(SimpleTestCase):
    def test_identity_has_full_rank(self):
        self.assertAlmostEqual(effective_rank(np.eye(6)), 6.0)

    def test_rank_one(self):
        table = np.outer(np.arange(1.0, 11.0), np.arange(1.0, 5.0))
        self.assertAlmostEqual(effective_rank(table), 1.0, delta=1e-9)

    def test_zero_table(self):
        self.assertEqual(effective_rank(np.zeros((5, 3))), 1.0)

    def test_gaussian_table_against_direct_svd(self):
        table = np.random.default_rng(3).normal(size=(50, 8))
        sv = np.linalg.svd(table, compute_uv=False)
        p = sv / sv.sum()
        expected = math.exp(-float(np.sum(p * np.log(p))))
        value = effective_rank(table)
        self.assertAlmostEqual(value, expected, delta=1e-6)
        self.assertTrue(1.0 < value <= 8.0)

    def test_needs_matrix(self):
        with self.assertRaises(ShapeError):
            effective_rank(np.ones(4))


class ReportTests(SimpleTestCase):
    def test_report_fields(self):
        report = compute_report(SCORES * 2, LABELS * 2, [1] * 4 + [2] * 4)
        self.assertAlmostEqual(report.auc, 0.75)
        self.assertAlmostEqual(report.gauc, 0.75)
        self.assertEqual(report.examples, 8)
        self.assertEqual(set(report.to_dict()), {
            "auc", "gauc", "logloss", "ne", "examples", "users_scored", "users_skipped",
        })

    def test_no_scoreable_user_reports_missing_gauc(self):
        report = compute_report(SCORES, LABELS, [1, 2, 3, 4])
        self.assertIsNone(report.gauc)
        self.assertEqual((report.users_scored, report.users_skipped), (0, 4))
        self.assertAlmostEqual(report.auc, 0.75)
