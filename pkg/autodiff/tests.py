import numpy as np
from django.test import SimpleTestCase  # pyright: ignore[reportMissingModuleSource]

from core.errors import ArgumentError, NumericDomainError, ShapeError, VocabularyError

from .gradcheck import check_gradients
from .nn import MLP, Linear
from .optim import Adam
from .tensor import (
    PROB_EPS,
    Tensor,
    clamp_prob,
    concat,
    elementwise,
    gather_rows,
    log,
    matmul,
    mean,
    relu,
    sigmoid,
    softmax,
    stop_gradient,
    take,
    tsum,
)


def leaf(data) -> Tensor:
    return Tensor(data, requires_grad=True)


class PrimitiveTests(SimpleTestCase):
    def test_broadcast_add_unbroadcasts_gradient(self):
        a = leaf(np.ones((3, 2)))
        b = leaf(np.array([1.0, 2.0]))
        tsum(a + b).backward()
        np.testing.assert_allclose(a.grad, np.ones((3, 2)))
        np.testing.assert_allclose(b.grad, [3.0, 3.0])

    def test_shape_mismatch_raises(self):
        with self.assertRaises(ShapeError):
            Tensor(np.ones((2, 3))) + Tensor(np.ones((4,)))
        with self.assertRaises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_log_of_non_positive_raises(self):
        with self.assertRaises(NumericDomainError):
            log(Tensor([1.0, 0.0]))

    def test_sigmoid_is_stable_at_extremes(self):
        out = sigmoid(Tensor([-800.0, 0.0, 800.0])).numpy()
        self.assertEqual(out[1], 0.5)
        self.assertTrue(np.all(np.isfinite(out)))
        self.assertAlmostEqual(out[2], 1.0)

    def test_clamp_prob_bounds(self):
        out = clamp_prob(Tensor([0.0, 0.5, 1.0])).numpy()
        np.testing.assert_allclose(out, [PROB_EPS, 0.5, 1.0 - PROB_EPS])

    def test_elementwise_dispatch(self):
        out = elementwise("mul", Tensor(2.0), Tensor(3.0))
        self.assertEqual(out.item(), 6.0)
        with self.assertRaises(ArgumentError):
            elementwise("tanh", Tensor(1.0))

    def test_mean_of_empty_raises(self):
        with self.assertRaises(ArgumentError):
            mean(Tensor(np.zeros((0,))))

    def test_backward_needs_scalar(self):
        with self.assertRaises(ArgumentError):
            leaf(np.ones(3)).backward()

    def test_repeated_backward_accumulates(self):
        x = leaf(2.0)
        (x * x).backward()
        (x * x).backward()
        self.assertEqual(float(x.grad), 8.0)

    def test_shared_subexpression_counts_both_paths(self):
        x = leaf(3.0)
        y = x * 2.0
        (y + y).backward()
        self.assertEqual(float(x.grad), 4.0)

    def test_concat_splits_gradient(self):
        a, b = leaf(np.ones((2, 1))), leaf(np.ones((2, 3)))
        out = concat([a, b], axis=-1)
        self.assertEqual(out.shape, (2, 4))
        tsum(out * np.arange(4.0)).backward()
        np.testing.assert_allclose(a.grad, [[0.0], [0.0]])
        np.testing.assert_allclose(b.grad, [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])

    def test_take_scatters_back(self):
        x = leaf(np.arange(4.0))
        tsum(take(x, np.array([1, 1, 3]))).backward()
        np.testing.assert_allclose(x.grad, [0.0, 2.0, 0.0, 1.0])


class GatherRowsTests(SimpleTestCase):
    def test_duplicate_ids_accumulate(self):
        table = leaf(np.arange(6.0).reshape(3, 2))
        out = gather_rows(table, np.array([[2, 2], [0, 1]]))
        self.assertEqual(out.shape, (2, 2, 2))
        tsum(out).backward()
        np.testing.assert_allclose(table.grad, [[1, 1], [1, 1], [2, 2]])

    def test_out_of_range_id_raises(self):
        with self.assertRaises(VocabularyError):
            gather_rows(leaf(np.zeros((3, 2))), np.array([3]))

    def test_float_ids_rejected(self):
        with self.assertRaises(ArgumentError):
            gather_rows(leaf(np.zeros((3, 2))), np.array([1.0]))


class SoftmaxTests(SimpleTestCase):
    def test_rows_sum_to_one_and_shift_invariant(self):
        x = np.array([[1.0, 2.0, 3.0], [1000.0, 1001.0, 1002.0]])
        out = softmax(Tensor(x)).numpy()
        np.testing.assert_allclose(out.sum(axis=-1), [1.0, 1.0])
        np.testing.assert_allclose(out[0], out[1])

    def test_mask_zeroes_padding(self):
        x = Tensor([[5.0, 1.0, 9.0], [0.0, 0.0, 0.0]])
        mask = np.array([[True, True, False], [False, False, False]])
        out = softmax(x, mask=mask).numpy()
        self.assertEqual(out[0, 2], 0.0)
        self.assertAlmostEqual(out[0].sum(), 1.0)
        np.testing.assert_array_equal(out[1], [0.0, 0.0, 0.0])

    def test_empty_input_raises(self):
        with self.assertRaises(ArgumentError):
            softmax(Tensor(np.zeros((2, 0))))


class StopGradientTests(SimpleTestCase):
    def test_forward_identity_no_backward(self):
        x = leaf([0.3, 0.6])
        y = stop_gradient(x * 2.0)
        np.testing.assert_allclose(y.numpy(), [0.6, 1.2])
        self.assertFalse(y.requires_grad)
        loss = tsum(x + y)
        loss.backward()
        np.testing.assert_allclose(x.grad, [1.0, 1.0])


class GradCheckTests(SimpleTestCase):
    def test_smooth_composite_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        w = leaf(rng.normal(size=(4, 3)))
        b = leaf(rng.normal(size=3))
        x = Tensor(rng.normal(size=(5, 4)))
        y = rng.integers(0, 2, size=(5, 3)).astype(float)

        def loss():
            p = clamp_prob(sigmoid(matmul(x, w) + b))
            return mean(-(y * log(p) + (1.0 - y) * log(1.0 - p)))

        result = check_gradients(loss, {"w": w, "b": b})
        self.assertGreater(result.checked, 0)
        self.assertLess(result.max_rel_error, 1e-5)

    def test_masked_softmax_attention(self):
        rng = np.random.default_rng(1)
        scores = leaf(rng.normal(size=(2, 4)))
        values = leaf(rng.normal(size=(2, 4)))
        mask = np.array([[True, True, True, False], [True, False, False, False]])

        def loss():
            return tsum(softmax(scores, mask=mask) * values)

        result = check_gradients(loss, [scores, values])
        self.assertLess(result.max_rel_error, 1e-5)

    def test_mlp_kinks_are_skipped_not_failed(self):
        rng = np.random.default_rng(2)
        mlp = MLP([3, 4, 1], rng, final_activation=False)
        x = Tensor(rng.normal(size=(6, 3)))

        result = check_gradients(lambda: mean(mlp(x)), dict(mlp.named_parameters()))
        self.assertLess(result.max_rel_error, 1e-4)
        self.assertLess(result.skipped_fraction, 0.5)

    def test_kink_on_the_evaluation_point_is_skipped(self):
        x = leaf(np.array([0.0, 1.5, -2.0]))

        result = check_gradients(lambda: tsum(relu(x)), {"x": x})
        self.assertEqual((result.checked, result.skipped), (2, 1))
        self.assertLess(result.max_rel_error, 1e-8)

    def test_sampled_coordinates(self):
        w = leaf(np.random.default_rng(4).normal(size=(6, 5)))

        result = check_gradients(
            lambda: tsum(w * w), {"w": w}, sample=7, rng=np.random.default_rng(0)
        )
        self.assertEqual(result.checked + result.skipped, 7)
        self.assertLess(result.max_rel_error, 1e-6)


class ModuleTests(SimpleTestCase):
    def test_linear_keeps_leading_axes(self):
        layer = Linear(3, 2, np.random.default_rng(0))
        self.assertEqual(layer(Tensor(np.ones((4, 5, 3)))).shape, (4, 5, 2))
        self.assertEqual(layer.parameter_count(), 3 * 2 + 2)

    def test_state_dict_roundtrip(self):
        a = MLP([3, 4, 1], np.random.default_rng(0))
        b = MLP([3, 4, 1], np.random.default_rng(9))
        b.load_state_dict(a.state_dict())
        for (na, pa), (nb, pb) in zip(a.named_parameters(), b.named_parameters()):
            self.assertEqual(na, nb)
            np.testing.assert_array_equal(pa.data, pb.data)


class AdamTests(SimpleTestCase):
    def test_minimizes_quadratic(self):
        x = leaf([3.0, -2.0])
        opt = Adam([x], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            tsum(x * x).backward()
            opt.step()
        np.testing.assert_allclose(x.data, [0.0, 0.0], atol=1e-2)

    def test_unused_parameter_untouched(self):
        used, unused = leaf([1.0]), leaf([1.0])
        opt = Adam([used, unused, used], lr=0.1, weight_decay=0.1)
        self.assertEqual(len(opt.params), 2)
        tsum(used * used).backward()
        opt.step()
        np.testing.assert_array_equal(unused.data, [1.0])
        self.assertLess(used.data[0], 1.0)

    def test_rejects_bad_learning_rate(self):
        with self.assertRaises(ArgumentError):
            Adam([leaf(1.0)], lr=0.0)
