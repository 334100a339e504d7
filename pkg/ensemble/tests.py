import math

import numpy as np
from django.test import SimpleTestCase  # pyright: ignore[reportMissingModuleSource]

from autodiff.gradcheck import check_gradients
from autodiff.nn import MLP
from autodiff.tensor import Tensor, tsum
from core.errors import ConfigError, ShapeError
from features.schema import DenseField, FeatureSchema, SequenceField, SparseField
from features.synthetic import SyntheticSpec, gen_synthetic

from .components import (
    ComponentConfig,
    CrossLayer,
    HierEnsemble,
    Projection,
    attend,
    build_component,
    flat_width,
    masked_mean_pool,
)
from .embedding_bank import EmbeddingBank
from .fusion import (
    FusionConfig,
    Readout,
    bce,
    binary_entropy,
    confidence,
    confidence_fusion,
    fuse,
    fusion_weights,
    pairwise_kl,
    symmetric_kl,
    total_objective,
)
from .network import EnsembleNetwork


def small_schema() -> FeatureSchema:
    return FeatureSchema(
        sparse=(SparseField("user_id", 9), SparseField("item", 15), SparseField("shop", 5)),
        dense=(DenseField("price"), DenseField("age")),
        sequence=(SequenceField("history", 15, 5, share_embedding="item"),),
        target_field="item",
    )


def small_dataset(n: int = 64):
    return gen_synthetic(SyntheticSpec(schema=small_schema(), n_samples=n, seed=11))


def pair() -> list[ComponentConfig]:
    return [
        ComponentConfig("tower", "mlp_tower", embed_dim=4, d_out=6, hidden=8),
        ComponentConfig("attn", "seq_attention", embed_dim=4, d_out=6, hidden=8, att_hidden=4),
    ]


def zero_module(module) -> None:
    for p in module.parameters():
        p.data = np.zeros_like(p.data)


def randomize(module, rng: np.random.Generator, scale: float = 0.3) -> None:
    """Random weights, biases and embedding rows (biases start at zero otherwise)."""
    for p in module.parameters():
        p.data = rng.normal(0.0, scale, size=p.shape)


def grads_or_zeros(module) -> list[np.ndarray]:
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in module.parameters()]


class EntropyAndWeightTests(SimpleTestCase):
    def test_entropy_at_half_is_ln2(self):
        self.assertAlmostEqual(binary_entropy(Tensor(0.5)).item(), math.log(2), places=12)

    def test_entropy_near_certain(self):
        self.assertAlmostEqual(binary_entropy(Tensor(1 - 1e-7)).item(), 1.7118e-6, delta=1e-9)

    def test_entropy_symmetric(self):
        p = np.array([0.1, 0.3, 0.77])
        np.testing.assert_allclose(
            binary_entropy(Tensor(p)).numpy(), binary_entropy(Tensor(1 - p)).numpy()
        )

    def test_confidence_is_negative_entropy(self):
        self.assertAlmostEqual(confidence(Tensor(0.5)).item(), -math.log(2))

    def test_two_component_weights(self):
        w = fusion_weights(Tensor([[-0.5, -0.7]])).numpy()[0]
        np.testing.assert_allclose(w, [0.549834, 0.450166], atol=1e-6)

    def test_equal_confidences_equal_weights(self):
        w = fusion_weights(Tensor(np.full((3, 4), -0.2))).numpy()
        np.testing.assert_allclose(w, np.full((3, 4), 0.25))

    def test_more_decisive_component_weighs_more(self):
        cfg = FusionConfig(mode="weighted_sum", d_proj=2)
        readout = Readout(2, np.random.default_rng(0))
        preds = [Tensor([0.9, 0.45]), Tensor([0.6, 0.02])]
        projected = [Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2)))]
        w = confidence_fusion(cfg, preds, projected, readout).weights.numpy()
        np.testing.assert_allclose(w.sum(axis=1), [1.0, 1.0], atol=1e-12)
        self.assertGreater(w[0, 0], w[0, 1])
        self.assertLess(w[1, 0], w[1, 1])

    def test_random_weight_invariants(self):
        rng = np.random.default_rng(21)
        p = rng.uniform(1e-4, 1 - 1e-4, size=(1000, 2))
        conf = np.stack([confidence(Tensor(p[:, m])).numpy() for m in range(2)], axis=1)
        w = fusion_weights(Tensor(conf)).numpy()

        self.assertTrue(np.all(w > 0))
        np.testing.assert_allclose(w.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        first_more_decisive = np.abs(p[:, 0] - 0.5) > np.abs(p[:, 1] - 0.5)
        np.testing.assert_array_equal(w[:, 0] > w[:, 1], first_more_decisive)

        equal = fusion_weights(Tensor(np.repeat(conf[:, :1], 3, axis=1))).numpy()
        np.testing.assert_allclose(equal, 1.0 / 3.0, rtol=0, atol=1e-12)


class FuseTests(SimpleTestCase):
    def setUp(self):
        self.e1 = Tensor([[1.0, 2.0], [3.0, 4.0]])
        self.e2 = Tensor([[5.0, 6.0], [7.0, 8.0]])

    def test_degenerate_weight_sum_returns_first(self):
        w = Tensor([[1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(fuse([self.e1, self.e2], w, "weighted_sum").numpy(), self.e1.numpy())

    def test_equal_weight_concat_halves(self):
        w = Tensor(np.full((2, 2), 0.5))
        out = fuse([self.e1, self.e2], w, "weighted_concat").numpy()
        self.assertEqual(out.shape, (2, 4))
        np.testing.assert_allclose(out[:, :2], 0.5 * self.e1.numpy())
        np.testing.assert_allclose(out[:, 2:], 0.5 * self.e2.numpy())

    def test_plain_concat_ignores_weights(self):
        out = fuse([self.e1, self.e2], None, "plain_concat").numpy()
        np.testing.assert_allclose(out, np.hstack([self.e1.numpy(), self.e2.numpy()]))

    def test_width_mismatch(self):
        with self.assertRaises(ShapeError):
            fuse([self.e1, Tensor(np.ones((2, 3)))], Tensor(np.full((2, 2), 0.5)), "weighted_sum")

    def test_zero_readout_gives_half(self):
        readout = Readout(4, np.random.default_rng(0), zero_init=True)
        np.testing.assert_allclose(readout(Tensor(np.ones((3, 4)))).numpy(), [0.5] * 3)

    def test_unknown_mode_config(self):
        with self.assertRaises(ConfigError):
            FusionConfig(mode="average")


class LossTests(SimpleTestCase):
    def test_bce_values(self):
        self.assertAlmostEqual(bce(Tensor([0.8]), [0.0]).item(), 1.609438, places=6)
        self.assertAlmostEqual(bce(Tensor([0.5, 0.5]), [0.0, 1.0]).item(), math.log(2))

    def test_bce_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            bce(Tensor([0.5, 0.5]), [1.0])

    def test_symmetric_kl_closed_form(self):
        def kl(p, q):
            return p * math.log(p / q) + (1 - p) * math.log((1 - p) / (1 - q))

        expected = 0.5 * kl(0.8, 0.6) + 0.5 * kl(0.6, 0.8)
        got = symmetric_kl(Tensor([0.8]), Tensor([0.6])).item()
        self.assertAlmostEqual(got, expected, places=12)
        self.assertAlmostEqual(symmetric_kl(Tensor([0.6]), Tensor([0.8])).item(), got, places=15)

    def test_symmetric_kl_random_pairs(self):
        def kl(p, q):
            return p * math.log(p / q) + (1 - p) * math.log((1 - p) / (1 - q))

        rng = np.random.default_rng(5)
        for p, q in rng.uniform(1e-3, 1 - 1e-3, size=(100, 2)):
            got = symmetric_kl(Tensor([p]), Tensor([q])).item()
            self.assertGreaterEqual(got, 0.0)
            self.assertAlmostEqual(got, 0.5 * kl(p, q) + 0.5 * kl(q, p), delta=1e-10)
            self.assertAlmostEqual(symmetric_kl(Tensor([q]), Tensor([p])).item(), got, delta=1e-12)

    def test_identical_predictions_no_kl(self):
        p = Tensor([0.3, 0.9])
        self.assertAlmostEqual(symmetric_kl(p, p).item(), 0.0, places=12)
        self.assertEqual(pairwise_kl([p]).item(), 0.0)

    def test_total_objective_arithmetic(self):
        total = total_objective(Tensor(1.0), [Tensor(0.2), Tensor(0.3)], Tensor(0.4), 0.5)
        self.assertAlmostEqual(total.item(), 1.7)
        no_kl = total_objective(Tensor(1.0), [Tensor(0.2), Tensor(0.3)], Tensor(0.4), 0.0)
        self.assertAlmostEqual(no_kl.item(), 1.5)


class BuildingBlockTests(SimpleTestCase):
    def test_cross_layer_hand_value(self):
        layer = CrossLayer(1, np.random.default_rng(0))
        layer.linear.weight.data = np.array([[1.0]])
        layer.linear.bias.data = np.array([0.0])
        x0 = Tensor([[2.0]])
        self.assertEqual(layer(x0, x0).item(), 6.0)

    def test_zero_cross_layer_is_identity(self):
        layer = CrossLayer(3, np.random.default_rng(0))
        zero_module(layer)
        x0 = Tensor(np.arange(6.0).reshape(2, 3))
        np.testing.assert_allclose(layer(x0, x0).numpy(), x0.numpy())

    def test_single_valid_position_takes_all_weight(self):
        scorer = MLP([6, 4, 1], np.random.default_rng(0), final_activation=False)
        history = Tensor(np.random.default_rng(1).normal(size=(1, 3, 2)))
        context, weights = attend(scorer, history, Tensor([[1.0, -1.0]]), np.array([1]))
        np.testing.assert_allclose(weights.numpy(), [[1.0, 0.0, 0.0]])
        np.testing.assert_allclose(context.numpy(), history.numpy()[:, 0])

    def test_uniform_scores_pool_to_mean(self):
        scorer = MLP([6, 4, 1], np.random.default_rng(0), final_activation=False)
        zero_module(scorer)
        hist = np.random.default_rng(2).normal(size=(1, 5, 2))
        context, _ = attend(scorer, Tensor(hist), Tensor([[0.3, 0.1]]), np.array([4]))
        np.testing.assert_allclose(context.numpy(), hist[:, :4].mean(axis=1))

    def test_padding_positions_do_not_leak(self):
        scorer = MLP([6, 4, 1], np.random.default_rng(0), final_activation=False)
        hist = np.random.default_rng(3).normal(size=(2, 4, 2))
        other = hist.copy()
        other[:, 2:] = 99.0
        lengths = np.array([2, 1])
        a, _ = attend(scorer, Tensor(hist), Tensor(np.ones((2, 2))), lengths)
        b, _ = attend(scorer, Tensor(other), Tensor(np.ones((2, 2))), lengths)
        np.testing.assert_allclose(a.numpy(), b.numpy())

    def test_empty_sequence_pools_to_zero(self):
        seq = Tensor(np.ones((1, 2, 3, 4)))
        pooled = masked_mean_pool(seq, np.array([[0, 3]])).numpy()
        np.testing.assert_array_equal(pooled[0, 0], np.zeros(4))
        np.testing.assert_allclose(pooled[0, 1], np.ones(4))

    def test_flat_width(self):
        schema = FeatureSchema(
            sparse=tuple(SparseField(f"f{i}", 3) for i in range(4)),
            sequence=(SequenceField("a", 3, 2), SequenceField("b", 3, 2)),
        )
        self.assertEqual(flat_width(schema, 8), 56)

    def test_zero_hier_projection_is_residual_identity(self):
        cfg = ComponentConfig("hier", "hier_ensemble", embed_dim=2, hidden=4)
        block = HierEnsemble(cfg, small_schema(), np.random.default_rng(0))
        for proj in block.projs:
            zero_module(proj)
        z = Tensor(np.random.default_rng(4).normal(size=(3, flat_width(small_schema(), 2))))
        np.testing.assert_allclose(block.blocks(z).numpy(), z.numpy())

    def test_identity_projection(self):
        proj = Projection(3, 3, np.random.default_rng(0), identity_init=True)
        x = Tensor(np.arange(6.0).reshape(2, 3))
        np.testing.assert_allclose(proj(x).numpy(), x.numpy())
        with self.assertRaises(ConfigError):
            Projection(3, 4, np.random.default_rng(0), identity_init=True)


class ComponentConfigTests(SimpleTestCase):
    def test_unknown_kind(self):
        with self.assertRaises(ConfigError):
            ComponentConfig("x", "transformer")

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            ComponentConfig.from_dict({"name": "x", "kind": "linear", "heads": 4})

    def test_seq_attention_needs_sequence(self):
        schema = FeatureSchema(sparse=(SparseField("item", 5),))
        cfg = ComponentConfig("attn", "seq_attention")
        with self.assertRaises(ConfigError):
            build_component(cfg, schema, np.random.default_rng(0))

    def test_every_kind_produces_shapes(self):
        ds = small_dataset(8)
        batch = ds.full_batch()
        for kind in ("mlp_tower", "cross_net", "seq_attention", "hier_ensemble", "linear"):
            with self.subTest(kind=kind):
                cfg = ComponentConfig(kind, kind, embed_dim=3, d_out=5, hidden=6, att_hidden=4)
                net = EnsembleNetwork(small_schema(), [cfg], FusionConfig(d_proj=5))
                out = net(batch).components[kind]
                self.assertEqual(out.embedding.shape, (8, 5))
                self.assertTrue(np.all((out.prediction.numpy() > 0) & (out.prediction.numpy() < 1)))


class EmbeddingBankTests(SimpleTestCase):
    def test_multi_tables_are_disjoint(self):
        bank = EmbeddingBank(small_schema(), {"a": 4, "b": 4}, mode="multi")
        self.assertIsNot(bank.table("a"), bank.table("b"))
        self.assertEqual(bank.table_parameter_count(), 2 * bank.table("a").size)

    def test_one_component_loss_leaves_other_bank_untouched(self):
        net = EnsembleNetwork(small_schema(), pair(), FusionConfig(d_proj=4), seed=5)
        batch = small_dataset(32).batch(np.arange(16))
        out = net(batch)
        bce(out.components["attn"].prediction, batch.labels).backward()

        tower = net.bank.components["tower"]
        for name, p in [("table", tower.table), *tower.dense_mlp.named_parameters()]:
            with self.subTest(param=name):
                self.assertTrue(p.grad is None or not np.any(p.grad))
        attn = net.bank.components["attn"]
        self.assertTrue(np.any(attn.table.grad))
        self.assertTrue(any(np.any(g) for g in grads_or_zeros(attn.dense_mlp)))

    def test_shared_mode_one_table(self):
        bank = EmbeddingBank(small_schema(), {"a": 4, "b": 4}, mode="shared")
        self.assertIs(bank.table("a"), bank.table("b"))
        self.assertEqual(bank.table_parameter_count(), bank.table("a").size)
        with self.assertRaises(ConfigError):
            EmbeddingBank(small_schema(), {"a": 4, "b": 8}, mode="shared")

    def test_lookup_shapes_and_padding_rows(self):
        bank = EmbeddingBank(small_schema(), {"a": 8})
        batch = small_dataset(2).full_batch()
        seqs, lengths = bank.lookup_sequence("a", batch)
        self.assertEqual(seqs.shape, (2, 1, 5, 8))
        table = bank.table("a").numpy()
        item_pad = table[1 + 9]
        for r in range(2):
            for t in range(int(lengths[r, 0]), 5):
                np.testing.assert_array_equal(seqs.numpy()[r, 0, t], item_pad)

    def test_unknown_component(self):
        bank = EmbeddingBank(small_schema(), {"a": 4})
        with self.assertRaises(ConfigError):
            bank.table("b")

    def test_scale_dims(self):
        bank = EmbeddingBank(small_schema(), {"a": 10})
        scaled = bank.scale_dims(4)
        self.assertEqual(scaled.dims, {"a": 40})
        self.assertEqual(bank.scale_dims(1).dims, {"a": 10})


class NetworkTests(SimpleTestCase):
    def setUp(self):
        self.batch = small_dataset(32).batch(np.arange(16))

    def build(self, components=None, **fusion):
        return EnsembleNetwork(
            small_schema(), components or pair(), FusionConfig(d_proj=4, **fusion), seed=5
        )

    def test_same_seed_same_predictions(self):
        a = self.build()(self.batch).prediction.numpy()
        b = self.build()(self.batch).prediction.numpy()
        np.testing.assert_array_equal(a, b)

    def test_loss_is_sum_of_parts(self):
        breakdown = self.build(alpha=0.5).loss(self.batch)
        parts = breakdown.as_floats()
        expected = parts["fusion"] + sum(parts["components"].values()) + 0.5 * parts["kl"]
        self.assertAlmostEqual(parts["final"], expected, places=10)

    def test_single_component_has_no_fusion(self):
        net = self.build(components=pair()[:1])
        out = net(self.batch)
        self.assertIsNone(out.fusion)
        self.assertEqual(net.projections, {})
        parts = net.loss(self.batch).as_floats()
        self.assertAlmostEqual(parts["final"], parts["components"]["tower"])

    def weight_gradients(self, use_gradient_stop: bool) -> tuple[np.ndarray, list[np.ndarray]]:
        net = self.build(use_gradient_stop=use_gradient_stop)
        weights = net(self.batch).fusion.weights
        coef = np.random.default_rng(9).normal(size=weights.shape)
        tsum(weights * coef).backward()
        return weights.numpy(), grads_or_zeros(net)

    def test_gradient_stop_zeroes_weight_gradients(self):
        stopped, stopped_grads = self.weight_gradients(True)
        flowing, flowing_grads = self.weight_gradients(False)
        self.assertTrue(all(not np.any(g) for g in stopped_grads))
        self.assertGreater(max(float(np.abs(g).max()) for g in flowing_grads), 1e-8)
        np.testing.assert_allclose(stopped, flowing)

    def test_plain_concat_reports_uniform_weights(self):
        fusion = self.build(mode="plain_concat", use_confidence=False)(self.batch).fusion
        np.testing.assert_allclose(fusion.weights.numpy(), np.full((16, 2), 0.5))

    def test_backward_reaches_every_table(self):
        net = self.build()
        net.loss(self.batch).total.backward()
        for name in net.names:
            self.assertIsNotNone(net.bank.table(name).grad)

    def test_readout_gradients_match_finite_differences(self):
        net = self.build(alpha=0.3)
        params = dict(net.readout.named_parameters())
        result = check_gradients(lambda: net.loss(self.batch).total, params)
        self.assertLess(result.max_rel_error, 1e-5)

    def test_predict_covers_dataset(self):
        ds = small_dataset(21)
        fused, per = self.build().predict(ds, batch_size=8)
        self.assertEqual(fused.shape, (21,))
        self.assertEqual(set(per), {"tower", "attn"})

    def test_duplicate_component_names(self):
        with self.assertRaises(ConfigError):
            self.build(components=[pair()[0], pair()[0]])

    def test_parameter_counts(self):
        net = self.build()
        counts = net.parameter_counts()
        self.assertGreater(counts["total"], counts["embedding"])
        tables = sum(net.bank.table(name).size for name in net.names)
        self.assertEqual(counts["embedding"], tables)


class GradientCheckTests(SimpleTestCase):
    """Analytical gradients of whole networks against central differences."""

    INSTANCES = 20

    def instances(self):
        ds = small_dataset(200)
        for i in range(self.INSTANCES):
            rng = np.random.default_rng(100 + i)
            yield i, rng, ds.batch(rng.choice(len(ds), size=6, replace=False))

    def assert_matches(self, net: EnsembleNetwork, batch, rng: np.random.Generator):
        randomize(net, rng)
        result = check_gradients(
            lambda: net.loss(batch).total,
            dict(net.named_parameters()),
            sample=2,
            rng=rng,
        )
        self.assertGreater(result.checked, 0)
        self.assertLessEqual(result.max_rel_error, 1e-4, result.worst)

    def test_component_kinds(self):
        for kind in ("mlp_tower", "cross_net", "seq_attention", "hier_ensemble"):
            cfg = ComponentConfig(kind, kind, embed_dim=3, d_out=4, hidden=5, att_hidden=3)
            for i, rng, batch in self.instances():
                with self.subTest(kind=kind, instance=i):
                    net = EnsembleNetwork(small_schema(), [cfg], FusionConfig(d_proj=4), seed=i)
                    self.assert_matches(net, batch, rng)

    def test_fused_objective(self):
        for i, rng, batch in self.instances():
            mode = ("weighted_concat", "weighted_sum")[i % 2]
            fusion = FusionConfig(mode=mode, d_proj=4, alpha=0.5, use_gradient_stop=False)
            with self.subTest(mode=mode, instance=i):
                net = EnsembleNetwork(small_schema(), pair(), fusion, seed=i)
                self.assert_matches(net, batch, rng)
