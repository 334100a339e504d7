import csv
import io
import json
import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.conf import settings  # pyright: ignore[reportMissingModuleSource]
from django.core.management import call_command  # pyright: ignore[reportMissingModuleSource]
from django.core.management.base import CommandError  # pyright: ignore[reportMissingModuleSource]
from django.test import SimpleTestCase, TestCase, override_settings, tag  # pyright: ignore[reportMissingModuleSource]
from django.urls import reverse  # pyright: ignore[reportMissingModuleSource]

from autodiff.optim import Adam
from core.errors import ArgumentError, CheckpointError, ConfigError, DivergenceError
from ensemble.components import ComponentConfig
from ensemble.fusion import FusionConfig
from features.batching import n_batches
from features.csv_io import load_csv, write_csv
from features.schema import DenseField, FeatureSchema, SequenceField, SparseField
from features.synthetic import SyntheticSpec, gen_synthetic

from .ablation import (
    VARIANTS,
    ablation_rows,
    ablation_summary,
    apply_variant,
    parse_variants,
    run_ablations,
)
from .checkpoint import build_network, load_checkpoint, restore_network, save_checkpoint
from .config import DataConfig, OptimizerConfig, TrainConfig, load_config
from .models import Run
from .records import RunRecord, read_jsonl, save_run, summarize_seeds
from .studies import component_study, component_study_summary, ne_study_configs
from .sweep import SWEEP_MODES, scale_sweep, sweep_config, sweep_rows, sweep_summary
from .trainer import curve_steps, evaluate, one_epoch, train, train_step

TINY_TOML = """
name = "tiny"
seed = 3
batch_size = 64
epochs = 2
curve_cadence = 2

[data]
split = [0.5, 0.25, 0.25]

[data.synthetic]
n_samples = 320
seed = 3
base_rate = 0.35

[schema]
target_field = "item"

[[schema.sparse]]
name = "user_id"
cardinality = 6

[[schema.sparse]]
name = "item"
cardinality = 31

[[schema.sparse]]
name = "shop"
cardinality = 7

[[schema.dense]]
name = "price"

[[schema.sequence]]
name = "history"
vocab_size = 31
max_len = 4
share_embedding = "item"

[fusion]
d_proj = 4

[[components]]
name = "tower"
kind = "mlp_tower"
embed_dim = 4
d_out = 4
hidden = 8

[[components]]
name = "attn"
kind = "seq_attention"
embed_dim = 4
d_out = 4
hidden = 8
att_hidden = 4
"""


def tiny_schema() -> FeatureSchema:
    return FeatureSchema(
        sparse=(SparseField("user_id", 6), SparseField("item", 31), SparseField("shop", 7)),
        dense=(DenseField("price"),),
        sequence=(SequenceField("history", 31, 4, share_embedding="item"),),
        target_field="item",
    )


def tiny_config(**changes) -> TrainConfig:
    schema = tiny_schema()
    spec = SyntheticSpec(schema=schema, n_samples=320, seed=3, base_rate=0.35)
    cfg = TrainConfig(
        data=DataConfig(schema=schema, synthetic=spec, split=(0.5, 0.25, 0.25)),
        components=(
            ComponentConfig("tower", "mlp_tower", embed_dim=4, d_out=4, hidden=8),
            ComponentConfig(
                "attn", "seq_attention", embed_dim=4, d_out=4, hidden=8, att_hidden=4
            ),
        ),
        fusion=FusionConfig(d_proj=4),
        name="tiny",
        seed=3,
        batch_size=64,
        epochs=2,
        curve_cadence=2,
    )
    return replace(cfg, **changes)


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class ConfigTests(TempDirMixin, SimpleTestCase):
    def test_toml_matches_python_config(self):
        path = self.tmp / "tiny.toml"
        path.write_text(TINY_TOML, encoding="utf-8")
        cfg = load_config(path)
        self.assertEqual(cfg, tiny_config())
        self.assertEqual(cfg.config_hash(), tiny_config().config_hash())

    def test_dict_roundtrip_keeps_hash(self):
        cfg = tiny_config()
        again = TrainConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        self.assertEqual(again, cfg)
        self.assertEqual(len(cfg.config_hash()), 16)

    def test_hash_tracks_every_change(self):
        base = tiny_config().config_hash()
        self.assertNotEqual(base, tiny_config().with_fusion(alpha=0.1).config_hash())
        self.assertNotEqual(base, tiny_config().with_seed(4).config_hash())

    def test_unknown_keys_rejected(self):
        raw = tiny_config().to_dict()
        raw["learning_rate"] = 0.1
        with self.assertRaises(ConfigError):
            TrainConfig.from_dict(raw)
        raw = tiny_config().to_dict()
        raw["fusion"]["temperature"] = 2.0
        with self.assertRaises(ConfigError):
            TrainConfig.from_dict(raw)

    def test_exactly_one_data_source(self):
        spec = SyntheticSpec(schema=tiny_schema(), n_samples=10)
        with self.assertRaises(ConfigError):
            DataConfig(schema=tiny_schema(), csv="rows.csv", synthetic=spec)
        with self.assertRaises(ConfigError):
            DataConfig(schema=tiny_schema())

    def test_csv_path_relative_to_config(self):
        path = self.tmp / "cfg" / "run.toml"
        path.parent.mkdir()
        text = TINY_TOML.replace(
            "[data.synthetic]\nn_samples = 320\nseed = 3\nbase_rate = 0.35\n",
            "",
        ).replace('[data]\n', '[data]\ncsv = "../rows.csv"\n')
        path.write_text(text, encoding="utf-8")
        cfg = load_config(path)
        self.assertEqual(Path(cfg.data.csv), path.parent / "../rows.csv")

    def test_missing_seed_falls_back_to_default(self):
        path = self.tmp / "unseeded.toml"
        path.write_text(TINY_TOML.replace("seed = 3\n", "", 1), encoding="utf-8")
        with override_settings(LAB_DEFAULT_SEED=11):
            cfg = load_config(path)
        self.assertEqual(cfg.seed, 11)
        self.assertEqual(cfg.data.synthetic.seed, 3)

    def test_shipped_configs_load(self):
        paths = sorted((settings.BASE_DIR / "configs").glob("*.toml"))
        self.assertTrue(paths)
        for path in paths:
            with self.subTest(config=path.name):
                self.assertTrue(load_config(path).components)

    def test_cetnet_config(self):
        cfg = load_config(settings.BASE_DIR / "configs" / "cetnet.toml")
        self.assertEqual([c.kind for c in cfg.components], ["cross_net", "seq_attention"])
        self.assertEqual({c.embed_dim for c in cfg.components}, {16})
        self.assertEqual(cfg.fusion.alpha, 0.5)
        self.assertGreaterEqual(cfg.data.synthetic.n_samples, 100_000)

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            tiny_config(epochs=0)
        with self.assertRaises(ConfigError):
            OptimizerConfig(lr=0.0)
        with self.assertRaises(ConfigError):
            tiny_config(bank_mode="pooled")
        with self.assertRaises(ConfigError):
            load_config(self.tmp / "missing.toml")


class AblationTests(SimpleTestCase):
    def test_transforms(self):
        cfg = tiny_config()
        self.assertEqual(apply_variant(cfg, "full"), cfg)
        self.assertEqual(apply_variant(cfg, "no_kl").fusion.alpha, 0.0)
        self.assertEqual(apply_variant(cfg, "no_multi_embedding").bank_mode, "shared")
        self.assertFalse(apply_variant(cfg, "no_gradient_stop").fusion.use_gradient_stop)
        self.assertEqual(apply_variant(cfg, "no_confidence_fusion").fusion.mode, "plain_concat")

        single = apply_variant(cfg, "single_embedding_concat")
        self.assertEqual(single.bank_mode, "shared")
        self.assertEqual(single.fusion.mode, "plain_concat")
        self.assertFalse(single.fusion.weighted)
        self.assertEqual(single.fusion.alpha, 0.0)
        self.assertEqual(apply_variant(cfg, "multi_embedding_concat").bank_mode, "multi")

    def test_variants_have_distinct_hashes(self):
        cfg = tiny_config()
        hashes = {apply_variant(cfg, v).config_hash() for v in VARIANTS}
        self.assertEqual(len(hashes), len(VARIANTS))

    def test_rejections(self):
        with self.assertRaises(ArgumentError):
            apply_variant(tiny_config(), "no_dropout")
        with self.assertRaises(ConfigError):
            apply_variant(tiny_config().with_components(tiny_config().components[:1]), "no_kl")
        with self.assertRaises(ArgumentError):
            parse_variants("full,bogus")
        self.assertEqual(parse_variants("all"), list(VARIANTS))


class SweepTests(SimpleTestCase):
    def test_modes_shape_the_ensemble(self):
        cfg = tiny_config()
        se = sweep_config(cfg, "se", 4)
        self.assertEqual([c.embed_dim for c in se.components], [16])

        me = sweep_config(cfg, "me", 3)
        self.assertEqual([c.kind for c in me.components], ["mlp_tower"] * 3)
        self.assertEqual(me.fusion.mode, "plain_concat")
        self.assertFalse(me.fusion.component_losses)

        ours = sweep_config(cfg, "ours_sum", 3)
        self.assertEqual(
            [c.kind for c in ours.components], ["mlp_tower", "seq_attention", "mlp_tower"]
        )
        self.assertEqual(ours.fusion.mode, "weighted_sum")
        self.assertEqual(sweep_config(cfg, "ours_concat", 2).fusion.mode, "weighted_concat")

    def test_distinct_hashes(self):
        cfg = tiny_config()
        hashes = {sweep_config(cfg, m, k).config_hash() for m in SWEEP_MODES for k in (1, 2)}
        self.assertEqual(len(hashes), 2 * len(SWEEP_MODES))

    def test_se_and_me_match_in_table_size(self):
        cfg = tiny_config()
        for k in (1, 2):
            se = build_network(sweep_config(cfg, "se", k)).parameter_counts()
            me = build_network(sweep_config(cfg, "me", k)).parameter_counts()
            self.assertEqual(se["embedding"], me["embedding"])
        base_se = build_network(sweep_config(cfg, "se", 1)).parameter_counts()
        base_me = build_network(sweep_config(cfg, "me", 1)).parameter_counts()
        self.assertEqual(base_se, base_me)

    def test_bad_multiplier(self):
        with self.assertRaises(ArgumentError):
            sweep_config(tiny_config(), "se", 5)
        with self.assertRaises(ArgumentError):
            sweep_config(tiny_config(), "moe", 2)


class SeedSummaryTests(SimpleTestCase):
    def test_mean_and_std_per_group(self):
        nan = float("nan")
        rows = [
            {"variant": "full", "seed": 1, "auc": 0.70, "gauc": 0.60},
            {"variant": "full", "seed": 2, "auc": 0.74, "gauc": nan},
            {"variant": "no_kl", "seed": 1, "auc": 0.68, "gauc": nan},
        ]
        full, no_kl = summarize_seeds(rows, ("variant",), ("auc", "gauc"))
        self.assertEqual((full["variant"], full["seeds"]), ("full", 2))
        self.assertAlmostEqual(full["auc_mean"], 0.72, places=12)
        self.assertAlmostEqual(full["auc_std"], 0.02, places=12)
        self.assertEqual((full["gauc_mean"], full["gauc_std"]), (0.60, 0.0))
        self.assertEqual(no_kl["auc_std"], 0.0)
        self.assertTrue(math.isnan(no_kl["gauc_mean"]))
        self.assertTrue(math.isnan(no_kl["gauc_std"]))


class StudyConfigTests(SimpleTestCase):
    def test_ne_study_variants(self):
        variants = ne_study_configs(tiny_config())
        self.assertEqual(len(variants["baseline"].components), 1)
        self.assertEqual(variants["wide_1_5x"].components[0].embed_dim, 6)
        light = variants["plus_light_confidence"].components[1]
        self.assertEqual((light.name, light.embed_dim), ("attn_light", 2))
        self.assertEqual(variants["plus_light_concat"].fusion.mode, "plain_concat")


class CurveStepTests(SimpleTestCase):
    def test_cadence_plus_last(self):
        self.assertEqual(curve_steps(10, 3), [3, 6, 9, 10])
        self.assertEqual(curve_steps(9, 3), [3, 6, 9])
        self.assertEqual(curve_steps(2, 5), [2])
        self.assertEqual(curve_steps(0, 5), [])


class CheckpointTests(TempDirMixin, SimpleTestCase):
    def test_roundtrip_restores_predictions(self):
        cfg = tiny_config()
        network = build_network(cfg)
        path = save_checkpoint(network, cfg, self.tmp / "net.ckpt")
        loaded_cfg, state = load_checkpoint(path)
        self.assertEqual(loaded_cfg, cfg)
        self.assertEqual(set(state), set(network.state_dict()))

        _, restored = restore_network(path)
        ds = cfg.data.load()
        np.testing.assert_array_equal(restored.predict(ds)[0], network.predict(ds)[0])

    def test_bad_magic(self):
        path = self.tmp / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
        with self.assertRaises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_file(self):
        cfg = tiny_config()
        path = save_checkpoint(build_network(cfg), cfg, self.tmp / "net.ckpt")
        path.write_bytes(path.read_bytes()[:-10])
        with self.assertRaises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self):
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.tmp / "none.ckpt")


class TrainingTests(TempDirMixin, SimpleTestCase):
    def test_train_records_and_evaluate_agree(self):
        cfg = tiny_config()
        record = train(cfg, self.tmp)
        self.assertEqual(record.steps, 2 * 3)
        self.assertEqual([e["epoch"] for e in record.epochs], [1, 2])
        self.assertEqual(set(record.final), {"train", "val", "test"})
        self.assertEqual(record.headline_split, "test")
        self.assertTrue(Path(record.checkpoint).exists())
        self.assertEqual(set(record.effective_ranks), {"tower", "attn"})

        test_ds = cfg.data.load_splits(cfg.seed)[2]
        reports = evaluate(record.checkpoint, test_ds)
        for key in ("auc", "gauc", "logloss", "ne"):
            self.assertAlmostEqual(reports["fused"][key], record.final["test"]["fused"][key], places=10)

    def test_epoch_losses_are_consistent(self):
        record = train(tiny_config(epochs=1), self.tmp)
        losses = record.epochs[0]
        self.assertEqual(set(losses["components"]), {"tower", "attn"})
        self.assertGreater(losses["final"], losses["fusion"])

    def test_one_epoch_curve(self):
        cfg = tiny_config()
        record = one_epoch(cfg, self.tmp)
        train_ds = cfg.data.load_splits(cfg.seed)[0]
        self.assertEqual(record.steps, n_batches(train_ds, cfg.batch_size))
        self.assertEqual([p["step"] for p in record.curve], [2, 3])
        self.assertEqual(set(record.curve[0]["components"]), {"tower", "attn"})

    def test_users_without_both_labels_leave_gauc_missing(self):
        cfg = tiny_config(epochs=1)
        # One row per user, so no user can have both a click and a non-click.
        splits = tuple(
            replace(ds, user_ids=np.arange(len(ds), dtype=np.int64))
            for ds in cfg.data.load_splits(cfg.seed)
        )
        record = train(cfg, self.tmp, splits=splits)
        fused = record.final["val"]["fused"]
        self.assertIsNone(fused["gauc"])
        self.assertEqual(fused["users_scored"], 0)
        self.assertTrue(0.0 <= fused["auc"] <= 1.0)
        self.assertIsNone(record.evals[-1]["fused"]["gauc"])
        self.assertTrue(math.isnan(ablation_rows([record])[0]["gauc"]))

        record = one_epoch(cfg, self.tmp, splits=splits)
        self.assertIsNone(record.headline()["fused"]["gauc"])

    def test_same_seed_repeats_exactly(self):
        cfg = tiny_config()
        first = train(cfg, self.tmp / "a")
        second = train(cfg, self.tmp / "b")
        for split in first.final:
            for key in ("auc", "gauc", "logloss", "ne"):
                self.assertAlmostEqual(
                    first.final[split]["fused"][key],
                    second.final[split]["fused"][key],
                    delta=1e-12,
                )
        self.assertEqual(first.epochs, second.epochs)
        self.assertEqual(first.effective_ranks, second.effective_ranks)

    def test_evaluate_rejects_other_schema(self):
        cfg = tiny_config()
        path = save_checkpoint(build_network(cfg), cfg, self.tmp / "net.ckpt")
        other = SyntheticSpec(
            schema=replace(tiny_schema(), target_field=None), n_samples=40, seed=1
        )
        with self.assertRaises(ConfigError):
            evaluate(path, gen_synthetic(other))

    def test_non_finite_parameters_diverge(self):
        cfg = tiny_config()
        network = build_network(cfg)
        network.readout.linear.weight.data[:] = np.inf
        optimizer = Adam(network.parameters())
        batch = cfg.data.load().batch(np.arange(8))
        with self.assertRaises(DivergenceError) as ctx:
            train_step(network, optimizer, batch, 7)
        self.assertEqual(ctx.exception.batch_index, 7)

    @tag("slow")
    def test_ensemble_learns_planted_signal(self):
        schema = tiny_schema()
        spec = SyntheticSpec(schema=schema, n_samples=4000, seed=8)
        cfg = tiny_config(
            data=DataConfig(schema=schema, synthetic=spec, split=(0.8, 0.1, 0.1)),
            optimizer=OptimizerConfig(lr=1e-2),
            epochs=3,
            batch_size=128,
        )
        record = train(cfg, self.tmp)
        self.assertGreater(record.headline()["fused"]["auc"], 0.6)


def cetnet_config() -> TrainConfig:
    return load_config(settings.BASE_DIR / "configs" / "cetnet.toml")


class DirectionalTests(TempDirMixin, SimpleTestCase):
    """Seed-averaged comparisons on the shipped cetnet experiment."""

    # Two variants within this AUC of each other count as tied.
    tolerance = 5e-4

    @property
    def seeds(self) -> list[int]:
        return list(settings.LAB_DIRECTIONAL_SEEDS)

    @tag("slow")
    def test_fusion_beats_each_component_alone(self):
        _, rows = component_study(cetnet_config(), self.seeds, self.tmp)
        summary = component_study_summary(rows)
        self.assertEqual(len(summary), 2)
        fused = summary[0]["fused_auc_mean"]
        best_alone = max(row["standalone_auc_mean"] for row in summary)
        self.assertGreaterEqual(fused, best_alone)

    @tag("slow")
    def test_no_ablation_beats_full(self):
        records = run_ablations(cetnet_config(), VARIANTS, self.seeds, self.tmp)
        means = {row["variant"]: row["auc_mean"] for row in ablation_summary(ablation_rows(records))}
        self.assertEqual(set(means), set(VARIANTS))
        for variant, auc in means.items():
            with self.subTest(variant=variant):
                self.assertLessEqual(auc, means["full"] + self.tolerance)

    @tag("slow")
    def test_confidence_ensembles_beat_single_embedding_at_2x(self):
        records = scale_sweep(
            cetnet_config(), [2], ["se", "ours_sum", "ours_concat"], self.tmp, seeds=self.seeds
        )
        means = {row["mode"]: row["auc_mean"] for row in sweep_summary(sweep_rows(records))}
        self.assertGreaterEqual(means["ours_sum"], means["se"])
        self.assertGreaterEqual(means["ours_concat"], means["se"])

    @tag("slow")
    def test_training_repeats_exactly(self):
        cfg = cetnet_config()
        first = train(cfg, self.tmp / "a")
        second = train(cfg, self.tmp / "b")
        for split, ours in first.final.items():
            theirs = second.final[split]
            pairs = [(ours["fused"], theirs["fused"])] + [
                (ours["components"][name], theirs["components"][name])
                for name in ours["components"]
            ]
            for a, b in pairs:
                for key in ("auc", "gauc", "logloss", "ne"):
                    self.assertAlmostEqual(a[key], b[key], delta=1e-12)

    @tag("slow")
    def test_one_epoch_ne_falls(self):
        record = one_epoch(cetnet_config(), self.tmp)
        self.assertGreater(len(record.curve), 2)
        self.assertLess(record.curve[-1]["ne"], record.curve[0]["ne"])


def make_run(**fields) -> Run:
    defaults = {
        "kind": "one_epoch",
        "name": "tiny",
        "seed": 3,
        "config_hash": "0123456789abcdef",
        "summary": {"fused": {"auc": 0.71}},
        "record": {
            "curve": [
                {"step": 2, "ne": 0.95, "components": {"tower": 0.97, "attn": 0.99}},
                {"step": 3, "ne": 0.93, "components": {"tower": 0.96, "attn": 0.98}},
            ]
        },
    }
    return Run.objects.create(**{**defaults, **fields})


class RunViewTests(TestCase):
    def test_list_filters(self):
        make_run()
        make_run(kind="ablation", variant="no_kl")
        response = self.client.get(reverse("experiments:run_list"))
        self.assertEqual(len(response.json()["runs"]), 2)
        response = self.client.get(reverse("experiments:run_list"), {"variant": "no_kl"})
        runs = response.json()["runs"]
        self.assertEqual([r["kind"] for r in runs], ["ablation"])

    def test_detail(self):
        run = make_run()
        body = self.client.get(reverse("experiments:run_detail", args=[run.id])).json()
        self.assertEqual(body["config_hash"], "0123456789abcdef")
        self.assertEqual(run.fused_auc, 0.71)
        self.assertEqual(
            self.client.get(reverse("experiments:run_detail", args=[run.id + 1])).status_code,
            404,
        )

    def test_curve_csv(self):
        run = make_run()
        response = self.client.get(reverse("experiments:run_curve_csv", args=[run.id]))
        self.assertEqual(response["Content-Type"], "text/csv")
        rows = list(csv.reader(io.StringIO(response.content.decode())))
        self.assertEqual(rows[0], ["step", "ne", "ne_attn", "ne_tower"])
        self.assertEqual(rows[2], ["3", "0.93", "0.98", "0.96"])

    def test_list_is_get_only(self):
        self.assertEqual(self.client.post(reverse("experiments:run_list")).status_code, 405)


class SaveRunTests(TempDirMixin, TestCase):
    def test_jsonl_and_row(self):
        record = RunRecord(
            name="tiny", kind="ablation", seed=3, config_hash="abc", config={}, variant="no_kl"
        )
        record.final["val"] = {"fused": {"auc": 0.6, "ne": 0.9}, "components": {}}
        run = save_run(record, self.tmp)
        self.assertEqual(run.summary["split"], "val")
        self.assertEqual(read_jsonl(self.tmp / "runs.jsonl")[0]["variant"], "no_kl")
        self.assertEqual(ablation_rows([record])[0]["auc"], 0.6)


class CommandTests(TempDirMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.config = self.tmp / "tiny.toml"
        self.config.write_text(TINY_TOML, encoding="utf-8")

    def call(self, *args, seeds=(3,)) -> str:
        out = io.StringIO()
        with override_settings(
            LAB_OUTPUT_ROOT=self.tmp / "runs", LAB_DIRECTIONAL_SEEDS=list(seeds)
        ):
            call_command(*args, stdout=out)
        return out.getvalue()

    def test_train_then_evaluate(self):
        output = self.call("train", str(self.config), "--epochs", "1")
        self.assertIn("✅", output)
        run = Run.objects.get()
        self.assertEqual((run.kind, run.name), ("train", "tiny"))
        self.assertTrue((self.tmp / "runs" / "tiny" / "runs.jsonl").exists())

        rows = write_csv(load_config(self.config).data.load(), self.tmp / "rows.csv")
        report = json.loads(self.call("evaluate", run.checkpoint, str(rows), "--json"))
        self.assertEqual(set(report["components"]), {"tower", "attn"})

    def test_one_epoch_command(self):
        self.call("one_epoch", str(self.config), "--cadence", "1")
        run = Run.objects.get()
        self.assertEqual([p["step"] for p in run.curve], [1, 2, 3])

    def test_ablate_writes_table(self):
        out = self.tmp / "abl"
        self.call("ablate", str(self.config), "--variants", "full,no_kl", "--out", str(out))
        self.assertEqual(Run.objects.filter(kind="ablation").count(), 2)
        with (out / "ablation.csv").open() as fh:
            self.assertEqual([r["variant"] for r in csv.DictReader(fh)], ["full", "no_kl"])

    def test_ablate_defaults_to_directional_seeds(self):
        out = self.tmp / "abl"
        self.call(
            "ablate", str(self.config), "--variants", "full", "--out", str(out), seeds=(3, 4)
        )
        runs = Run.objects.filter(kind="ablation")
        self.assertEqual(sorted(runs.values_list("seed", flat=True)), [3, 4])
        with (out / "ablation_summary.csv").open() as fh:
            (row,) = csv.DictReader(fh)
        self.assertEqual((row["variant"], row["seeds"]), ("full", "2"))
        self.assertIn("auc_std", row)

    def test_explicit_seeds_win(self):
        out = self.tmp / "abl"
        self.call(
            "ablate", str(self.config), "--variants", "full", "--seeds", "5",
            "--out", str(out), seeds=(3, 4),
        )
        self.assertEqual(list(Run.objects.values_list("seed", flat=True)), [5])

    def test_train_uses_config_seed(self):
        self.call("train", str(self.config), "--epochs", "1", seeds=(7, 8))
        self.assertEqual(Run.objects.get().seed, 3)

    def test_scale_sweep_one_epoch(self):
        out = self.tmp / "sweep"
        self.call(
            "scale_sweep", str(self.config), "--multipliers", "1,2", "--modes", "se,me",
            "--one-epoch", "--out", str(out),
        )
        self.assertEqual(Run.objects.filter(kind="sweep").count(), 4)
        self.assertTrue((out / "scale_sweep.csv").exists())

    def test_gen_data(self):
        spec = self.tmp / "spec.toml"
        schema_part = TINY_TOML[TINY_TOML.index("[schema]") : TINY_TOML.index("[fusion]")]
        spec.write_text("n_samples = 500\nseed = 9\n\n" + schema_part, encoding="utf-8")
        path = self.tmp / "gen.csv"
        self.call("gen_data", str(spec), "--out", str(path), "--n-samples", "50")
        self.assertEqual(len(load_csv(path, tiny_schema())), 50)

    def test_library_errors_become_command_errors(self):
        with self.assertRaises(CommandError):
            self.call("train", str(self.tmp / "missing.toml"))
        with self.assertRaises(CommandError):
            self.call("ablate", str(self.config), "--variants", "bogus")
