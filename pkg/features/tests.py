import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase  # pyright: ignore[reportMissingModuleSource]

from core.errors import ArgumentError, CSVParseError, SchemaError

from .batching import batch_iter, n_batches, split
from .csv_io import load_csv, write_csv
from .schema import DenseField, FeatureSchema, SequenceField, SparseField, pad_or_truncate
from .synthetic import SyntheticSpec, default_schema, gen_synthetic


def tiny_schema() -> FeatureSchema:
    return FeatureSchema(
        sparse=(SparseField("user_id", 11), SparseField("item", 21)),
        dense=(DenseField("price"),),
        sequence=(SequenceField("history", 21, 4, share_embedding="item"),),
        target_field="item",
    )


def tiny_spec(n: int = 200, seed: int = 7) -> SyntheticSpec:
    return SyntheticSpec(schema=tiny_schema(), n_samples=n, seed=seed)


class PadOrTruncateTests(SimpleTestCase):
    def test_short_history_is_right_padded(self):
        ids, length = pad_or_truncate([5, 6], 4)
        np.testing.assert_array_equal(ids, [5, 6, 0, 0])
        self.assertEqual(length, 2)

    def test_long_history_keeps_most_recent(self):
        ids, length = pad_or_truncate([1, 2, 3, 4, 5, 6], 4)
        np.testing.assert_array_equal(ids, [3, 4, 5, 6])
        self.assertEqual(length, 4)

    def test_empty_history(self):
        ids, length = pad_or_truncate([], 3)
        np.testing.assert_array_equal(ids, [0, 0, 0])
        self.assertEqual(length, 0)


class SchemaTests(SimpleTestCase):
    def test_duplicate_names_rejected(self):
        with self.assertRaises(SchemaError):
            FeatureSchema(sparse=(SparseField("a", 3),), dense=(DenseField("a"),))

    def test_shared_vocab_must_match(self):
        with self.assertRaises(SchemaError):
            FeatureSchema(
                sparse=(SparseField("item", 10),),
                sequence=(SequenceField("history", 12, 3, share_embedding="item"),),
            )

    def test_unknown_target_rejected(self):
        with self.assertRaises(SchemaError):
            FeatureSchema(sparse=(SparseField("item", 10),), target_field="shop")

    def test_dict_roundtrip(self):
        schema = default_schema()
        self.assertEqual(FeatureSchema.from_dict(schema.to_dict()), schema)

    def test_malformed_dict(self):
        with self.assertRaises(SchemaError):
            FeatureSchema.from_dict({"sparse": [{"name": "item"}]})

    def test_csv_columns(self):
        self.assertEqual(
            tiny_schema().csv_columns(),
            ["label", "user_id", "d_price", "s_user_id", "s_item", "q_history"],
        )


class SyntheticTests(SimpleTestCase):
    def test_same_spec_same_rows(self):
        a, b = gen_synthetic(tiny_spec()), gen_synthetic(tiny_spec())
        self.assertTrue(a.same_rows(b))

    def test_different_seed_different_rows(self):
        a, b = gen_synthetic(tiny_spec(seed=1)), gen_synthetic(tiny_spec(seed=2))
        self.assertFalse(a.same_rows(b))

    def test_rows_respect_schema(self):
        ds = gen_synthetic(tiny_spec(n=500))
        self.assertEqual(len(ds), 500)
        self.assertTrue(0.0 < ds.positive_rate < 1.0)
        self.assertLessEqual(int(ds.seq_lengths.max()), 4)
        np.testing.assert_array_equal(ds.user_ids, ds.sparse[:, 0])

    def test_bad_spec_rejected(self):
        with self.assertRaises(ArgumentError):
            gen_synthetic(SyntheticSpec(schema=tiny_schema(), n_samples=10, base_rate=1.0))

    def test_dataset_is_read_only(self):
        ds = gen_synthetic(tiny_spec(n=10))
        with self.assertRaises(ValueError):
            ds.labels[0] = 1.0


class CsvTests(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, text: str) -> Path:
        path = self.tmp / "rows.csv"
        path.write_text(text, encoding="utf-8")
        return path

    def test_write_then_load_reproduces_columns(self):
        ds = gen_synthetic(tiny_spec(n=50))
        loaded = load_csv(write_csv(ds, self.tmp / "out.csv"), ds.schema)
        self.assertTrue(loaded.same_rows(ds))
        self.assertEqual(loaded.oov_count, 0)

    def test_out_of_vocabulary_ids_map_to_zero(self):
        path = self.write(
            "label,user_id,d_price,s_user_id,s_item,q_history\n"
            "1,3,0.5,3,99,4|99|7\n"
            "0,4,1.5,4,2,\n"
        )
        ds = load_csv(path, tiny_schema())
        self.assertEqual(ds.oov_count, 2)
        self.assertEqual(int(ds.sparse[0, 1]), 0)
        np.testing.assert_array_equal(ds.sequences[0, 0], [4, 0, 7, 0])
        self.assertEqual(int(ds.seq_lengths[0, 0]), 3)
        self.assertEqual(int(ds.seq_lengths[1, 0]), 0)

    def test_long_history_truncated_on_load(self):
        path = self.write(
            "label,user_id,d_price,s_user_id,s_item,q_history\n"
            "1,1,0.0,1,1,1|2|3|4|5|6\n"
        )
        ds = load_csv(path, tiny_schema())
        np.testing.assert_array_equal(ds.sequences[0, 0], [3, 4, 5, 6])

    def test_bad_label_reports_row(self):
        path = self.write(
            "label,user_id,d_price,s_user_id,s_item,q_history\n"
            "1,1,0.0,1,1,\n"
            "2,1,0.0,1,1,\n"
        )
        with self.assertRaises(CSVParseError) as ctx:
            load_csv(path, tiny_schema())
        self.assertEqual(ctx.exception.row, 3)

    def test_non_numeric_dense_value(self):
        path = self.write(
            "label,user_id,d_price,s_user_id,s_item,q_history\n1,1,abc,1,1,\n"
        )
        with self.assertRaises(CSVParseError):
            load_csv(path, tiny_schema())

    def test_missing_column(self):
        path = self.write("label,user_id,s_user_id,s_item,q_history\n1,1,1,1,\n")
        with self.assertRaises(SchemaError):
            load_csv(path, tiny_schema())

    def test_missing_file(self):
        with self.assertRaises(SchemaError):
            load_csv(self.tmp / "nope.csv", tiny_schema())


class SplitAndBatchTests(SimpleTestCase):
    def setUp(self):
        self.ds = gen_synthetic(tiny_spec(n=103))

    def test_split_sizes_and_disjointness(self):
        train, val, test = split(self.ds, (0.8, 0.1, 0.1), seed=3)
        self.assertEqual((len(train), len(val), len(test)), (83, 10, 10))
        again = split(self.ds, (0.8, 0.1, 0.1), seed=3)
        self.assertTrue(train.same_rows(again[0]))

    def test_split_rejects_bad_fractions(self):
        with self.assertRaises(ArgumentError):
            split(self.ds, (0.5, 0.1, 0.1), seed=0)
        with self.assertRaises(ArgumentError):
            split(self.ds, (0.0, 0.5, 0.5), seed=0)

    def test_epoch_covers_every_row_once(self):
        seen = np.concatenate([b.row_index for b in batch_iter(self.ds, 10, shuffle_seed=5)])
        self.assertEqual(sorted(seen.tolist()), list(range(103)))
        self.assertEqual(n_batches(self.ds, 10), 11)

    def test_unshuffled_keeps_stored_order(self):
        first = next(batch_iter(self.ds, 4))
        np.testing.assert_array_equal(first.row_index, [0, 1, 2, 3])

    def test_bad_batch_size(self):
        with self.assertRaises(ArgumentError):
            next(batch_iter(self.ds, 0))
