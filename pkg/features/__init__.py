from .batching import batch_iter, n_batches, split
from .csv_io import load_csv, write_csv
from .schema import (
    PAD_ID,
    Dataset,
    DenseField,
    ExampleBatch,
    FeatureSchema,
    SequenceField,
    SparseField,
    pad_or_truncate,
)
from .synthetic import SyntheticSpec, default_schema, default_synthetic_spec, gen_synthetic

__all__ = [
    "PAD_ID",
    "Dataset",
    "DenseField",
    "ExampleBatch",
    "FeatureSchema",
    "SequenceField",
    "SparseField",
    "SyntheticSpec",
    "batch_iter",
    "default_schema",
    "default_synthetic_spec",
    "gen_synthetic",
    "load_csv",
    "n_batches",
    "pad_or_truncate",
    "split",
    "write_csv",
]
