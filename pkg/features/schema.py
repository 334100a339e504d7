# features/schema.py
"""
Feature declarations and their batched realization.

Conventions:
- Index 0 of every sparse/sequence vocabulary is padding/unknown; real ids start at 1.
- Sequences are stored as [rows x k x N] with N = the longest declared max_len;
  positions >= seq_length always hold 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from core.errors import SchemaError

PAD_ID = 0


@dataclass(frozen=True)
class SparseField:
    name: str
    cardinality: int


@dataclass(frozen=True)
class DenseField:
    name: str


@dataclass(frozen=True)
class SequenceField:
    name: str
    vocab_size: int
    max_len: int
    # Reuse the embedding rows of this sparse field (history shares item ids).
    share_embedding: str | None = None


@dataclass(frozen=True)
class FeatureSchema:
    sparse: tuple[SparseField, ...] = ()
    dense: tuple[DenseField, ...] = ()
    sequence: tuple[SequenceField, ...] = ()
    user_id_field: str = "user_id"
    target_field: str | None = None

    def __post_init__(self):
        names = [f.name for f in (*self.sparse, *self.dense, *self.sequence)]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError(f"duplicate field names: {dupes}")

        for f in self.sparse:
            if f.cardinality < 2:
                raise SchemaError(
                    f"sparse field {f.name!r}: cardinality must be >= 2, got {f.cardinality}"
                )
        sparse_by_name = {f.name: f for f in self.sparse}
        for f in self.sequence:
            if f.max_len < 1:
                raise SchemaError(
                    f"sequence field {f.name!r}: max_len must be >= 1, got {f.max_len}"
                )
            if f.vocab_size < 2:
                raise SchemaError(
                    f"sequence field {f.name!r}: vocab_size must be >= 2, got {f.vocab_size}"
                )
            if f.share_embedding is not None:
                owner = sparse_by_name.get(f.share_embedding)
                if owner is None:
                    raise SchemaError(
                        f"sequence field {f.name!r} shares unknown sparse field "
                        f"{f.share_embedding!r}"
                    )
                if owner.cardinality != f.vocab_size:
                    raise SchemaError(
                        f"sequence field {f.name!r}: vocab_size {f.vocab_size} differs from "
                        f"shared field {owner.name!r} cardinality {owner.cardinality}"
                    )
        if self.target_field is not None and self.target_field not in sparse_by_name:
            raise SchemaError(f"target field {self.target_field!r} is not a sparse field")

    # -----------------------------------------------------------------
    # Derived facts
    # -----------------------------------------------------------------

    @property
    def n_sparse(self) -> int:
        return len(self.sparse)

    @property
    def n_dense(self) -> int:
        return len(self.dense)

    @property
    def n_sequence(self) -> int:
        return len(self.sequence)

    @property
    def seq_len(self) -> int:
        """Width N of the stored sequence tensor (0 when there are no sequences)."""
        return max((f.max_len for f in self.sequence), default=0)

    def resolved_target_field(self) -> str | None:
        if self.target_field is not None:
            return self.target_field
        return self.sparse[0].name if self.sparse else None

    def sparse_index(self, name: str) -> int:
        for i, f in enumerate(self.sparse):
            if f.name == name:
                return i
        raise SchemaError(f"unknown sparse field {name!r}")

    def csv_columns(self) -> list[str]:
        return [
            "label",
            "user_id",
            *(f"d_{f.name}" for f in self.dense),
            *(f"s_{f.name}" for f in self.sparse),
            *(f"q_{f.name}" for f in self.sequence),
        ]

    # -----------------------------------------------------------------
    # Serialization
    # -----------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "sparse": [{"name": f.name, "cardinality": f.cardinality} for f in self.sparse],
            "dense": [{"name": f.name} for f in self.dense],
            "sequence": [
                {
                    "name": f.name,
                    "vocab_size": f.vocab_size,
                    "max_len": f.max_len,
                    "share_embedding": f.share_embedding,
                }
                for f in self.sequence
            ],
            "user_id_field": self.user_id_field,
            "target_field": self.target_field,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> FeatureSchema:
        try:
            return cls(
                sparse=tuple(
                    SparseField(str(f["name"]), int(f["cardinality"]))
                    for f in raw.get("sparse") or []
                ),
                dense=tuple(DenseField(str(f["name"])) for f in raw.get("dense") or []),
                sequence=tuple(
                    SequenceField(
                        str(f["name"]),
                        int(f["vocab_size"]),
                        int(f["max_len"]),
                        f.get("share_embedding") or None,
                    )
                    for f in raw.get("sequence") or []
                ),
                user_id_field=str(raw.get("user_id_field") or "user_id"),
                target_field=raw.get("target_field") or None,
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, SchemaError):
                raise
            raise SchemaError(f"malformed schema: {e}") from e


def pad_or_truncate(seq: Sequence[int], max_len: int) -> tuple[np.ndarray, int]:
    """
    Fix a history to ``max_len`` entries.

    Longer histories keep the most recent (last) ``max_len`` ids; shorter ones
    are right-padded with 0.
    """
    ids = np.zeros(max_len, dtype=np.int64)
    recent = list(seq)[-max_len:] if max_len else []
    ids[: len(recent)] = recent
    return ids, len(recent)


@dataclass(frozen=True)
class ExampleBatch:
    labels: np.ndarray  # float64 [B], values in {0, 1}
    user_ids: np.ndarray  # int64 [B]
    sparse: np.ndarray  # int64 [B x n]
    dense: np.ndarray  # float64 [B x m]
    sequences: np.ndarray  # int64 [B x k x N]
    seq_lengths: np.ndarray  # int64 [B x k]
    row_index: np.ndarray  # int64 [B], position in the source dataset

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable column store; safe to share between runs."""

    schema: FeatureSchema
    labels: np.ndarray
    user_ids: np.ndarray
    sparse: np.ndarray
    dense: np.ndarray
    sequences: np.ndarray
    seq_lengths: np.ndarray
    source: dict[str, Any] = field(default_factory=dict)
    oov_count: int = 0

    def __post_init__(self):
        n = int(np.asarray(self.labels).shape[0])
        k, width = self.schema.n_sequence, self.schema.seq_len
        expected = {
            "labels": ((n,), np.float64),
            "user_ids": ((n,), np.int64),
            "sparse": ((n, self.schema.n_sparse), np.int64),
            "dense": ((n, self.schema.n_dense), np.float64),
            "sequences": ((n, k, width), np.int64),
            "seq_lengths": ((n, k), np.int64),
        }
        for name, (shape, dtype) in expected.items():
            arr = np.asarray(getattr(self, name), dtype=dtype).reshape(shape)
            object.__setattr__(self, name, _frozen(arr))
        self.validate()

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def positive_rate(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0

    def validate(self) -> None:
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise SchemaError("labels must be 0 or 1")
        for i, f in enumerate(self.schema.sparse):
            col = self.sparse[:, i]
            if col.size and (col.min() < 0 or col.max() >= f.cardinality):
                raise SchemaError(
                    f"sparse field {f.name!r}: ids outside [0, {f.cardinality})"
                )
        width = self.schema.seq_len
        for j, f in enumerate(self.schema.sequence):
            ids = self.sequences[:, j, :]
            lengths = self.seq_lengths[:, j]
            if ids.size and (ids.min() < 0 or ids.max() >= f.vocab_size):
                raise SchemaError(
                    f"sequence field {f.name!r}: ids outside [0, {f.vocab_size})"
                )
            if lengths.size and (lengths.min() < 0 or lengths.max() > f.max_len):
                raise SchemaError(f"sequence field {f.name!r}: lengths outside [0, N]")
            pad = np.arange(width)[None, :] >= lengths[:, None]
            if np.any(ids[pad] != PAD_ID):
                raise SchemaError(
                    f"sequence field {f.name!r}: non-padding ids beyond seq_length"
                )

    def take(self, indices: Iterable[int] | np.ndarray) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            labels=self.labels[idx],
            user_ids=self.user_ids[idx],
            sparse=self.sparse[idx],
            dense=self.dense[idx],
            sequences=self.sequences[idx],
            seq_lengths=self.seq_lengths[idx],
            source=self.source,
            oov_count=self.oov_count,
        )

    def batch(self, indices: np.ndarray) -> ExampleBatch:
        idx = np.asarray(indices, dtype=np.int64)
        return ExampleBatch(
            labels=self.labels[idx],
            user_ids=self.user_ids[idx],
            sparse=self.sparse[idx],
            dense=self.dense[idx],
            sequences=self.sequences[idx],
            seq_lengths=self.seq_lengths[idx],
            row_index=idx,
        )

    def full_batch(self) -> ExampleBatch:
        return self.batch(np.arange(len(self)))

    def same_rows(self, other: Dataset) -> bool:
        """Column-wise bitwise equality (schema and data, not provenance)."""
        return self.schema == other.schema and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("labels", "user_ids", "sparse", "dense", "sequences", "seq_lengths")
        )
