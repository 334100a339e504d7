# ensemble/embedding_bank.py
"""
Per-component embedding tables and dense-feature encoders.

Each component owns one unified table. Every sparse field (and every sequence
field that does not borrow another field's rows) gets a contiguous block of
rows starting at its offset; row 0 of the table sits before all blocks. A
field's own id 0 maps to the first row of its block, its padding row.

mode="multi": disjoint tables/encoders per component.
mode="shared": one table for everybody; encoders shared too unless
share_dense_mlp is False.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from autodiff.nn import MLP, Module, normal_rows, parameter
from autodiff.tensor import Tensor, gather_rows
from core.errors import ConfigError, ShapeError
from core.seeding import derive_rng
from features.schema import ExampleBatch, FeatureSchema

BANK_MODES = ("multi", "shared")


class ComponentTables(Module):
    def __init__(self, table: Tensor, dense_mlp: MLP):
        self.table = table
        self.dense_mlp = dense_mlp

    @property
    def dim(self) -> int:
        return self.table.shape[1]


def field_offsets(schema: FeatureSchema) -> tuple[np.ndarray, np.ndarray, int]:
    """(sparse offsets [n], sequence offsets [k], total row count)."""
    cursor = 1
    sparse = {}
    for f in schema.sparse:
        sparse[f.name] = cursor
        cursor += f.cardinality
    seq = []
    for f in schema.sequence:
        if f.share_embedding:
            seq.append(sparse[f.share_embedding])
        else:
            seq.append(cursor)
            cursor += f.vocab_size
    return (
        np.asarray([sparse[f.name] for f in schema.sparse], dtype=np.int64),
        np.asarray(seq, dtype=np.int64),
        cursor,
    )


class EmbeddingBank(Module):
    def __init__(
        self,
        schema: FeatureSchema,
        dims: Mapping[str, int],
        *,
        mode: str = "multi",
        share_dense_mlp: bool = True,
        seed: int = 42,
    ):
        if mode not in BANK_MODES:
            raise ConfigError(f"unknown embedding bank mode {mode!r}; expected {BANK_MODES}")
        if not dims:
            raise ConfigError("embedding bank needs at least one component")
        for name, d in dims.items():
            if int(d) < 1:
                raise ConfigError(f"component {name!r}: embedding dim must be >= 1, got {d}")
        if mode == "shared" and len(set(dims.values())) > 1:
            raise ConfigError(
                f"shared embedding mode needs equal dims, got {dict(dims)}"
            )

        self.schema = schema
        self.mode = mode
        self.share_dense_mlp = share_dense_mlp
        self.seed = seed
        self.dims = {name: int(d) for name, d in dims.items()}
        self._sparse_offsets, self._seq_offsets, self.n_rows = field_offsets(schema)

        n_dense = schema.n_dense
        self.components: dict[str, ComponentTables] = {}
        shared_table: Tensor | None = None
        shared_mlp: MLP | None = None
        for index, (name, d) in enumerate(self.dims.items()):
            rng = derive_rng(seed, 101, index)
            if mode == "multi":
                table = parameter(normal_rows(rng, self.n_rows, d))
                mlp = MLP([n_dense, 2 * d, d], rng, final_activation=False)
            else:
                if shared_table is None:
                    shared_table = parameter(normal_rows(rng, self.n_rows, d))
                    shared_mlp = MLP([n_dense, 2 * d, d], rng, final_activation=False)
                table = shared_table
                mlp = shared_mlp if share_dense_mlp else MLP(
                    [n_dense, 2 * d, d], rng, final_activation=False
                )
            self.components[name] = ComponentTables(table, mlp)

    # -----------------------------------------------------------------
    # Lookups
    # -----------------------------------------------------------------

    def _get(self, component: str) -> ComponentTables:
        try:
            return self.components[component]
        except KeyError:
            raise ConfigError(
                f"unknown component {component!r}; bank holds {list(self.components)}"
            )

    def table(self, component: str) -> Tensor:
        return self._get(component).table

    def lookup_sparse(self, component: str, batch: ExampleBatch) -> Tensor:
        """[B x n x d_m]: row offset(field) + id of the component's table."""
        tables = self._get(component)
        return gather_rows(tables.table, batch.sparse + self._sparse_offsets[None, :])

    def lookup_sequence(
        self, component: str, batch: ExampleBatch
    ) -> tuple[Tensor, np.ndarray]:
        """([B x k x N x d_m], seq_lengths [B x k]); padding positions carry the padding row."""
        tables = self._get(component)
        ids = batch.sequences + self._seq_offsets[None, :, None]
        return gather_rows(tables.table, ids), batch.seq_lengths

    def encode_dense(self, component: str, batch: ExampleBatch) -> Tensor:
        """[B x d_m] = MLP_m(x_dense): hidden 2*d_m with ReLU, then linear to d_m."""
        tables = self._get(component)
        if batch.dense.shape[1] != self.schema.n_dense:
            raise ShapeError(
                f"dense width {batch.dense.shape[1]} != schema width {self.schema.n_dense}"
            )
        return tables.dense_mlp(Tensor(batch.dense))

    # -----------------------------------------------------------------
    # Scaling / accounting
    # -----------------------------------------------------------------

    def scale_dims(self, multiplier: int, *, seed: int | None = None) -> EmbeddingBank:
        """Fresh, re-initialized bank with every d_m multiplied by ``multiplier``."""
        if int(multiplier) != multiplier or multiplier < 1:
            raise ConfigError(f"multiplier must be an integer >= 1, got {multiplier}")
        return EmbeddingBank(
            self.schema,
            {name: d * int(multiplier) for name, d in self.dims.items()},
            mode=self.mode,
            share_dense_mlp=self.share_dense_mlp,
            seed=self.seed + 1 if seed is None else seed,
        )

    def table_parameter_count(self) -> int:
        seen: set[int] = set()
        total = 0
        for tables in self.components.values():
            if id(tables.table) not in seen:
                seen.add(id(tables.table))
                total += tables.table.size
        return total
