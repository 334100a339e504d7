# features/csv_io.py
"""
CSV ingestion and export.

Format: header row, then one example per line.
  label      0/1
  user_id    integer
  d_<name>   decimal (dense)
  s_<name>   non-negative integer (sparse)
  q_<name>   '|'-separated non-negative integers, empty cell = empty sequence
UTF-8, '\\n' line endings, no quoting.

Out-of-vocabulary ids are mapped to 0 and counted rather than rejected:
public CTR dumps are dirty and a hard failure blocks an experiment.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from core.errors import CSVParseError, SchemaError

from .schema import Dataset, FeatureSchema, pad_or_truncate

logger = logging.getLogger(__name__)


def _parse_id(raw: str, *, row: int, column: str) -> int:
    text = (raw or "").strip()
    try:
        value = int(text)
    except ValueError:
        raise CSVParseError(f"{column}: {text!r} is not an integer id", row=row)
    if value < 0:
        raise CSVParseError(f"{column}: negative id {value}", row=row)
    return value


def _parse_float(raw: str, *, row: int, column: str) -> float:
    text = (raw or "").strip()
    try:
        return float(text)
    except ValueError:
        raise CSVParseError(f"{column}: {text!r} is not a decimal", row=row)


def load_csv(path: str | Path, schema: FeatureSchema) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"CSV file not found: {path}")

    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file (no header row)")
        header = [h.strip() for h in header]
        position = {name: i for i, name in enumerate(header)}
        missing = [c for c in schema.csv_columns() if c not in position]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")

        width = schema.seq_len
        labels: list[float] = []
        user_ids: list[int] = []
        sparse_rows: list[list[int]] = []
        dense_rows: list[list[float]] = []
        seq_rows: list[np.ndarray] = []
        len_rows: list[list[int]] = []
        oov = 0

        # Row numbers count the header as row 1, matching what an editor shows.
        for row_no, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) < len(header):
                raise CSVParseError(
                    f"expected {len(header)} cells, found {len(cells)}", row=row_no
                )

            label = _parse_id(cells[position["label"]], row=row_no, column="label")
            if label not in (0, 1):
                raise CSVParseError(f"label must be 0 or 1, got {label}", row=row_no)
            labels.append(float(label))
            user_ids.append(
                _parse_id(cells[position["user_id"]], row=row_no, column="user_id")
            )

            dense_rows.append(
                [
                    _parse_float(cells[position[f"d_{f.name}"]], row=row_no, column=f"d_{f.name}")
                    for f in schema.dense
                ]
            )

            sparse_row = []
            for f in schema.sparse:
                value = _parse_id(cells[position[f"s_{f.name}"]], row=row_no, column=f"s_{f.name}")
                if value >= f.cardinality:
                    oov += 1
                    value = 0
                sparse_row.append(value)
            sparse_rows.append(sparse_row)

            seq_block = np.zeros((schema.n_sequence, width), dtype=np.int64)
            lengths = []
            for j, f in enumerate(schema.sequence):
                column = f"q_{f.name}"
                text = cells[position[column]].strip()
                ids = [
                    _parse_id(tok, row=row_no, column=column) for tok in text.split("|")
                ] if text else []
                bad = sum(1 for v in ids if v >= f.vocab_size)
                if bad:
                    oov += bad
                    ids = [v if v < f.vocab_size else 0 for v in ids]
                fixed, length = pad_or_truncate(ids, f.max_len)
                seq_block[j, : f.max_len] = fixed
                lengths.append(length)
            seq_rows.append(seq_block)
            len_rows.append(lengths)

    if oov:
        logger.warning("%s: mapped %d out-of-vocabulary ids to 0", path, oov)

    n = len(labels)
    return Dataset(
        schema=schema,
        labels=np.asarray(labels, dtype=np.float64),
        user_ids=np.asarray(user_ids, dtype=np.int64),
        sparse=np.asarray(sparse_rows, dtype=np.int64).reshape(n, schema.n_sparse),
        dense=np.asarray(dense_rows, dtype=np.float64).reshape(n, schema.n_dense),
        sequences=(
            np.stack(seq_rows)
            if seq_rows
            else np.zeros((0, schema.n_sequence, width), dtype=np.int64)
        ),
        seq_lengths=np.asarray(len_rows, dtype=np.int64).reshape(n, schema.n_sequence),
        source={"csv": str(path)},
        oov_count=oov,
    )


def write_csv(dataset: Dataset, path: str | Path) -> Path:
    """Write ``dataset`` so that ``load_csv`` reads back identical columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    schema = dataset.schema

    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_NONE)
        writer.writerow(schema.csv_columns())
        for r in range(len(dataset)):
            row = [str(int(dataset.labels[r])), str(int(dataset.user_ids[r]))]
            # repr() is the shortest string that parses back to the same float.
            row += [repr(float(v)) for v in dataset.dense[r]]
            row += [str(int(v)) for v in dataset.sparse[r]]
            for j in range(schema.n_sequence):
                length = int(dataset.seq_lengths[r, j])
                row.append("|".join(str(int(v)) for v in dataset.sequences[r, j, :length]))
            writer.writerow(row)

    logger.info("Wrote %d rows to %s", len(dataset), path)
    return path
