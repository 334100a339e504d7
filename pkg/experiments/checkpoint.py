# experiments/checkpoint.py
"""
Single-file checkpoints.

Layout (big-endian header fields, little-endian float64 payload):

    b"CTRLABCK"          magic
    u32                  format version
    u64 + bytes          config JSON (utf-8)
    u32                  parameter count
    per parameter:
      u16 + bytes        name (utf-8)
      u8                 ndim
      u64 * ndim         shape
      f64 * prod(shape)  row-major values
"""

from __future__ import annotations

import io
import json
import logging
import struct
from pathlib import Path

import numpy as np

from core.errors import CheckpointError, ConfigError
from ensemble.network import EnsembleNetwork

from .config import TrainConfig

logger = logging.getLogger(__name__)

MAGIC = b"CTRLABCK"
VERSION = 1


def build_network(cfg: TrainConfig) -> EnsembleNetwork:
    return EnsembleNetwork(
        cfg.schema,
        cfg.components,
        cfg.fusion,
        bank_mode=cfg.bank_mode,
        share_dense_mlp=cfg.share_dense_mlp,
        seed=cfg.seed,
    )


def save_checkpoint(network: EnsembleNetwork, cfg: TrainConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = network.state_dict()
    config_bytes = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")

    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack(">I", VERSION))
    buf.write(struct.pack(">Q", len(config_bytes)))
    buf.write(config_bytes)
    buf.write(struct.pack(">I", len(state)))
    for name, value in state.items():
        encoded = name.encode("utf-8")
        buf.write(struct.pack(">H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack(">B", value.ndim))
        buf.write(struct.pack(f">{value.ndim}Q", *value.shape))
        buf.write(np.ascontiguousarray(value, dtype="<f8").tobytes())

    # Atomic replace: readers never see a partial file.
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(buf.getvalue())
    tmp.replace(path)
    logger.debug("Saved checkpoint %s (%d tensors)", path, len(state))
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))


def load_checkpoint(path: str | Path) -> tuple[TrainConfig, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    reader = _Reader(path.read_bytes(), path)

    if reader.read(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    (version,) = reader.unpack(">I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (config_len,) = reader.unpack(">Q")
    try:
        cfg = TrainConfig.from_dict(json.loads(reader.read(config_len).decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ConfigError) as e:
        raise CheckpointError(f"{path}: unreadable config block: {e}") from e

    (count,) = reader.unpack(">I")
    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack(">H")
        name = reader.read(name_len).decode("utf-8")
        (ndim,) = reader.unpack(">B")
        shape = reader.unpack(f">{ndim}Q")
        n_values = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(reader.read(8 * n_values), dtype="<f8")
        state[name] = values.astype(np.float64).reshape(shape)
    if reader.pos != len(reader.data):
        raise CheckpointError(f"{path}: {len(reader.data) - reader.pos} trailing bytes")
    return cfg, state


def restore_network(path: str | Path) -> tuple[TrainConfig, EnsembleNetwork]:
    cfg, state = load_checkpoint(path)
    network = build_network(cfg)
    network.load_state_dict(state)
    return cfg, network
