# experiments/config.py
"""
Experiment configuration.

A run is described by one TOML file:

    name = "cetnet"
    seed = 42
    batch_size = 1024
    epochs = 3
    eval_every = 1          # epochs between validation passes
    curve_cadence = 50      # batches between NE samples in one-epoch mode
    bank_mode = "multi"     # multi | shared
    share_dense_mlp = true
    gauc_weighting = "uniform"

    [data]
    csv = "data/train.csv"  # omit to generate from [data.synthetic]
    split = [0.8, 0.1, 0.1]

    [data.synthetic]
    n_samples = 20000

    [schema]                # optional; default lab schema otherwise
    [[schema.sparse]] ...

    [optimizer]
    kind = "adam"
    lr = 1e-3
    weight_decay = 1e-5

    [fusion]
    mode = "weighted_concat"
    alpha = 0.5

    [[components]]
    name = "hier"
    kind = "hier_ensemble"
"""

from __future__ import annotations

import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from django.conf import settings

from core.errors import ConfigError, LabError
from ensemble.components import ComponentConfig
from ensemble.embedding_bank import BANK_MODES
from ensemble.fusion import FusionConfig
from features.batching import split
from features.csv_io import load_csv
from features.schema import Dataset, FeatureSchema
from features.synthetic import SyntheticSpec, default_schema, gen_synthetic
from metrics.scoring import GAUC_WEIGHTINGS

OPTIMIZERS = ("adam",)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"
    lr: float = 1e-3
    weight_decay: float = 1e-5

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.kind!r}; expected {OPTIMIZERS}")
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight decay must be >= 0, got {self.weight_decay}")


@dataclass(frozen=True)
class DataConfig:
    schema: FeatureSchema
    csv: str | None = None
    synthetic: SyntheticSpec | None = None
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if (self.csv is None) == (self.synthetic is None):
            raise ConfigError("[data] needs exactly one of 'csv' or a [data.synthetic] table")
        if self.synthetic is not None and self.synthetic.schema != self.schema:
            raise ConfigError("[data.synthetic] schema differs from [schema]")

    def load(self) -> Dataset:
        if self.csv is not None:
            return load_csv(self.csv, self.schema)
        return gen_synthetic(self.synthetic)

    def load_splits(self, seed: int) -> tuple[Dataset, Dataset, Dataset]:
        return split(self.load(), self.split, seed)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"split": list(self.split)}
        if self.csv is not None:
            out["csv"] = self.csv
        if self.synthetic is not None:
            synthetic = self.synthetic.to_dict()
            synthetic.pop("schema")
            out["synthetic"] = synthetic
        return out


@dataclass(frozen=True)
class TrainConfig:
    data: DataConfig
    components: tuple[ComponentConfig, ...]
    fusion: FusionConfig = field(default_factory=FusionConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    name: str = "run"
    seed: int = 42
    batch_size: int = 1024
    epochs: int = 1
    eval_every: int = 1
    curve_cadence: int = 50
    bank_mode: str = "multi"
    share_dense_mlp: bool = True
    gauc_weighting: str = "uniform"

    def __post_init__(self):
        if not self.components:
            raise ConfigError("config needs at least one [[components]] entry")
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise ConfigError(f"component names must be unique, got {names}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 1 or self.curve_cadence < 1:
            raise ConfigError("eval_every and curve_cadence must be >= 1")
        if self.bank_mode not in BANK_MODES:
            raise ConfigError(f"unknown bank_mode {self.bank_mode!r}; expected {BANK_MODES}")
        if self.gauc_weighting not in GAUC_WEIGHTINGS:
            raise ConfigError(
                f"unknown gauc_weighting {self.gauc_weighting!r}; expected {GAUC_WEIGHTINGS}"
            )

    @property
    def schema(self) -> FeatureSchema:
        return self.data.schema

    def with_seed(self, seed: int) -> TrainConfig:
        """Same experiment under another seed; a synthetic dataset keeps its own seed."""
        return replace(self, seed=int(seed))

    def with_components(self, components, **changes) -> TrainConfig:
        return replace(self, components=tuple(components), **changes)

    def with_fusion(self, **changes) -> TrainConfig:
        return replace(self, fusion=replace(self.fusion, **changes))

    # -----------------------------------------------------------------
    # Serialization
    # -----------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "eval_every": self.eval_every,
            "curve_cadence": self.curve_cadence,
            "bank_mode": self.bank_mode,
            "share_dense_mlp": self.share_dense_mlp,
            "gauc_weighting": self.gauc_weighting,
            "data": self.data.to_dict(),
            "schema": self.schema.to_dict(),
            "optimizer": {
                "kind": self.optimizer.kind,
                "lr": self.optimizer.lr,
                "weight_decay": self.optimizer.weight_decay,
            },
            "fusion": self.fusion.to_dict(),
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any], *, base_dir: Path | None = None) -> TrainConfig:
        raw = dict(raw)
        try:
            schema_raw = raw.pop("schema", None)
            schema = FeatureSchema.from_dict(schema_raw) if schema_raw else default_schema()
            data = _data_from_dict(raw.pop("data", None) or {}, schema, base_dir)
            components = tuple(
                ComponentConfig.from_dict(c) for c in raw.pop("components", None) or []
            )
            fusion = FusionConfig.from_dict(raw.pop("fusion", None) or {})
            optimizer = OptimizerConfig(**(raw.pop("optimizer", None) or {}))
            unknown = sorted(set(raw) - set(cls.__dataclass_fields__))
            if unknown:
                raise ConfigError(f"unknown top-level keys {unknown}")
            return cls(
                data=data,
                components=components,
                fusion=fusion,
                optimizer=optimizer,
                **raw,
            )
        except LabError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed config: {e}") from e

    def config_hash(self) -> str:
        return config_hash(self.to_dict())


def _data_from_dict(raw: dict[str, Any], schema: FeatureSchema, base_dir: Path | None) -> DataConfig:
    csv = raw.get("csv")
    if csv is not None and base_dir is not None and not Path(csv).is_absolute():
        csv = str(base_dir / csv)
    synthetic_raw = raw.get("synthetic")
    synthetic = None
    if synthetic_raw is not None:
        synthetic = SyntheticSpec.from_dict({**synthetic_raw, "schema": schema.to_dict()})
    fractions = tuple(float(f) for f in raw.get("split", (0.8, 0.1, 0.1)))
    return DataConfig(schema=schema, csv=csv, synthetic=synthetic, split=fractions)


def config_hash(payload: dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def read_toml(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def load_config(path: str | Path) -> TrainConfig:
    """A TOML experiment file; a missing top-level seed falls back to LAB_DEFAULT_SEED."""
    path = Path(path)
    raw = read_toml(path)
    raw.setdefault("seed", settings.LAB_DEFAULT_SEED)
    return TrainConfig.from_dict(raw, base_dir=path.parent)


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    """A data-generation file: synthetic keys at top level plus an optional [schema]."""
    raw = read_toml(path)
    try:
        spec = SyntheticSpec.from_dict(raw)
        spec.validate()
    except LabError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: malformed synthetic spec: {e}") from e
    return spec


def output_root() -> Path:
    return Path(settings.LAB_OUTPUT_ROOT)


def resolve_output_dir(name: str, out: str | Path | None = None) -> Path:
    """``out`` if given, else <LAB_OUTPUT_ROOT>/<name>; created on demand."""
    path = Path(out) if out else output_root() / name
    path.mkdir(parents=True, exist_ok=True)
    return path
