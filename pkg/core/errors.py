# core/errors.py
"""
Error hierarchy shared by every lab package.

Each class also derives from the closest builtin so callers can catch either
the lab type or the plain Python one (e.g. ``except ValueError``).
"""

from __future__ import annotations


class LabError(Exception):
    """Base class for all lab errors."""


class ShapeError(LabError, ValueError):
    """Tensor dimensions do not agree."""


class ArgumentError(LabError, ValueError):
    """An argument is outside the accepted domain (empty, negative, ...)."""


class NumericDomainError(LabError, ArithmeticError):
    """A primitive produced or received a value outside its numeric domain."""


class VocabularyError(LabError, IndexError):
    """An id falls outside the vocabulary of the table it indexes."""


class ConfigError(LabError, ValueError):
    """Configuration is inconsistent (unknown component, schema mismatch, ...)."""


class SchemaError(LabError, ValueError):
    """A feature schema or CSV header is invalid."""


class CSVParseError(SchemaError):
    def __init__(self, message: str, *, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UndefinedMetricError(LabError, ValueError):
    """A metric is undefined for the given labels (e.g. a single class)."""


class DivergenceError(LabError, ArithmeticError):
    def __init__(self, message: str, *, batch_index: int):
        super().__init__(f"batch {batch_index}: {message}")
        self.batch_index = batch_index


class CheckpointError(LabError, ValueError):
    """A checkpoint file is truncated, corrupt, or of an unknown version."""
