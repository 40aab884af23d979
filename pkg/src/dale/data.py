"""Numeric dataset container and CSV ingestion with line-level diagnostics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """Malformed CSV content (names the offending line/column)."""


class SchemaError(ValueError):
    """Requested columns are missing from the file."""


@dataclass
class Dataset:
    """N x D real-valued design matrix with named columns."""

    matrix: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError(f"design matrix must be 2-d, got shape {self.matrix.shape}")
        if not self.names:
            self.names = [f"x{j + 1}" for j in range(self.matrix.shape[1])]
        if len(self.names) != self.matrix.shape[1]:
            raise ValueError(f"{len(self.names)} names for {self.matrix.shape[1]} columns")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def mins(self) -> np.ndarray:
        return self.matrix.min(axis=0)

    def maxs(self) -> np.ndarray:
        return self.matrix.max(axis=0)

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(
                f"unknown column {name!r}; available: {self.names}") from None

    def column(self, key) -> np.ndarray:
        if isinstance(key, str):
            key = self.column_index(key)
        return self.matrix[:, key]

    def select(self, names: list[str]) -> "Dataset":
        idx = [self.column_index(n) for n in names]
        return Dataset(self.matrix[:, idx], list(names))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.names) + "\n")
            for row in self.matrix:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def ingest_csv(path, columns: list[str] | None = None) -> Dataset:
    """Read a header + numeric-rows CSV into a Dataset.

    With ``columns``, only those named columns are parsed (others may
    hold arbitrary text); missing names raise SchemaError. Ragged rows
    and non-numeric cells raise ParseError naming the line and column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if columns is None:
            take = list(range(len(header)))
            names = header
        else:
            missing = [c for c in columns if c not in header]
            if missing:
                raise SchemaError(
                    f"{path}: missing columns {missing}; available: {header}")
            take = [header.index(c) for c in columns]
            names = list(columns)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(rec)}")
            vals = []
            for j in take:
                cell = rec[j].strip()
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}, column {header[j]!r}: "
                        f"not numeric: {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=float), names)
