"""Column-typed tabular datasets and CSV/schema I/O.

A Dataset stores all cells as float64: real columns hold their values
directly, categorical columns hold integer category codes. Missing
values are rejected at load time so NaN can safely serve as the
"marginalized" sentinel during inference.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

FLOAT_FMT = ".17g"


def format_float(x: float) -> str:
    return format(float(x), FLOAT_FMT)


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "real" | "categorical"
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("real", "categorical"):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical" and not self.categories:
            raise DataError(f"column {self.name!r}: categorical column needs categories")


@dataclass
class Dataset:
    schema: list[Column]
    values: np.ndarray = field(repr=False)  # (n_rows, n_cols) float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.schema):
            raise DataError("dataset matrix shape does not match schema")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.schema)


def _parse_real(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    # "nan"/"inf" strings count as non-numeric: NaN is the marginalization
    # sentinel and must never enter via data.
    if math.isnan(v) or math.isinf(v):
        return None
    return v


def load_schema(path: str) -> list[Column]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read schema {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"schema {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "columns" not in doc:
        raise DataError(f"schema {path}: expected an object with a 'columns' list")
    cols = []
    for i, c in enumerate(doc["columns"]):
        if not isinstance(c, dict) or "name" not in c or "kind" not in c:
            raise DataError(f"schema {path}: columns[{i}] needs 'name' and 'kind'")
        cols.append(Column(c["name"], c["kind"], tuple(c.get("categories", ()))))
    return cols


def save_schema(schema: list[Column], path: str) -> None:
    doc = {"columns": []}
    for c in schema:
        entry: dict = {"name": c.name, "kind": c.kind}
        if c.kind == "categorical":
            entry["categories"] = list(c.categories)
        doc["columns"].append(entry)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_csv(path: str, schema_path: str | None = None) -> Dataset:
    """Load a header-ed CSV; infer column kinds unless a schema is given.

    Without a schema a column is real iff every cell parses as a decimal
    number; otherwise it is categorical with categories in
    first-appearance order.
    """
    if not os.path.exists(path):
        raise DataError(f"cannot read {path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: ragged row, {len(row)} cells but {len(header)} columns"
                )
            for j, cell in enumerate(row):
                if cell == "":
                    raise DataError(
                        f"{path}:{lineno}: missing value in column {header[j]!r} (index {j})"
                    )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")

    declared = None
    if schema_path is not None:
        declared = load_schema(schema_path)
        names = [c.name for c in declared]
        if names != header:
            raise DataError(
                f"{path}: header {header} does not match schema columns {names}"
            )

    n_cols = len(header)
    schema: list[Column] = []
    values = np.empty((len(rows), n_cols), dtype=np.float64)
    for j in range(n_cols):
        cells = [r[j] for r in rows]
        if declared is not None:
            col = declared[j]
            if col.kind == "real":
                for i, cell in enumerate(cells):
                    v = _parse_real(cell)
                    if v is None:
                        raise DataError(
                            f"{path}:{i + 2}: column {col.name!r} declared real "
                            f"but cell {cell!r} is not numeric"
                        )
                    values[i, j] = v
            else:
                index = {c: k for k, c in enumerate(col.categories)}
                for i, cell in enumerate(cells):
                    if cell not in index:
                        raise DataError(
                            f"{path}:{i + 2}: value {cell!r} not among declared "
                            f"categories of column {col.name!r}"
                        )
                    values[i, j] = index[cell]
            schema.append(col)
        else:
            parsed = [_parse_real(c) for c in cells]
            if all(v is not None for v in parsed):
                values[:, j] = parsed
                schema.append(Column(header[j], "real"))
            else:
                cats: list[str] = []
                index: dict[str, int] = {}
                for i, cell in enumerate(cells):
                    if cell not in index:
                        index[cell] = len(cats)
                        cats.append(cell)
                    values[i, j] = index[cell]
                schema.append(Column(header[j], "categorical", tuple(cats)))
    return Dataset(schema, values)


def save_csv(dataset: Dataset, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([c.name for c in dataset.schema])
        for row in dataset.values:
            out = []
            for col, v in zip(dataset.schema, row):
                if col.kind == "real":
                    out.append(format_float(v))
                else:
                    out.append(col.categories[int(v)])
            writer.writerow(out)
