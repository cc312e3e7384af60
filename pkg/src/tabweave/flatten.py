"""Flat (SQL-like) tables: unpivoting annotated tables and joining them on shared concepts."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, replace
from itertools import product
from typing import Any, Mapping, Sequence

from .annotate import AnnotatedTable
from .grid import CellGrid, DataType, infer_datatype, merged_cell, render_value
from .taxonomy import Concept, normalize_value


@dataclass(frozen=True)
class FlatColumn:
    name: str
    dtype: DataType
    concept: str | None = None
    dimension: bool = False


@dataclass(frozen=True)
class FlatTable:
    name: str
    columns: tuple[FlatColumn, ...]
    rows: tuple[tuple[Any, ...], ...]
    source: str = ""

    def __post_init__(self):
        width = len(self.columns)
        for k, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {k} has {len(row)} values for {width} columns")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {self.name}: {names}")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> list[Any]:
        k = self.column_names.index(name)
        return [row[k] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        for row in self.rows:
            writer.writerow([render_value(v) for v in row])
        return buf.getvalue()


def parse_flat_csv(text: str) -> tuple[list[str], list[tuple[Any, ...]]]:
    """Header names and re-typed rows of a flat CSV payload."""
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, [])
    rows = [tuple(infer_datatype(raw)[1] for raw in row) for row in reader]
    return header, rows


def dedupe_names(names: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for name in names:
        candidate, k = name, 2
        while candidate in seen:
            candidate = f"{name}_{k}"
            k += 1
        seen.add(candidate)
        out.append(candidate)
    return out


def _dominant_dtype(cells) -> DataType:
    counts = Counter(c.dtype for c in cells if c.dtype != DataType.EMPTY)
    if not counts:
        return DataType.EMPTY
    return min(counts, key=lambda t: (-counts[t], t))


def _header_text(grid: CellGrid, coords) -> str:
    return " ".join(p for p in (grid.cell(i, j).raw.strip() for i, j in coords) if p)


def _column(name: str, cells, concept: Concept | None) -> FlatColumn:
    return FlatColumn(name, _dominant_dtype(cells),
                      concept.concept_id if concept else None,
                      bool(concept and concept.dimension))


def flatten_table(t: AnnotatedTable, grid: CellGrid, name: str = "table",
                  concepts: Mapping[str, Concept] | None = None, source: str = "") -> FlatTable:
    """Turn an annotated table into a flat table.

    ``concepts`` maps attribute axes (``col0``, ``row2``, ``rowkey``,
    ``colkey``, ``values``) to their tagged concept. Bi-dimensional tables
    unpivot to (row key, column key, value) triples, skipping void values.
    """
    concepts = concepts or {}
    r = t.region
    data_rows, data_cols = t.data_rows, t.data_cols
    block = [[grid.cell(i, j) for j in data_cols] for i in data_rows]
    if not any(c.dtype != DataType.EMPTY for row in block for c in row):
        raise ValueError(f"region {r.region_id} has no data cells")

    if t.bidimensional:
        row_keys = [merged_cell(grid, [(i, j) for j in t.header_cols]) for i in data_rows]
        col_keys = [merged_cell(grid, [(i, j) for i in t.header_rows]) for j in data_cols]
        corner = _header_text(grid, [(i, j) for i in t.header_rows for j in t.header_cols])
        rk, ck, vk = concepts.get("rowkey"), concepts.get("colkey"), concepts.get("values")
        names = dedupe_names([rk.label if rk else "key",
                              ck.label if ck else (corner or "key"),
                              "value"])
        rows = []
        for a, row in enumerate(block):
            for b, cell in enumerate(row):
                if cell.dtype != DataType.EMPTY:
                    rows.append((row_keys[a].parsed, col_keys[b].parsed, cell.parsed))
        columns = (_column(names[0], row_keys, rk), _column(names[1], col_keys, ck),
                   _column(names[2], [c for row in block for c in row], vk))
        return FlatTable(name, columns, tuple(rows), source)

    if t.attributes_in_columns:
        axes = [(f"col{j - r.left}", [(i, j) for i in t.header_rows]) for j in data_cols]
        lines = block
        per_attr = list(zip(*block))
    else:
        axes = [(f"row{i - r.top}", [(i, j) for j in t.header_cols]) for i in data_rows]
        per_attr = block
        lines = [list(col) for col in zip(*block)]
    raw_names = []
    for k, (axis, coords) in enumerate(axes):
        text = _header_text(grid, coords)
        concept = concepts.get(axis)
        raw_names.append(text or (concept.label if concept else f"column_{k + 1}"))
    names = dedupe_names(raw_names)
    columns = tuple(_column(nm, cells, concepts.get(axis))
                    for nm, (axis, _), cells in zip(names, axes, per_attr))
    rows = tuple(tuple(c.parsed for c in line) for line in lines
                 if any(c.dtype != DataType.EMPTY for c in line))
    return FlatTable(name, columns, rows, source)


def pivot_check(f: FlatTable, t: AnnotatedTable, grid: CellGrid) -> bool:
    """Rebuild the data block from ``f`` and compare it with the source grid."""
    data_rows, data_cols = t.data_rows, t.data_cols
    if t.bidimensional:
        if len(f.columns) != 3:
            return False
        expected = Counter()
        for i in data_rows:
            rk = merged_cell(grid, [(i, j) for j in t.header_cols]).parsed
            for j in data_cols:
                cell = grid.cell(i, j)
                if cell.dtype != DataType.EMPTY:
                    ck = merged_cell(grid, [(h, j) for h in t.header_rows]).parsed
                    expected[(rk, ck, cell.parsed)] += 1
        return Counter(tuple(row) for row in f.rows) == expected
    if t.attributes_in_columns:
        lines = [[grid.cell(i, j).parsed for j in data_cols] for i in data_rows]
    else:
        lines = [[grid.cell(i, j).parsed for i in data_rows] for j in data_cols]
    expected_rows = [tuple(line) for line in lines if any(v is not None for v in line)]
    if len(f.columns) != (len(data_cols) if t.attributes_in_columns else len(data_rows)):
        return False
    return [tuple(row) for row in f.rows] == expected_rows


def _key_sort(key: tuple) -> tuple:
    out = []
    for v in key:
        if v is None:
            out.append((2, 0, ""))
        elif isinstance(v, (int, float)):
            out.append((0, v, ""))
        else:
            out.append((1, 0, str(v)))
    return tuple(out)


def integrate(tables: Sequence[FlatTable], taxonomy: Sequence[Concept] | None = None,
              name: str = "integrated") -> FlatTable:
    """Full outer join of flat tables on the dimension concepts they all share.

    Key columns are named after the concept label when ``taxonomy`` is given.
    Clashing non-key column names get the source id as a prefix. Rows come
    out ordered by the normalized key.
    """
    if len(tables) < 2:
        raise ValueError("integration needs at least two tables")
    shared = set.intersection(*({c.concept for c in t.columns if c.dimension and c.concept}
                                for t in tables))
    if not shared:
        raise ValueError("tables share no dimension concept to join on")
    first = tables[0]
    key_concepts = [c.concept for c in first.columns if c.concept in shared]
    key_concepts = list(dict.fromkeys(key_concepts))
    labels = {c.concept_id: c.label for c in taxonomy or ()}

    key_idx, value_idx = [], []
    for t in tables:
        idx = [next(k for k, c in enumerate(t.columns) if c.concept == concept)
               for concept in key_concepts]
        key_idx.append(idx)
        value_idx.append([k for k in range(len(t.columns)) if k not in idx])

    key_columns = [replace(first.columns[k], name=labels.get(first.columns[k].concept,
                                                             first.columns[k].name))
                   for k in key_idx[0]]
    value_columns = [(t, t.columns[k]) for t, idx in zip(tables, value_idx) for k in idx]
    counts = Counter(c.name for _, c in value_columns)
    counts.update(c.name for c in key_columns)
    renamed = [replace(c, name=f"{t.source}:{c.name}" if counts[c.name] > 1 and t.source else c.name)
               for t, c in value_columns]
    names = dedupe_names([c.name for c in key_columns] + [c.name for c in renamed])
    columns = tuple(replace(c, name=nm) for c, nm in zip(key_columns + renamed, names))

    index: list[dict[tuple, list[tuple]]] = []
    display: dict[tuple, tuple] = {}
    for t, kidx, vidx in zip(tables, key_idx, value_idx):
        rows_by_key: dict[tuple, list[tuple]] = {}
        for row in t.rows:
            key = tuple(normalize_value(row[k]) for k in kidx)
            display.setdefault(key, tuple(row[k] for k in kidx))
            rows_by_key.setdefault(key, []).append(tuple(row[k] for k in vidx))
        index.append(rows_by_key)

    rows = []
    for key in sorted(display, key=_key_sort):
        parts = [by_key.get(key, [(None,) * len(vidx)]) for by_key, vidx in zip(index, value_idx)]
        for combo in product(*parts):
            rows.append(display[key] + tuple(v for part in combo for v in part))
    return FlatTable(name, columns, tuple(rows), "+".join(t.source for t in tables))


def has_unique_key(t: FlatTable) -> bool:
    """True when the dimension columns identify every row."""
    idx = [k for k, c in enumerate(t.columns) if c.dimension]
    if not idx:
        return False
    keys = [tuple(normalize_value(row[k]) for k in idx) for row in t.rows]
    return len(set(keys)) == len(keys) and all(None not in k for k in keys)
