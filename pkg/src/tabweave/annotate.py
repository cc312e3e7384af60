"""Orientation scoring, per-cell features and role assignment for detected tables."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .detection import TableRegion
from .grid import CONCRETE_TYPES, NUMERIC_TYPES, CellGrid, DataType

if TYPE_CHECKING:
    from .bayes import ClassifierModel


class Orientation(enum.Enum):
    ROW_ORIENTED = "ROW_ORIENTED"
    COLUMN_ORIENTED = "COLUMN_ORIENTED"


class CellRole(enum.IntEnum):
    # Declaration order doubles as the tie-break order for classification.
    TITLE = 0
    COMMENT = 1
    HEADER = 2
    DATA = 3
    EMPTY = 4


@dataclass(frozen=True)
class OrientationScores:
    row_score: int
    col_score: int

    @property
    def orientation(self) -> Orientation:
        if self.row_score >= self.col_score:
            return Orientation.ROW_ORIENTED
        return Orientation.COLUMN_ORIENTED


def _homogeneity(block: np.ndarray, axis: int) -> int:
    if block.size == 0:
        return 0
    counts = np.stack([(block == t).sum(axis=axis) for t in CONCRETE_TYPES])
    return int(counts.max(axis=0).sum())


def discrepancy_scores(grid: CellGrid, region: TableRegion) -> OrientationScores:
    """Sum, over lines, of the largest same-type cell count in each line.

    ``row_score`` scans rows and ``col_score`` scans columns; EMPTY cells are
    never counted. The larger score wins, ties going to rows.
    """
    block = grid.dtypes[region.top:region.bottom + 1, region.left:region.right + 1]
    return OrientationScores(_homogeneity(block, axis=1), _homogeneity(block, axis=0))


@dataclass(frozen=True)
class CellFeatures:
    dtype: DataType
    row_in_region: int
    col_in_region: int
    first_line: bool
    first_column: bool
    below_numeric_fraction: float
    right_numeric_fraction: float
    neighbor_void_count: int
    inside_region: bool
    orientation: Orientation
    corner_void: bool = False

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, enum.Enum):
                value = value.name
            out[f.name] = value
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CellFeatures":
        kwargs = dict(obj)
        kwargs["dtype"] = DataType[kwargs["dtype"]]
        kwargs["orientation"] = Orientation[kwargs["orientation"]]
        return cls(**kwargs)


def _numeric_fraction(dtypes: Sequence[int]) -> float:
    filled = [t for t in dtypes if t != DataType.EMPTY]
    if not filled:
        return 0.0
    return sum(t in NUMERIC_TYPES for t in filled) / len(filled)


def _distance(region: TableRegion, i: int, j: int) -> int:
    di = max(region.top - i, 0, i - region.bottom)
    dj = max(region.left - j, 0, j - region.right)
    return max(di, dj)


def nearest_region(regions: Sequence[TableRegion], i: int, j: int) -> TableRegion:
    return min(regions, key=lambda r: (_distance(r, i, j), r.top, r.left))


def extract_features(grid: CellGrid, region: TableRegion, i: int, j: int,
                     regions: Sequence[TableRegion] | None = None,
                     orientation: Orientation | None = None) -> CellFeatures:
    """Features of cell (i, j) relative to ``region``.

    When the cell lies outside ``region`` and ``regions`` is given, offsets
    are taken relative to the nearest of them. Out-of-grid neighbours count
    as void.
    """
    dtypes = grid.dtypes
    inside = region.contains(i, j)
    anchor = region if inside or not regions else nearest_region(regions, i, j)
    if orientation is None:
        orientation = discrepancy_scores(grid, anchor).orientation

    if inside:
        below = dtypes[i + 1:region.bottom + 1, j]
        right = dtypes[i, j + 1:region.right + 1]
    else:
        below = dtypes[i + 1:, j]
        right = dtypes[i, j + 1:]

    void = 0
    for a in (i - 1, i, i + 1):
        for b in (j - 1, j, j + 1):
            if (a, b) == (i, j):
                continue
            if not (0 <= a < grid.n and 0 <= b < grid.m) or dtypes[a, b] == DataType.EMPTY:
                void += 1

    return CellFeatures(
        dtype=DataType(int(dtypes[i, j])),
        row_in_region=i - anchor.top,
        col_in_region=j - anchor.left,
        first_line=inside and i == region.top,
        first_column=inside and j == region.left,
        below_numeric_fraction=_numeric_fraction(below.tolist()),
        right_numeric_fraction=_numeric_fraction(right.tolist()),
        neighbor_void_count=void,
        inside_region=inside,
        orientation=orientation,
        corner_void=bool(inside and dtypes[region.top, region.left] == DataType.EMPTY),
    )


def classify_rule_based(f: CellFeatures) -> CellRole:
    """Hand-written habits, tried in order:

    1. first line (or first column) cell, string or void, over mostly numeric
       cells below (or to the right) -> HEADER; in a table whose top-left
       corner is void, every first-line and first-column cell is a HEADER;
    2. string outside the table, above it, with a mostly void neighbourhood -> TITLE;
    3. any other non-void cell outside the table -> COMMENT;
    4. non-void cell inside -> DATA;
    5. otherwise EMPTY.
    """
    if f.inside_region:
        if f.corner_void and (f.first_line or f.first_column):
            return CellRole.HEADER
        if f.dtype in (DataType.STRING, DataType.EMPTY) and (
                (f.first_line and f.below_numeric_fraction >= 0.5)
                or (f.first_column and f.right_numeric_fraction >= 0.5)):
            return CellRole.HEADER
        return CellRole.DATA if f.dtype != DataType.EMPTY else CellRole.EMPTY
    if f.dtype == DataType.STRING and f.neighbor_void_count >= 6 and f.row_in_region < 0:
        return CellRole.TITLE
    if f.dtype != DataType.EMPTY:
        return CellRole.COMMENT
    return CellRole.EMPTY


@dataclass(frozen=True)
class AnnotatedTable:
    region: TableRegion
    orientation: OrientationScores
    roles: dict = field(compare=False)
    header_rows: tuple[int, ...] = ()
    header_cols: tuple[int, ...] = ()
    title: str | None = None
    comments: tuple[str, ...] = ()

    @property
    def bidimensional(self) -> bool:
        return bool(self.header_rows) and bool(self.header_cols)

    @property
    def attributes_in_columns(self) -> bool:
        """True when attribute names sit on header rows (records run along rows)."""
        if self.bidimensional:
            return self.orientation.orientation is Orientation.ROW_ORIENTED
        return bool(self.header_rows) or not self.header_cols

    @property
    def header_index(self) -> tuple[int, ...]:
        return self.header_rows if self.attributes_in_columns else self.header_cols

    @property
    def data_rows(self) -> list[int]:
        r = self.region
        return [i for i in range(r.top, r.bottom + 1) if i not in self.header_rows]

    @property
    def data_cols(self) -> list[int]:
        r = self.region
        return [j for j in range(r.left, r.right + 1) if j not in self.header_cols]

    def role(self, i: int, j: int) -> CellRole:
        return self.roles.get((i, j), CellRole.EMPTY)

    def to_json(self) -> dict:
        if self.bidimensional:
            layout = "bidimensional"
        else:
            layout = "rows" if self.attributes_in_columns else "columns"
        return {
            "region_id": self.region.region_id,
            "bbox": list(self.region.bbox),
            "orientation": {
                "row_score": self.orientation.row_score,
                "col_score": self.orientation.col_score,
                "decision": self.orientation.orientation.value,
            },
            "layout": layout,
            "header_rows": list(self.header_rows),
            "header_cols": list(self.header_cols),
            "header_index": list(self.header_index),
            "title": self.title,
            "comments": list(self.comments),
            "roles": {f"{i},{j}": role.name for (i, j), role in sorted(self.roles.items())},
        }


def _majority_header(cells, roles, dtypes) -> bool:
    filled = [c for c in cells if dtypes[c] != DataType.EMPTY]
    if not filled:
        return False
    return 2 * sum(roles[c] == CellRole.HEADER for c in filled) > len(filled)


def _header_prefix(lines, roles, dtypes) -> list[int]:
    prefix = []
    for index, cells in lines[:-1]:
        if not _majority_header(cells, roles, dtypes):
            break
        prefix.append(index)
    return prefix


def _typed_fraction(block: np.ndarray, axis: int) -> float:
    filled = int(np.count_nonzero(block != DataType.EMPTY))
    return _homogeneity(block, axis) / filled if filled else 0.0


def _prefer_header_rows(dtypes, region: TableRegion, row_prefix, col_prefix,
                        orientation: Orientation) -> bool:
    """Pick the header axis whose remaining data block is more type-homogeneous.

    Attribute values share a datatype, so under the right reading each data
    column (header rows) or data row (header columns) is close to uniform.
    Equal fractions prefer the reading with more records than attributes,
    then the discrepancy orientation.
    """
    top, left, bottom, right = region.bbox
    below = dtypes[max(row_prefix) + 1:bottom + 1, left:right + 1]
    beside = dtypes[top:bottom + 1, max(col_prefix) + 1:right + 1]
    by_rows = _typed_fraction(below, axis=0)
    by_cols = _typed_fraction(beside, axis=1)
    if by_rows != by_cols:
        return by_rows > by_cols
    # records usually outnumber attributes
    records_rows, records_cols = below.shape[0], beside.shape[1]
    if records_rows != records_cols:
        return records_rows > records_cols
    return orientation is Orientation.ROW_ORIENTED


def _all_text(line: np.ndarray) -> bool:
    filled = line[line != DataType.EMPTY]
    return filled.size > 0 and bool(np.all(filled == DataType.STRING))


def annotate_region(grid: CellGrid, region: TableRegion, model: "ClassifierModel | None" = None,
                    regions: Sequence[TableRegion] | None = None) -> AnnotatedTable:
    """Assign roles to the cells of ``region`` and to the loose cells it owns.

    Loose non-void cells outside every region belong to the nearest one
    (``regions`` defaults to just this region). Header lines are the longest
    prefix of rows, and of columns, whose non-void cells are mostly HEADER.
    Both prefixes are kept when the corner cell is void (a bi-dimensional
    table); otherwise the axis whose data block is more type-homogeneous
    keeps its headers, with the discrepancy orientation breaking ties.
    """
    if region.cell_count == 0 and not np.any(grid.dtypes[region.top:region.bottom + 1,
                                                          region.left:region.right + 1]):
        raise ValueError(f"region {region.region_id} has no non-empty cells")
    regions = list(regions) if regions else [region]
    scores = discrepancy_scores(grid, region)
    orientation = scores.orientation
    dtypes = grid.dtypes

    if model is None:
        def decide(f):
            return classify_rule_based(f)
    else:
        from .bayes import classify

        def decide(f):
            return classify(model, f)[0]

    raw_roles = {}
    for i in range(region.top, region.bottom + 1):
        for j in range(region.left, region.right + 1):
            raw_roles[(i, j)] = decide(extract_features(grid, region, i, j, orientation=orientation))

    rows = [(i, [(i, j) for j in range(region.left, region.right + 1)])
            for i in range(region.top, region.bottom + 1)]
    cols = [(j, [(i, j) for i in range(region.top, region.bottom + 1)])
            for j in range(region.left, region.right + 1)]
    row_prefix = _header_prefix(rows, raw_roles, dtypes)
    col_prefix = _header_prefix(cols, raw_roles, dtypes)
    corner_void = dtypes[region.top, region.left] == DataType.EMPTY

    if not (row_prefix and col_prefix and corner_void):
        # an all-text first line is a header candidate even without a HEADER majority
        if not row_prefix and region.height >= 2 and _all_text(dtypes[region.top, region.left:region.right + 1]):
            row_prefix = [region.top]
        if not col_prefix and region.width >= 2 and _all_text(dtypes[region.top:region.bottom + 1, region.left]):
            col_prefix = [region.left]
        if row_prefix and col_prefix:
            if _prefer_header_rows(dtypes, region, row_prefix, col_prefix, orientation):
                col_prefix = []
            else:
                row_prefix = []
        elif not row_prefix and not col_prefix:
            if region.height >= 2 and (region.width < 2 or _prefer_header_rows(
                    dtypes, region, [region.top], [region.left], orientation)):
                row_prefix = [region.top]
            elif region.width >= 2:
                col_prefix = [region.left]

    header_rows, header_cols = set(row_prefix), set(col_prefix)
    data_rows = [i for i in range(region.top, region.bottom + 1) if i not in header_rows]
    data_cols = [j for j in range(region.left, region.right + 1) if j not in header_cols]
    roles = {}
    for (i, j) in raw_roles:
        filled = dtypes[i, j] != DataType.EMPTY
        if i in header_rows or j in header_cols:
            if filled:
                roles[(i, j)] = CellRole.HEADER
            elif i in header_rows and j in header_cols:
                roles[(i, j)] = CellRole.HEADER
            elif i in header_rows and any(dtypes[k, j] for k in data_rows):
                roles[(i, j)] = CellRole.HEADER
            elif j in header_cols and any(dtypes[i, k] for k in data_cols):
                roles[(i, j)] = CellRole.HEADER
        elif filled:
            roles[(i, j)] = CellRole.DATA

    title_cells = []
    comments = []
    for i in range(grid.n):
        for j in range(grid.m):
            if dtypes[i, j] == DataType.EMPTY or any(r.contains(i, j) for r in regions):
                continue
            if nearest_region(regions, i, j) != region:
                continue
            role = decide(extract_features(grid, region, i, j, regions=regions,
                                           orientation=orientation))
            if role is not CellRole.TITLE or i >= region.top:
                role = CellRole.COMMENT
            roles[(i, j)] = role
            if role is CellRole.TITLE:
                title_cells.append((i, j))
            else:
                comments.append(grid.cell(i, j).raw.strip())
    title = None
    if title_cells:
        ti, tj = max(title_cells, key=lambda c: (c[0], -c[1]))
        title = grid.cell(ti, tj).raw.strip()

    return AnnotatedTable(region, scores, roles, tuple(sorted(header_rows)),
                          tuple(sorted(header_cols)), title, tuple(comments))


def annotate_sheet(grid: CellGrid, regions: Sequence[TableRegion],
                   model: "ClassifierModel | None" = None) -> list[AnnotatedTable]:
    return [annotate_region(grid, r, model, regions) for r in regions]
