"""Table region detection on the void/non-void bitmap of a sheet.

Labeling follows a single forward raster scan that looks at the four
already-visited neighbours (up, up-left, left, up-right) and resolves label
collisions with a union-find table, so components that only meet late in the
scan (U shapes) still end up with one label.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .grid import CellGrid, to_bitmap

# Neighbours already visited by a row-major scan, in the order they are consulted.
_SCAN_NEIGHBOURS = ((-1, 0), (-1, -1), (0, -1), (-1, 1))


def single_pass_labels(bitmap: np.ndarray) -> np.ndarray:
    """Labeling with the bare forward scan and no equivalence resolution.

    Each non-void cell copies the first labeled neighbour it finds, so two
    labels that meet later in the scan are never joined. Kept as a reference
    for what the union-find pass fixes.
    """
    bits = np.asarray(bitmap, dtype=bool).tolist()
    n = len(bits)
    m = len(bits[0]) if n else 0
    out = [[0] * m for _ in range(n)]
    next_label = 1
    for i in range(n):
        for j in range(m):
            if not bits[i][j]:
                continue
            for di, dj in _SCAN_NEIGHBOURS:
                a, b = i + di, j + dj
                if 0 <= a and 0 <= b < m and out[a][b]:
                    out[i][j] = out[a][b]
                    break
            else:
                out[i][j] = next_label
                next_label += 1
    return np.array(out, dtype=np.int32).reshape(n, m)


def connected_components(bitmap: np.ndarray) -> np.ndarray:
    """Label 8-connected components of non-zero cells.

    Returns an int32 array of the bitmap's shape where 0 means void and
    components are numbered 1..k in order of first appearance in a row-major
    scan.
    """
    bits = np.asarray(bitmap, dtype=bool).tolist()
    n = len(bits)
    m = len(bits[0]) if n else 0
    provisional = [[0] * m for _ in range(n)]
    parent = [0]

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        row = bits[i]
        cur = provisional[i]
        prev = provisional[i - 1] if i else None
        for j in range(m):
            if not row[j]:
                continue
            label = 0
            for di, dj in _SCAN_NEIGHBOURS:
                b = j + dj
                if b < 0 or b >= m:
                    continue
                if di:
                    if prev is None:
                        continue
                    other = prev[b]
                else:
                    other = cur[b]
                if not other:
                    continue
                if not label:
                    label = other
                else:
                    ra, rb = find(label), find(other)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
            if not label:
                label = len(parent)
                parent.append(label)
            cur[j] = label

    final = {}
    out = np.zeros((n, m), dtype=np.int32)
    for i in range(n):
        for j in range(m):
            p = provisional[i][j]
            if p:
                root = find(p)
                if root not in final:
                    final[root] = len(final) + 1
                out[i, j] = final[root]
    return out


def flood_fill_labels(bitmap: np.ndarray) -> np.ndarray:
    """Breadth-first 8-connected labeling; an independent reference for tests."""
    bits = np.asarray(bitmap, dtype=bool)
    n, m = bits.shape
    out = np.zeros((n, m), dtype=np.int32)
    label = 0
    for si in range(n):
        for sj in range(m):
            if not bits[si, sj] or out[si, sj]:
                continue
            label += 1
            out[si, sj] = label
            queue = deque([(si, sj)])
            while queue:
                i, j = queue.popleft()
                for a in range(max(i - 1, 0), min(i + 2, n)):
                    for b in range(max(j - 1, 0), min(j + 2, m)):
                        if bits[a, b] and not out[a, b]:
                            out[a, b] = label
                            queue.append((a, b))
    return out


class StructuringElement(enum.Enum):
    CROSS_3x3 = "cross"
    BOX_3x3 = "box"
    H_1x3 = "h"
    V_3x1 = "v"

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        if self is StructuringElement.CROSS_3x3:
            return ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))
        if self is StructuringElement.BOX_3x3:
            return tuple((a, b) for a in (-1, 0, 1) for b in (-1, 0, 1))
        if self is StructuringElement.H_1x3:
            return ((0, -1), (0, 0), (0, 1))
        return ((-1, 0), (0, 0), (1, 0))


def _footprint_stack(bitmap: np.ndarray, se: StructuringElement):
    bits = np.asarray(bitmap, dtype=bool)
    n, m = bits.shape
    padded = np.pad(bits, 1, constant_values=False)
    for di, dj in se.offsets:
        yield padded[1 + di:1 + di + n, 1 + dj:1 + dj + m]


def dilate(bitmap: np.ndarray, se: StructuringElement) -> np.ndarray:
    out = np.zeros(np.shape(bitmap), dtype=bool)
    for view in _footprint_stack(bitmap, se):
        out |= view
    return out.astype(np.uint8)


def erode(bitmap: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Cell stays 1 only if the whole footprint is 1; outside the grid counts as 0."""
    out = np.ones(np.shape(bitmap), dtype=bool)
    for view in _footprint_stack(bitmap, se):
        out &= view
    return out.astype(np.uint8)


def close_gaps(bitmap: np.ndarray) -> np.ndarray:
    """Horizontal then vertical closing, never removing an original 1."""
    out = np.asarray(bitmap, dtype=np.uint8)
    for se in (StructuringElement.H_1x3, StructuringElement.V_3x1):
        out = erode(dilate(out, se), se) | out
    return out


@dataclass(frozen=True)
class TableRegion:
    region_id: int
    top: int
    left: int
    bottom: int
    right: int
    cell_count: int
    members: frozenset = field(default=frozenset(), compare=False, repr=False)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return self.top, self.left, self.bottom, self.right

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    def contains(self, i: int, j: int) -> bool:
        return self.top <= i <= self.bottom and self.left <= j <= self.right

    def to_json(self) -> dict:
        return {"region_id": self.region_id, "bbox": list(self.bbox), "cell_count": self.cell_count}


@dataclass(frozen=True)
class DetectionParams:
    min_cells: int = 4
    bridge_rows: int = 1
    bridge_cols: int = 1
    morphology: bool = False


def _span_overlap(a0, a1, b0, b1) -> float:
    inter = min(a1, b1) - max(a0, b0) + 1
    if inter <= 0:
        return 0.0
    return inter / min(a1 - a0 + 1, b1 - b0 + 1)


def _should_merge(a, b, bridge_rows: int, bridge_cols: int) -> bool:
    (at, al, ab, ar), (bt, bl, bb, br) = a, b
    row_gap = max(at, bt) - min(ab, bb) - 1
    col_gap = max(al, bl) - min(ar, br) - 1
    if row_gap < 0 and col_gap < 0:
        return True
    if 0 <= row_gap <= bridge_rows and _span_overlap(al, ar, bl, br) >= 0.5:
        return True
    if 0 <= col_gap <= bridge_cols and _span_overlap(at, ab, bt, bb) >= 0.5:
        return True
    return False


def refine_components(labels: np.ndarray, min_cells: int = 4, bridge_rows: int = 1,
                      bridge_cols: int = 1) -> list[TableRegion]:
    """Turn labeled components into table regions.

    Components smaller than ``min_cells`` are dropped first. The survivors
    are merged when their boxes overlap, or when they are separated by at most
    ``bridge_rows`` blank rows (``bridge_cols`` columns) and overlap by at
    least half of the shorter span on the other axis. Merging is repeated
    until nothing changes. Regions come back sorted by (top, left) with ids
    1..k in that order.
    """
    labels = np.asarray(labels)
    groups = []
    for label in np.unique(labels):
        if label == 0:
            continue
        rows, cols = np.nonzero(labels == label)
        if len(rows) < min_cells:
            continue
        groups.append([(int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max())),
                       len(rows), {int(label)}])

    merged = True
    while merged:
        merged = False
        for x in range(len(groups)):
            for y in range(x + 1, len(groups)):
                if _should_merge(groups[x][0], groups[y][0], bridge_rows, bridge_cols):
                    a, b = groups[x], groups.pop(y)
                    a[0] = (min(a[0][0], b[0][0]), min(a[0][1], b[0][1]),
                            max(a[0][2], b[0][2]), max(a[0][3], b[0][3]))
                    a[1] += b[1]
                    a[2] |= b[2]
                    merged = True
                    break
            if merged:
                break

    groups.sort(key=lambda g: (g[0][0], g[0][1]))
    return [TableRegion(k, *bbox, count, frozenset(members))
            for k, (bbox, count, members) in enumerate(groups, start=1)]


def detect_tables(grid: CellGrid, params: DetectionParams | None = None) -> list[TableRegion]:
    params = params or DetectionParams()
    if grid.n == 0 or grid.m == 0:
        return []
    bitmap = to_bitmap(grid)
    if params.morphology:
        labels = connected_components(close_gaps(bitmap)) * bitmap
    else:
        labels = connected_components(bitmap)
    return refine_components(labels, params.min_cells, params.bridge_rows, params.bridge_cols)


def regions_to_json(regions: list[TableRegion]) -> str:
    return json.dumps([r.to_json() for r in regions])
