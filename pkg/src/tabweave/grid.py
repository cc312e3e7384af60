"""In-memory spreadsheet model, lexical cell typing and document loaders."""

from __future__ import annotations

import csv
import datetime as _dt
import enum
import io
import json
import math
import re
import unicodedata
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import EmptyDocumentError, InputError, SchemaError


class DataType(enum.IntEnum):
    EMPTY = 0
    STRING = 1
    INTEGER = 2
    REAL = 3
    BOOLEAN = 4
    DATE = 5


NUMERIC_TYPES = frozenset({DataType.INTEGER, DataType.REAL})
# Types considered by the row/column homogeneity sums; EMPTY carries no signal.
CONCRETE_TYPES = (DataType.STRING, DataType.INTEGER, DataType.REAL,
                  DataType.BOOLEAN, DataType.DATE)

_BOOLEANS = {"true": True, "vrai": True, "false": False, "faux": False}
_GROUP_SEP = "[ \u00a0\u2009\u202f]"
_INT_RE = re.compile(rf"[+-]?(?:\d+|\d{{1,3}}(?:{_GROUP_SEP}\d{{3}})+)")
_REAL_RE = re.compile(r"[+-]?(?:(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)")
_DECIMAL_COMMA_RE = re.compile(r"([+-]?\d+),(\d+)")
_ISO_DAY_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_ISO_MONTH_RE = re.compile(r"(\d{4})-(\d{2})")
_SLASH_DATE_RE = re.compile(r"(\d{1,2})/(\d{1,2})/(\d{4})")
_MONTH_YEAR_RE = re.compile(r"([a-z]+)\.?\s+(\d{4})")
_DAY_MONTH_YEAR_RE = re.compile(r"(\d{1,2})(?:er)?\s+([a-z]+)\.?\s+(\d{4})")
_MONTH_DAY_YEAR_RE = re.compile(r"([a-z]+)\.?\s+(\d{1,2}),?\s+(\d{4})")

MONTHS: dict[str, int] = {}
for _num, _names in enumerate([
    ("january", "jan", "janvier", "janv"),
    ("february", "feb", "fevrier", "fevr", "fev"),
    ("march", "mar", "mars"),
    ("april", "apr", "avril", "avr"),
    ("may", "mai"),
    ("june", "jun", "juin"),
    ("july", "jul", "juillet", "juil"),
    ("august", "aug", "aout"),
    ("september", "sep", "sept", "septembre"),
    ("october", "oct", "octobre"),
    ("november", "nov", "novembre"),
    ("december", "dec", "decembre"),
], start=1):
    for _name in _names:
        MONTHS[_name] = _num


def strip_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def _parse_date(text: str) -> str | None:
    """Return the ISO-8601 rendering of ``text`` or None if it is not a date."""
    m = _ISO_DAY_RE.fullmatch(text)
    if m:
        return _iso_day(int(m[1]), int(m[2]), int(m[3]))
    m = _ISO_MONTH_RE.fullmatch(text)
    if m:
        return f"{int(m[1]):04d}-{int(m[2]):02d}" if 1 <= int(m[2]) <= 12 else None
    m = _SLASH_DATE_RE.fullmatch(text)
    if m:
        return _iso_day(int(m[3]), int(m[2]), int(m[1]))
    folded = strip_accents(text).lower()
    m = _MONTH_YEAR_RE.fullmatch(folded)
    if m and m[1] in MONTHS:
        return f"{int(m[2]):04d}-{MONTHS[m[1]]:02d}"
    m = _DAY_MONTH_YEAR_RE.fullmatch(folded)
    if m and m[2] in MONTHS:
        return _iso_day(int(m[3]), MONTHS[m[2]], int(m[1]))
    m = _MONTH_DAY_YEAR_RE.fullmatch(folded)
    if m and m[1] in MONTHS:
        return _iso_day(int(m[3]), MONTHS[m[1]], int(m[2]))
    return None


def _iso_day(year: int, month: int, day: int) -> str | None:
    try:
        return _dt.date(year, month, day).isoformat()
    except ValueError:
        return None


def infer_datatype(raw: str) -> tuple[DataType, Any]:
    """Classify a raw cell text and return ``(dtype, normalized value)``.

    Rules are tried in a fixed order: empty, boolean, integer, real, date,
    and finally string. Integers may carry space-like thousands separators;
    a decimal comma is accepted only for ``digits,digits``. Dates normalize
    to ISO-8601 text (``YYYY-MM-DD`` or ``YYYY-MM``). Empty cells map to
    ``None`` and strings to their stripped text.
    """
    text = raw.strip()
    if not text:
        return DataType.EMPTY, None
    lowered = text.lower()
    if lowered in _BOOLEANS:
        return DataType.BOOLEAN, _BOOLEANS[lowered]
    if _INT_RE.fullmatch(text):
        return DataType.INTEGER, int(re.sub(_GROUP_SEP, "", text))
    if _REAL_RE.fullmatch(text):
        value = float(text)
        if math.isfinite(value):
            return DataType.REAL, value
    m = _DECIMAL_COMMA_RE.fullmatch(text)
    if m:
        return DataType.REAL, float(f"{m[1]}.{m[2]}")
    iso = _parse_date(text)
    if iso is not None:
        return DataType.DATE, iso
    return DataType.STRING, text


def render_value(value: Any) -> str:
    """Text form of a normalized value; ``infer_datatype`` maps it back to itself."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Cell:
    raw: str
    dtype: DataType
    parsed: Any

    @classmethod
    def from_raw(cls, raw: str) -> "Cell":
        dtype, parsed = infer_datatype(raw)
        return cls(raw, dtype, parsed)


EMPTY_CELL = Cell("", DataType.EMPTY, None)


@dataclass(frozen=True)
class CellGrid:
    """Rectangular, row-major matrix of typed cells."""

    cells: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        widths = {len(row) for row in self.cells}
        if len(widths) > 1:
            raise ValueError("CellGrid rows must all have the same width")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[str]]) -> "CellGrid":
        """Build a grid from raw texts, padding ragged rows with empty cells."""
        rows = [list(r) for r in rows]
        width = max((len(r) for r in rows), default=0)
        if width == 0:
            rows = []
        return cls(tuple(
            tuple(Cell.from_raw(raw) for raw in r) + (EMPTY_CELL,) * (width - len(r))
            for r in rows
        ))

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def m(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.n, self.m

    def cell(self, i: int, j: int) -> Cell:
        return self.cells[i][j]

    def dtype(self, i: int, j: int) -> DataType:
        return self.cells[i][j].dtype

    @cached_property
    def dtypes(self) -> np.ndarray:
        """n×m integer array of DataType codes."""
        out = np.zeros((self.n, self.m), dtype=np.int8)
        for i, row in enumerate(self.cells):
            for j, c in enumerate(row):
                out[i, j] = c.dtype
        return out

    def raw_rows(self) -> list[list[str]]:
        return [[c.raw for c in row] for row in self.cells]

    def transpose(self) -> "CellGrid":
        return CellGrid(tuple(zip(*self.cells)) if self.cells else ())

    def non_empty_count(self) -> int:
        return int(np.count_nonzero(self.dtypes))


def merged_cell(grid: CellGrid, coords) -> Cell:
    """One cell standing for several header cells (their texts joined by spaces)."""
    cells = [grid.cell(i, j) for i, j in coords]
    if len(cells) == 1:
        return cells[0]
    return Cell.from_raw(" ".join(c.raw.strip() for c in cells if c.raw.strip()))


@dataclass(frozen=True)
class Sheet:
    name: str
    grid: CellGrid


@dataclass(frozen=True)
class SheetDocument:
    doc_id: str
    source_name: str
    sheets: tuple[Sheet, ...] = field(default=())

    def __post_init__(self):
        if not self.sheets:
            raise EmptyDocumentError(f"{self.doc_id}: document has no sheets")


def to_bitmap(grid: CellGrid) -> np.ndarray:
    """0/1 bitmap with a 1 wherever the cell is not EMPTY."""
    return (grid.dtypes != DataType.EMPTY).astype(np.uint8)


def _doc_id_from_path(path: Path) -> str:
    return path.stem


def load_csv(path: str | Path, delimiter: str = ",", doc_id: str | None = None) -> SheetDocument:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8-sig")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8 at byte {exc.start}") from exc
    return parse_csv_text(text, delimiter=delimiter, doc_id=doc_id or _doc_id_from_path(path),
                          source_name=path.name)


def parse_csv_text(text: str, delimiter: str = ",", doc_id: str = "doc",
                   source_name: str = "") -> SheetDocument:
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter, strict=True)
    rows = []
    try:
        for row in reader:
            rows.append(row)
    except csv.Error as exc:
        raise InputError(f"{source_name or doc_id}: line {reader.line_num}: malformed CSV ({exc})") from exc
    grid = CellGrid.from_rows(rows)
    if grid.n == 0 or grid.m == 0:
        raise EmptyDocumentError(f"{source_name or doc_id}: document contains no cells")
    return SheetDocument(doc_id, source_name, (Sheet("sheet1", grid),))


def _fail(where: str, msg: str):
    raise SchemaError(f"{where}: {msg}")


def parse_grid_json(obj: Any, doc_id: str = "doc", source_name: str = "") -> SheetDocument:
    if not isinstance(obj, dict):
        _fail("$", "top level must be an object")
    unknown = set(obj) - {"doc_id", "source", "sheets", "version"}
    if unknown:
        _fail("$", f"unknown key(s) {sorted(unknown)}")
    for key in ("doc_id", "source"):
        if key in obj and not isinstance(obj[key], str):
            _fail(f"$.{key}", "must be a string")
    sheets_obj = obj.get("sheets")
    if not isinstance(sheets_obj, list):
        _fail("$.sheets", "must be a list")
    if not sheets_obj:
        _fail("$.sheets", "at least one sheet is required")
    sheets = []
    for s, sheet in enumerate(sheets_obj):
        where = f"$.sheets[{s}]"
        if not isinstance(sheet, dict):
            _fail(where, "must be an object")
        if not isinstance(sheet.get("name"), str):
            _fail(f"{where}.name", "must be a string")
        rows = sheet.get("rows")
        if not isinstance(rows, list):
            _fail(f"{where}.rows", "must be a list of rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list):
                _fail(f"{where}.rows[{i}]", "must be a list of strings")
            for j, value in enumerate(row):
                if not isinstance(value, str):
                    _fail(f"{where}.rows[{i}][{j}] (row {i}, column {j})",
                          f"cell must be a string, got {type(value).__name__}")
        sheets.append(Sheet(sheet["name"], CellGrid.from_rows(rows)))
    return SheetDocument(obj.get("doc_id", doc_id), obj.get("source", source_name), tuple(sheets))


def load_grid_json(path: str | Path) -> SheetDocument:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8-sig"))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_grid_json(obj, doc_id=_doc_id_from_path(path), source_name=path.name)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def emit_grid_json(doc: SheetDocument) -> str:
    obj = {
        "doc_id": doc.doc_id,
        "source": doc.source_name,
        "sheets": [{"name": s.name, "rows": s.grid.raw_rows()} for s in doc.sheets],
    }
    return json.dumps(obj, ensure_ascii=False, indent=1) + "\n"


def load_document(path: str | Path, delimiter: str = ",") -> SheetDocument:
    """Load a ``.json`` grid document or a delimited text file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return load_grid_json(path)
    return load_csv(path, delimiter=delimiter)
