"""DSPL-like bundles: one metadata.xml plus one CSV per flat table.

The XML layout is documented in docs/formats.md. Attributes are written in
sorted order with two-space indentation so the output is byte-stable.
"""

from __future__ import annotations

import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ExportError, SchemaError
from .flatten import FlatColumn, FlatTable, parse_flat_csv
from .grid import DataType
from .taxonomy import Concept

BUNDLE_VERSION = "1"
METADATA_FILE = "metadata.xml"


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    source: str = ""
    provider: str = ""


@dataclass(frozen=True)
class DsplBundle:
    path: Path
    info: DatasetInfo
    concepts: tuple[str, ...]
    files: tuple[str, ...]


def _element(tag: str, attrs: dict | None = None, text: str | None = None) -> ET.Element:
    el = ET.Element(tag, {k: attrs[k] for k in sorted(attrs or {})})
    if text is not None:
        el.text = text
    return el


def metadata_xml(tables: Sequence[FlatTable], info: DatasetInfo, taxonomy: Sequence[Concept]) -> str:
    by_id = {c.concept_id: c for c in taxonomy}
    used = sorted({c.concept for t in tables for c in t.columns if c.concept})
    for concept_id in used:
        if concept_id not in by_id:
            raise ExportError(f"column concept {concept_id!r} is not defined in the taxonomy")

    root = _element("dataset", {"version": BUNDLE_VERSION})
    root.append(_element("name", text=info.name))
    root.append(_element("source", text=info.source))
    root.append(_element("provider", text=info.provider))
    concepts = _element("concepts")
    for concept_id in used:
        c = by_id[concept_id]
        concepts.append(_element("concept", {
            "id": c.concept_id, "label": c.label,
            "type": "dimension" if c.dimension else "metric"}))
    root.append(concepts)
    tables_el = _element("tables")
    for t in tables:
        table_el = _element("table", {"file": f"{t.name}.csv", "name": t.name, "source": t.source})
        for col in t.columns:
            attrs = {"name": col.name, "type": col.dtype.name.lower(),
                     "role": "dimension" if col.dimension else "metric"}
            if col.concept:
                attrs["concept"] = col.concept
            table_el.append(_element("column", attrs))
        tables_el.append(table_el)
    root.append(tables_el)
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def export_dspl(tables: Sequence[FlatTable], info: DatasetInfo, out_dir: str | Path,
                taxonomy: Sequence[Concept]) -> DsplBundle:
    names = [t.name for t in tables]
    if len(set(names)) != len(names):
        raise ExportError(f"table names must be unique: {names}")
    for name in names:
        if not name or os.sep in name or name.startswith("."):
            raise ExportError(f"table name {name!r} cannot be used as a file name")
    xml = metadata_xml(tables, info, taxonomy)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / METADATA_FILE).write_text(xml, encoding="utf-8", newline="\n")
        for t in tables:
            (out / f"{t.name}.csv").write_text(t.to_csv(), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ExportError(f"{out}: cannot write bundle ({exc.strerror or exc})") from exc
    used = tuple(sorted({c.concept for t in tables for c in t.columns if c.concept}))
    return DsplBundle(out, info, used, (METADATA_FILE, *(f"{n}.csv" for n in names)))


def read_bundle(path: str | Path) -> tuple[DatasetInfo, list[FlatTable]]:
    """Load a bundle back into flat tables, re-typing CSV values."""
    path = Path(path)
    try:
        root = ET.parse(path / METADATA_FILE).getroot()
    except (OSError, ET.ParseError) as exc:
        raise SchemaError(f"{path / METADATA_FILE}: {exc}") from exc
    if root.tag != "dataset" or root.get("version") != BUNDLE_VERSION:
        raise SchemaError(f"{path / METADATA_FILE}: not a version {BUNDLE_VERSION} bundle")
    info = DatasetInfo(root.findtext("name", ""), root.findtext("source", ""),
                       root.findtext("provider", ""))
    tables = []
    for table_el in root.iter("table"):
        columns = tuple(FlatColumn(c.get("name"), DataType[c.get("type").upper()], c.get("concept"),
                                   c.get("role") == "dimension")
                        for c in table_el.iter("column"))
        text = (path / table_el.get("file")).read_text(encoding="utf-8")
        header, rows = parse_flat_csv(text)
        if header != [c.name for c in columns]:
            raise SchemaError(f"{table_el.get('file')}: header does not match metadata")
        tables.append(FlatTable(table_el.get("name"), columns, tuple(rows), table_el.get("source", "")))
    return info, tables
