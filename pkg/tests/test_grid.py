import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import CORPUS
from tabweave.errors import EmptyDocumentError, InputError, SchemaError
from tabweave.grid import (CellGrid, DataType, emit_grid_json, infer_datatype, load_csv,
                           load_document, parse_csv_text, parse_grid_json, render_value, to_bitmap)


@pytest.mark.parametrize("raw, dtype, value", [
    ("", DataType.EMPTY, None),
    ("   ", DataType.EMPTY, None),
    ("TRUE", DataType.BOOLEAN, True),
    ("faux", DataType.BOOLEAN, False),
    ("1990", DataType.INTEGER, 1990),
    ("-42", DataType.INTEGER, -42),
    ("12 345", DataType.INTEGER, 12345),
    ("3.14", DataType.REAL, 3.14),
    ("3,14", DataType.REAL, 3.14),
    ("1e3", DataType.REAL, 1000.0),
    ("2011-03-04", DataType.DATE, "2011-03-04"),
    ("04/03/2011", DataType.DATE, "2011-03-04"),
    ("2011-03", DataType.DATE, "2011-03"),
    ("mars 2011", DataType.DATE, "2011-03"),
    ("March 4, 2011", DataType.DATE, "2011-03-04"),
    ("France", DataType.STRING, "France"),
    ("1,2,3", DataType.STRING, "1,2,3"),
    ("nan", DataType.STRING, "nan"),
    ("31/02/2011", DataType.STRING, "31/02/2011"),
])
def test_infer_datatype(raw, dtype, value):
    assert infer_datatype(raw) == (dtype, value)


def test_ragged_rows_are_padded():
    doc = parse_csv_text("a\n1,2\n")
    g = doc.sheets[0].grid
    assert g.shape == (2, 2)
    assert g.dtype(0, 1) == DataType.EMPTY


def test_empty_file_is_an_error(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(EmptyDocumentError):
        load_csv(p)


def test_malformed_quoting_is_positioned(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text('a,b\n"unterminated,1\n')
    with pytest.raises(InputError, match="line"):
        load_csv(p)


def test_grid_json_needs_a_sheet():
    with pytest.raises(SchemaError, match="at least one sheet"):
        parse_grid_json({"sheets": []})


def test_grid_json_error_names_row_and_column():
    with pytest.raises(SchemaError, match=r"row 1, column 2"):
        parse_grid_json({"sheets": [{"name": "s", "rows": [["a"], ["b", "c", 3]]}]})


def test_bitmap_counts_non_empty_cells():
    g = CellGrid.from_rows([["", "x", ""], ["1", "", "2.5"], ["", "", ""]])
    bm = to_bitmap(g)
    assert bm.shape == g.shape
    assert int(bm.sum()) == g.non_empty_count() == 3
    assert not to_bitmap(CellGrid.from_rows([[""] * 3] * 3)).any()


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_grid_json_round_trip_on_corpus(path):
    doc = load_document(path)
    text = emit_grid_json(doc)
    again = parse_grid_json(json.loads(text))
    assert emit_grid_json(again) == text
    for a, b in zip(doc.sheets, again.sheets):
        assert a.grid.raw_rows() == b.grid.raw_rows()
        assert np.array_equal(a.grid.dtypes, b.grid.dtypes)


cell_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)


@given(st.lists(st.lists(cell_text, min_size=1, max_size=5), min_size=1, max_size=5))
def test_grid_json_round_trip_property(rows):
    doc = parse_grid_json({"sheets": [{"name": "s", "rows": rows}]})
    again = parse_grid_json(json.loads(emit_grid_json(doc)))
    assert again.sheets[0].grid.raw_rows() == doc.sheets[0].grid.raw_rows()


@given(cell_text)
def test_infer_datatype_is_total_and_stable(raw):
    dtype, value = infer_datatype(raw)
    assert isinstance(dtype, DataType)
    # the rendered value reads back as the same type and value
    if dtype not in (DataType.EMPTY, DataType.STRING):
        assert infer_datatype(render_value(value)) == (dtype, value)
