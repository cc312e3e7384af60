"""Attribute profiling and schema/concept matchers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .annotate import AnnotatedTable
from .grid import CellGrid, DataType, merged_cell
from .taxonomy import Concept, Lexicon, normalize_text, normalize_value, tokens

VALUE_CAP = 1000
DEFAULT_TAU = 0.5


class AttrId(NamedTuple):
    doc_id: str
    sheet: str
    region_id: int
    axis: str

    def __str__(self) -> str:
        return f"{self.doc_id}/{self.sheet}/{self.region_id}/{self.axis}"


@dataclass(frozen=True)
class AttributeProfile:
    attr_id: AttrId
    name: str
    dtype_hist: dict
    values: tuple
    count: int

    @property
    def value_set(self) -> frozenset:
        return frozenset(self.values)


@dataclass(frozen=True)
class Correspondence:
    left: AttrId
    right: AttrId | str
    confidence: float
    provenance: tuple[str, ...]

    @property
    def is_concept(self) -> bool:
        return isinstance(self.right, str)

    def sort_key(self):
        return str(self.left), str(self.right)

    def to_json(self) -> dict:
        return {"left": str(self.left), "right": str(self.right),
                "confidence": round(self.confidence, 6), "provenance": list(self.provenance)}


def make_profile(attr_id: AttrId, name: str, cells) -> AttributeProfile:
    """Profile from the data cells of one attribute (header cells excluded)."""
    counts: dict[str, int] = {}
    values, seen = [], set()
    total = 0
    for cell in cells:
        total += 1
        if cell.dtype == DataType.EMPTY:
            continue
        counts[cell.dtype.name] = counts.get(cell.dtype.name, 0) + 1
        key = normalize_value(cell.parsed)
        if key not in seen and len(values) < VALUE_CAP:
            seen.add(key)
            values.append(key)
    filled = sum(counts.values())
    hist = {k: counts[k] / filled for k in sorted(counts)} if filled else {}
    return AttributeProfile(attr_id, name, hist, tuple(values), total)


def _join_names(grid: CellGrid, coords) -> str:
    parts = [grid.cell(i, j).raw.strip() for i, j in coords]
    return " ".join(p for p in parts if p)


def profile_attributes(t: AnnotatedTable, grid: CellGrid, doc_id: str = "",
                       sheet: str = "") -> list[AttributeProfile]:
    """One profile per attribute of the table.

    Header rows make every column an attribute, header columns every row.
    A bi-dimensional table yields three: the row keys, the column keys
    (named after the corner cell) and the value block.
    """
    r = t.region
    data_rows, data_cols = t.data_rows, t.data_cols
    if not any(grid.dtype(i, j) != DataType.EMPTY for i in data_rows for j in data_cols):
        raise ValueError(f"region {r.region_id} has no data cells")

    def aid(axis):
        return AttrId(doc_id, sheet, r.region_id, axis)

    if t.bidimensional:
        corner = _join_names(grid, [(i, j) for i in t.header_rows for j in t.header_cols])
        row_keys = [merged_cell(grid, [(i, j) for j in t.header_cols]) for i in data_rows]
        col_keys = [merged_cell(grid, [(i, j) for i in t.header_rows]) for j in data_cols]
        return [
            make_profile(aid("rowkey"), "", row_keys),
            make_profile(aid("colkey"), corner, col_keys),
            make_profile(aid("values"), "", [grid.cell(i, j) for i in data_rows for j in data_cols]),
        ]
    if t.attributes_in_columns:
        return [make_profile(aid(f"col{j - r.left}"),
                             _join_names(grid, [(i, j) for i in t.header_rows]),
                             [grid.cell(i, j) for i in data_rows])
                for j in range(r.left, r.right + 1)]
    return [make_profile(aid(f"row{i - r.top}"),
                         _join_names(grid, [(i, j) for j in t.header_cols]),
                         [grid.cell(i, j) for j in data_cols])
            for i in range(r.top, r.bottom + 1)]



def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    """Best of edit-distance similarity and token-set Jaccard on normalized names."""
    ta, tb = tokens(a), tokens(b)
    if not ta or not tb:
        return 0.0
    na, nb = " ".join(ta), " ".join(tb)
    edit = 1.0 - levenshtein(na, nb) / max(len(na), len(nb))
    sa, sb = set(ta), set(tb)
    jaccard = len(sa & sb) / len(sa | sb)
    return max(edit, jaccard)


def lexicon_similarity(a: str, b: str, lexicon: Lexicon) -> float:
    if not normalize_text(a) or not normalize_text(b):
        return 0.0
    return 1.0 if lexicon.synonyms(a, b) else 0.0


def _cosine(p: dict, q: dict) -> float:
    dot = sum(p[k] * q.get(k, 0.0) for k in p)
    if dot == 0:
        return 0.0
    np_, nq = sum(v * v for v in p.values()), sum(v * v for v in q.values())
    return min(1.0, dot / math.sqrt(np_ * nq))


def instance_similarity(a: AttributeProfile, b: AttributeProfile) -> float:
    """dtype-histogram cosine times value-set Jaccard."""
    va, vb = a.value_set, b.value_set
    if not va or not vb:
        return 0.0
    return _cosine(a.dtype_hist, b.dtype_hist) * len(va & vb) / len(va | vb)


def combine(scores: dict[str, float] | Sequence[float]) -> float:
    values = scores.values() if isinstance(scores, dict) else scores
    return max(values, default=0.0)


def _provenance(scores: dict[str, float]) -> tuple[str, ...]:
    best = combine(scores)
    return tuple(sorted(name for name, s in scores.items() if s == best and s > 0))


def attribute_scores(a: AttributeProfile, b: AttributeProfile, lexicon: Lexicon) -> dict[str, float]:
    return {
        "name": name_similarity(a.name, b.name),
        "lexicon": lexicon_similarity(a.name, b.name, lexicon),
        "instance": instance_similarity(a, b),
    }


def concept_scores(a: AttributeProfile, concept: Concept, lexicon: Lexicon) -> dict[str, float]:
    terms = concept.terms
    return {
        "name": max((name_similarity(a.name, t) for t in terms), default=0.0),
        "lexicon": max((lexicon_similarity(a.name, t, lexicon) for t in terms), default=0.0),
        "recognizer": concept.recognizer.score(a.values) if concept.recognizer else 0.0,
    }


def concept_match(a: AttributeProfile, taxonomy: Sequence[Concept], lexicon: Lexicon,
                  tau: float = DEFAULT_TAU) -> list[Correspondence]:
    out = []
    for concept in taxonomy:
        scores = concept_scores(a, concept, lexicon)
        confidence = combine(scores)
        if confidence >= tau:
            out.append(Correspondence(a.attr_id, concept.concept_id, confidence, _provenance(scores)))
    return out


def best_concept(a: AttributeProfile, taxonomy: Sequence[Concept], lexicon: Lexicon,
                 tau: float = DEFAULT_TAU) -> Concept | None:
    """Concept to tag ``a`` with, or None.

    Among the concept correspondences of ``a``, those whose recognizer rejects
    the attribute's values are dropped (name evidence alone only counts for
    attributes without values). The highest confidence wins; dimensions win
    ties, then concept id.
    """
    by_id = {c.concept_id: c for c in taxonomy}
    found = [c for c in concept_match(a, taxonomy, lexicon, tau)
             if not (a.values and by_id[c.right].recognizer
                     and by_id[c.right].recognizer.score(a.values) == 0)]
    if not found:
        return None
    best = min(found, key=lambda c: (-c.confidence, not by_id[c.right].dimension, c.right))
    return by_id[best.right]


def match_documents(A: Sequence[AttributeProfile], B: Sequence[AttributeProfile],
                    taxonomy: Sequence[Concept], lexicon: Lexicon,
                    tau: float = DEFAULT_TAU) -> list[Correspondence]:
    """Attribute-attribute links between A and B plus concept links for both sides."""
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    found: dict[tuple[str, str], Correspondence] = {}
    for a in A:
        for b in B:
            scores = attribute_scores(a, b, lexicon)
            confidence = combine(scores)
            if confidence >= tau:
                corr = Correspondence(a.attr_id, b.attr_id, confidence, _provenance(scores))
                found[corr.sort_key()] = corr
    for side in (A, B):
        for a in side:
            for corr in concept_match(a, taxonomy, lexicon, tau):
                found[corr.sort_key()] = corr
    return [found[k] for k in sorted(found)]

