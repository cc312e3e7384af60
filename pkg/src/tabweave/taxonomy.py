"""Concept taxonomy and synonym lexicon, both loaded from versioned JSON."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .errors import InputError, SchemaError
from .grid import render_value, strip_accents

TAXONOMY_VERSION = 1
LEXICON_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _singular(token: str) -> str:
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


def tokens(text: str) -> list[str]:
    """Lowercased, accent-free, crudely singularized word tokens."""
    return [_singular(t) for t in _TOKEN_RE.findall(strip_accents(text).lower())]


def normalize_text(text: str) -> str:
    return " ".join(tokens(text))


def normalize_value(value: Any) -> Any:
    """Equivalence key for data values, shared by matching and joining.

    Numbers stay numbers (so 2000 and 2000.0 compare equal); everything else
    becomes accent-free, lowercased, whitespace-collapsed text.
    """
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return value
    return " ".join(strip_accents(str(value)).lower().split())


@dataclass(frozen=True)
class Recognizer:
    kind: str
    min_fraction: float
    lo: int = 0
    hi: int = 0
    values: frozenset = frozenset()
    pattern: str = ""

    def accepts(self, value: Any) -> bool:
        if self.kind == "INT_RANGE":
            return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi
        if self.kind == "LEXICON":
            return normalize_value(value) in self.values
        return re.fullmatch(self.pattern, render_value(value), flags=re.IGNORECASE) is not None

    def score(self, values: Iterable[Any]) -> float:
        """Fraction of values accepted, or 0 when below ``min_fraction``."""
        values = list(values)
        if not values:
            return 0.0
        fraction = sum(self.accepts(v) for v in values) / len(values)
        return fraction if fraction >= self.min_fraction else 0.0


@dataclass(frozen=True)
class Concept:
    concept_id: str
    label: str
    synonyms: dict = field(default_factory=dict, compare=False, hash=False)
    recognizer: Recognizer | None = None
    dimension: bool = True

    @property
    def terms(self) -> list[str]:
        out = [self.label]
        for lang in sorted(self.synonyms):
            out.extend(self.synonyms[lang])
        return out


def _parse_recognizer(obj: Any, where: str) -> Recognizer:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: recognizer must be an object")
    kind = obj.get("kind")
    fraction = obj.get("min_fraction")
    if not isinstance(fraction, (int, float)) or not 0 < fraction <= 1:
        raise SchemaError(f"{where}.min_fraction: must be in (0, 1]")
    if kind == "INT_RANGE":
        return Recognizer(kind, float(fraction), lo=int(obj["lo"]), hi=int(obj["hi"]))
    if kind == "LEXICON":
        return Recognizer(kind, float(fraction),
                          values=frozenset(normalize_value(v) for v in obj.get("values", [])))
    if kind == "PATTERN":
        try:
            re.compile(obj["pattern"])
        except (KeyError, re.error) as exc:
            raise SchemaError(f"{where}.pattern: {exc}") from exc
        return Recognizer(kind, float(fraction), pattern=obj["pattern"])
    raise SchemaError(f"{where}.kind: unknown recognizer kind {kind!r}")


def parse_taxonomy(obj: Any) -> list[Concept]:
    if isinstance(obj, dict):
        if obj.get("version") != TAXONOMY_VERSION:
            raise SchemaError(f"taxonomy version {obj.get('version')!r} is not supported")
        items = obj.get("concepts")
    else:
        items = obj
    if not isinstance(items, list) or not items:
        raise SchemaError("taxonomy must contain a non-empty list of concepts")
    concepts, seen = [], set()
    for k, item in enumerate(items):
        where = f"concepts[{k}]"
        if not isinstance(item, dict) or not isinstance(item.get("id"), str):
            raise SchemaError(f"{where}.id: must be a string")
        if item["id"] in seen:
            raise SchemaError(f"{where}.id: duplicate concept id {item['id']!r}")
        seen.add(item["id"])
        synonyms = item.get("synonyms", {})
        if not isinstance(synonyms, dict):
            raise SchemaError(f"{where}.synonyms: must map language to a list of terms")
        recognizer = item.get("recognizer")
        concepts.append(Concept(
            item["id"], str(item.get("label", item["id"])),
            {lang: list(terms) for lang, terms in synonyms.items()},
            _parse_recognizer(recognizer, f"{where}.recognizer") if recognizer is not None else None,
            bool(item.get("dimension", True)),
        ))
    return concepts


def _read_json(path: str | Path | None, default_name: str) -> Any:
    try:
        if path is None:
            text = resources.files("tabweave").joinpath("data").joinpath(default_name).read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path or default_name}: {exc.msg} at line {exc.lineno}") from exc


def load_taxonomy(path: str | Path | None = None) -> list[Concept]:
    """Load a taxonomy file, or the bundled default when ``path`` is None."""
    try:
        return parse_taxonomy(_read_json(path, "taxonomy.json"))
    except SchemaError as exc:
        raise SchemaError(f"{path or 'taxonomy.json'}: {exc}") from None


class Lexicon:
    """Synonym sets; two terms are synonyms when they share a set."""

    def __init__(self, synsets: Iterable[Iterable[str]] = ()):
        self._sets: dict[str, set[int]] = {}
        for k, synset in enumerate(synsets):
            for term in synset:
                self._sets.setdefault(normalize_text(term), set()).add(k)

    def synonyms(self, a: str, b: str) -> bool:
        sa = self._sets.get(normalize_text(a))
        sb = self._sets.get(normalize_text(b))
        return bool(sa and sb and sa & sb)


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    obj = _read_json(path, "lexicon.json")
    if not isinstance(obj, dict) or obj.get("version") != LEXICON_VERSION:
        raise SchemaError(f"{path or 'lexicon.json'}: unsupported lexicon version")
    synsets = obj.get("synsets")
    if not isinstance(synsets, list) or not all(isinstance(s, list) for s in synsets):
        raise SchemaError(f"{path or 'lexicon.json'}: synsets must be a list of lists")
    return Lexicon(synsets)
