"""Pipeline configuration: a flat ``key = value`` file plus command-line overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # detection
    min_cells: int = 4
    bridge_rows: int = 1
    bridge_cols: int = 1
    morphology: bool = False
    # classification; None means rule-based
    model: str | None = None
    # matching
    taxonomy: str | None = None
    lexicon: str | None = None
    tau: float = 0.5
    # clustering
    epsilon: float = 0.0
    layout_seed: int = 0
    layout_iterations: int = 500
    layout_step: float = 0.05
    recommend: int = 3
    include_zero: bool = False
    # output
    output: str = "out"
    delimiter: str = ","
    encoding: str = "utf-8"
    dataset_name: str = "tabweave"
    provider: str = ""
    jobs: int = 1
    figures: bool = False
    timings: bool = False

    def to_json(self) -> dict:
        return asdict(self)


# key -> (lowest allowed, highest allowed, inclusive low, inclusive high)
RANGES = {
    "min_cells": (1, None, True, True),
    "bridge_rows": (0, None, True, True),
    "bridge_cols": (0, None, True, True),
    "tau": (0.0, 1.0, False, True),
    "epsilon": (0.0, 1.0, True, False),
    "layout_iterations": (1, 100_000, True, True),
    "layout_step": (0.0, None, False, True),
    "recommend": (0, None, True, True),
    "jobs": (1, 256, True, True),
}

_FIELDS = {f.name: f for f in fields(PipelineConfig)}
# only UTF-8 input is read; these are its accepted spellings
ENCODINGS = {"utf-8", "utf8", "utf-8-sig"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, value: Any) -> Any:
    kind = _FIELDS[key].type
    if not isinstance(value, str):
        if kind == "bool" and isinstance(value, bool):
            return value
        if kind == "int" and isinstance(value, int) and not isinstance(value, bool):
            return value
        if kind == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if value is None and "None" in kind:
            return None
        raise ConfigError(f"{key}: unsupported value {value!r}")
    text = value.strip()
    try:
        if kind == "bool":
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind}, got {value!r}") from None
    if "None" in kind:
        return text or None
    if key == "delimiter":
        text = {"tab": "\t", "\\t": "\t"}.get(text, value)
    return text


def _check_range(key: str, value) -> None:
    if key not in RANGES:
        return
    lo, hi, lo_inc, hi_inc = RANGES[key]
    if lo is not None and (value < lo if lo_inc else value <= lo):
        raise ConfigError(f"{key}: {value} is below the allowed range")
    if hi is not None and (value > hi if hi_inc else value >= hi):
        raise ConfigError(f"{key}: {value} is above the allowed range")
    if isinstance(value, float) and value != value:
        raise ConfigError(f"{key}: NaN is not allowed")


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    """Raw ``key = value`` pairs; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in out:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config_file(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from exc
    return parse_config_text(text, str(path))


def build_config(file_values: Mapping[str, Any] | None = None,
                 overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Merge file values and overrides (overrides win) into a validated config."""
    merged: dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key: {key}")
            merged[key] = _convert(key, value)
    for key, value in merged.items():
        _check_range(key, value)
    if "delimiter" in merged and len(merged["delimiter"]) != 1:
        raise ConfigError(f"delimiter: expected a single character, got {merged['delimiter']!r}")
    if "encoding" in merged:
        if merged["encoding"].lower() not in ENCODINGS:
            raise ConfigError(f"encoding: only utf-8 is supported, got {merged['encoding']!r}")
        merged["encoding"] = "utf-8"
    return PipelineConfig(**merged)
