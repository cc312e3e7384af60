import pytest
from hypothesis import given, strategies as st

from tabweave.config import PipelineConfig, build_config, load_config_file, parse_config_text
from tabweave.errors import ConfigError


def test_defaults():
    cfg = build_config()
    assert cfg == PipelineConfig()
    assert cfg.tau == 0.5 and cfg.min_cells == 4 and cfg.model is None


def test_file_values_are_converted_and_overrides_win():
    values = parse_config_text("# comment\n\ntau = 0.7\nmorphology = yes\nmodel =\ndelimiter = tab\n")
    cfg = build_config(values, {"tau": 0.9})
    assert cfg.tau == 0.9 and cfg.morphology is True and cfg.model is None and cfg.delimiter == "\t"


@pytest.mark.parametrize("text, message", [
    ("tau 0.5", "cfg:1: expected key = value"),
    ("tau = 0.5\ntau = 0.6", "cfg:2: duplicate key 'tau'"),
])
def test_syntax_errors_name_the_line(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config_text(text, "cfg")


@pytest.mark.parametrize("values, message", [
    ({"colour": "red"}, "unknown config key: colour"),
    ({"tau": "0"}, "tau: 0.0 is below"),
    ({"tau": "1.5"}, "tau: 1.5 is above"),
    ({"epsilon": "1"}, "epsilon: 1.0 is above"),
    ({"jobs": "0"}, "jobs: 0 is below"),
    ({"min_cells": "many"}, "min_cells: expected int"),
    ({"morphology": "maybe"}, "morphology: expected bool"),
    ({"delimiter": ";;"}, "single character"),
    ({"tau": "nan"}, "NaN"),
])
def test_invalid_values(values, message):
    with pytest.raises(ConfigError, match=message):
        build_config(values)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config_file(tmp_path / "nope.cfg")
    p = tmp_path / "ok.cfg"
    p.write_text("recommend = 5\n", encoding="utf-8")
    assert build_config(load_config_file(p)).recommend == 5


@given(st.floats(0.001, 1.0), st.integers(1, 50), st.booleans())
def test_serialized_values_parse_back(tau, min_cells, figures):
    cfg = build_config(overrides={"tau": tau, "min_cells": min_cells, "figures": figures})
    text = "\n".join(f"{k} = {'' if v is None else v}" for k, v in cfg.to_json().items()
                     if k != "delimiter")
    assert build_config(parse_config_text(text)) == cfg


def test_encoding_and_include_zero():
    cfg = build_config({"encoding": "UTF8", "include_zero": "on"})
    assert cfg.encoding == "utf-8" and cfg.include_zero is True
    with pytest.raises(ConfigError, match="only utf-8"):
        build_config({"encoding": "latin-1"})
