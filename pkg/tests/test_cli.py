import json

import pytest

from tabweave import __version__
from tabweave.cli import run


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith(f"tabweave {__version__} (formats: bundle=1")


def test_pipeline_manifest_lists_every_file(tmp_path, scenario_paths, capsys):
    assert run(["pipeline", *scenario_paths, "-o", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("pipeline: 2 document(s), 3 table(s), 1 integrated")
    report = json.loads((tmp_path / "run_report.json").read_text())
    assert report["manifest"] == sorted(tree(tmp_path))
    assert "seconds" not in report["documents"][0]


def test_stages_compose_to_the_pipeline(tmp_path, scenario_paths):
    whole, parts = tmp_path / "whole", tmp_path / "parts"
    assert run(["pipeline", *scenario_paths, "-o", str(whole)]) == 0
    for stage in ("detect", "annotate", "match", "cluster", "flatten", "export"):
        assert run([stage, *scenario_paths, "-o", str(parts)]) == 0
    expected = tree(whole)
    del expected["run_report.json"]
    assert tree(parts) == expected


def test_config_errors_exit_2(tmp_path, scenario_paths, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    assert run(["detect", *scenario_paths, "--config", str(cfg), "-o", str(tmp_path)]) == 2
    assert "unknown config key: colour" in capsys.readouterr().err
    assert run(["detect", *scenario_paths, "--tau", "0", "-o", str(tmp_path)]) == 2
    assert run(["detect", *scenario_paths, "--config", str(tmp_path / "none.cfg")]) == 2


def test_input_errors_exit_1(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run(["detect", str(empty), "-o", str(tmp_path / "o")]) == 1
    assert run(["detect", str(tmp_path / "missing.csv"), "-o", str(tmp_path / "o")]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run(["detect", str(broken), "-o", str(tmp_path / "o")]) == 1
    assert "ERROR" in capsys.readouterr().err


def test_duplicate_doc_ids_exit_1(tmp_path, scenario_paths):
    assert run(["detect", scenario_paths[0], scenario_paths[0], "-o", str(tmp_path)]) == 1


def test_blank_sheet_is_not_an_error(tmp_path):
    blank = tmp_path / "blank.csv"
    blank.write_text(",,\n,,\n")
    assert run(["detect", str(blank), "-o", str(tmp_path / "d")]) == 0
    regions = json.loads((tmp_path / "d" / "regions.json").read_text())
    assert regions["documents"][0]["sheets"][0]["regions"] == []
    assert run(["pipeline", str(blank), "-o", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "run_report.json").read_text())
    assert report["documents"][0]["tables"] == 0


def test_flags_override_config_file(tmp_path, scenario_paths):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tau = 0.9\nrecommend = 1\n")
    out = tmp_path / "o"
    assert run(["-q", "pipeline", *scenario_paths, "--config", str(cfg), "--tau", "0.6", "-o", str(out), "-v"]) == 0
    config = json.loads((out / "run_report.json").read_text())["config"]
    assert config["tau"] == 0.6 and config["recommend"] == 1


def test_parallel_run_matches_serial(tmp_path, corpus_paths):
    assert run(["pipeline", *corpus_paths, "-o", str(tmp_path / "a")]) == 0
    assert run(["pipeline", *corpus_paths, "-j", "4", "-o", str(tmp_path / "b")]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_figures_are_png(tmp_path, scenario_paths):
    out = tmp_path / "o"
    assert run(["cluster", *scenario_paths, "--figures", "-o", str(out)]) == 0
    assert run(["flatten", *scenario_paths, "--figures", "-o", str(out)]) == 0
    pngs = sorted(p.relative_to(out).as_posix() for p in out.rglob("*.png"))
    assert pngs == ["figures/clusters.png", "figures/integrated-time-year.png"]
    assert all((out / p).read_bytes().startswith(b"\x89PNG") for p in pngs)


def test_train_then_use_the_model(tmp_path, scenario_paths):
    model = tmp_path / "m.json"
    examples = tmp_path / "ex.jsonl"
    assert run(["train", *scenario_paths, "--model-out", str(model), "--examples-out", str(examples)]) == 0
    assert examples.read_text().count("\n") > 50
    # training from the written examples gives the same model
    again = tmp_path / "m2.json"
    assert run(["train", str(examples), "--model-out", str(again)]) == 0
    assert again.read_bytes() == model.read_bytes()
    rules, nb = tmp_path / "rules", tmp_path / "nb"
    assert run(["annotate", *scenario_paths, "-o", str(rules)]) == 0
    assert run(["annotate", *scenario_paths, "--model", str(model), "-o", str(nb)]) == 0
    a = json.loads((rules / "annotations.json").read_text())
    b = json.loads((nb / "annotations.json").read_text())
    assert b["classifier"] == "naive-bayes"
    # a model trained on the rules' own labels reproduces them here
    assert a["documents"] == b["documents"]


def test_train_rejects_bad_input(tmp_path):
    empty = tmp_path / "none.jsonl"
    empty.write_text("")
    assert run(["train", str(empty), "--model-out", str(tmp_path / "m.json")]) == 1
    assert run(["train", str(empty), "--model-out", str(tmp_path / "m.json"), "--alpha", "0"]) == 2
