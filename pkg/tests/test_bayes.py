import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synthetic import labelled_cells
from tabweave.annotate import CellFeatures, CellRole, Orientation, classify_rule_based
from tabweave.bayes import (ClassifierModel, classify, log_joint, read_training_jsonl, train,
                            write_training_jsonl)
from tabweave.errors import SchemaError
from tabweave.grid import DataType

features = st.builds(
    CellFeatures,
    dtype=st.sampled_from(list(DataType)),
    row_in_region=st.integers(-3, 10),
    col_in_region=st.integers(-3, 10),
    first_line=st.booleans(),
    first_column=st.booleans(),
    below_numeric_fraction=st.floats(0, 1),
    right_numeric_fraction=st.floats(0, 1),
    neighbor_void_count=st.integers(0, 8),
    inside_region=st.booleans(),
    orientation=st.sampled_from(list(Orientation)),
    corner_void=st.booleans(),
)


@pytest.fixture(scope="module")
def rule_model():
    return train(labelled_cells(np.random.default_rng(7), 200, classify_rule_based))


def test_empty_training_set_is_rejected():
    with pytest.raises(ValueError):
        train([])


@given(features, features)
def test_single_class_model_predicts_that_class(f, g):
    model = train([(f, CellRole.HEADER)])
    role, posterior = classify(model, g)
    assert role is CellRole.HEADER
    assert posterior[CellRole.HEADER] == 1.0


def test_uninformative_model_breaks_ties_by_enum_order():
    model = ClassifierModel(alpha=1.0, class_counts={r.name: 1 for r in CellRole},
                            feature_counts={r.name: {} for r in CellRole})
    f = CellFeatures(DataType.STRING, 0, 0, False, False, 0.0, 0.0, 0, True, Orientation.ROW_ORIENTED)
    role, posterior = classify(model, f)
    assert role is CellRole.TITLE
    assert all(math.isclose(p, 0.2) for p in posterior.values())


@settings(max_examples=50)
@given(st.lists(st.tuples(features, st.sampled_from(list(CellRole))), min_size=1, max_size=30), features)
def test_duplicated_training_set_scales_counts(examples, probe):
    a, b = train(examples), train(examples * 2)
    assert b.class_counts == {k: 2 * v for k, v in a.class_counts.items()}
    assert b.feature_counts == {r: {f: {v: 2 * c for v, c in vals.items()} for f, vals in per.items()}
                                for r, per in a.feature_counts.items()}
    # with the smoothing constant scaled too, the posterior is unchanged
    b.alpha = 2 * a.alpha
    pa, pb = classify(a, probe), classify(b, probe)
    assert pa[0] == pb[0]
    assert all(math.isclose(pa[1][r], pb[1][r], abs_tol=1e-12) for r in CellRole)


@given(features)
def test_posteriors_normalize(rule_model, f):
    _, posterior = classify(rule_model, f)
    assert abs(math.fsum(posterior.values()) - 1.0) <= 1e-9
    assert all(0.0 <= p <= 1.0 for p in posterior.values())


@given(features, st.floats(-50, 50))
def test_argmax_is_invariant_to_a_common_log_shift(rule_model, f, shift):
    scores = log_joint(rule_model, f)
    shifted = {r: s + shift for r, s in scores.items()}
    best = max(CellRole, key=lambda r: (scores[r], -r.value))
    assert best == max(CellRole, key=lambda r: (shifted[r], -r.value))
    assert best == classify(rule_model, f)[0]


def test_model_trained_on_rules_recognizes_headers(rule_model):
    header_like = CellFeatures(DataType.STRING, 0, 1, True, False, 1.0, 0.0, 2, True,
                               Orientation.ROW_ORIENTED)
    assert classify(rule_model, header_like)[0] is CellRole.HEADER


def test_model_round_trip_is_byte_identical(rule_model, tmp_path):
    path = tmp_path / "m.json"
    rule_model.save(path)
    again = ClassifierModel.load(path)
    assert again.dumps() == rule_model.dumps()


def test_mismatched_model_version_is_refused(rule_model):
    obj = rule_model.to_json()
    obj["version"] = 99
    with pytest.raises(SchemaError, match="version"):
        ClassifierModel.from_json(obj)
    obj = rule_model.to_json()
    obj["bins"] = [0.5, 0.9]
    with pytest.raises(SchemaError):
        ClassifierModel.from_json(obj)


def test_training_jsonl_round_trip(tmp_path):
    examples = labelled_cells(np.random.default_rng(3), 25, classify_rule_based)
    path = tmp_path / "ex.jsonl"
    write_training_jsonl(path, examples)
    assert read_training_jsonl(path) == examples
    assert train(read_training_jsonl(path)).dumps() == train(examples).dumps()
