"""Trainable cell-role classifier: naive Bayes over discretized cell features."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .annotate import CellFeatures, CellRole
from .errors import InputError, SchemaError
from .grid import DataType

MODEL_FORMAT = "tabweave-nb"
MODEL_VERSION = 1

# Left-closed bins: [0, .25), [.25, .75), [.75, 1].
FRACTION_BINS = (0.25, 0.75)

# Neighbour voids are binned at the title threshold (6) used by the rules.
VOID_BINS = (3, 6)

# Discretized features. ``filled`` repeats the void/non-void split of
# ``dtype`` on purpose: the EMPTY class mixes voids inside and outside
# tables, and without the extra vote the inside voids drift to DATA.
FEATURE_VALUES: dict[str, tuple[str, ...]] = {
    "dtype": ("EMPTY", "STRING", "INTEGER", "REAL", "BOOLEAN", "DATE"),
    "filled": ("0", "1"),
    "first_line": ("0", "1"),
    "first_column": ("0", "1"),
    "below_numeric": ("low", "mid", "high"),
    "right_numeric": ("low", "mid", "high"),
    "neighbor_void": ("few", "some", "most"),
    "inside_region": ("0", "1"),
    "corner_void": ("0", "1"),
    "above_region": ("0", "1"),
}


def _bin(x: float) -> str:
    if x < FRACTION_BINS[0]:
        return "low"
    if x < FRACTION_BINS[1]:
        return "mid"
    return "high"


def _void_bin(k: int) -> str:
    return "few" if k < VOID_BINS[0] else "some" if k < VOID_BINS[1] else "most"


def discretize(f: CellFeatures) -> dict[str, str]:
    return {
        "dtype": f.dtype.name,
        "filled": str(int(f.dtype != DataType.EMPTY)),
        "first_line": str(int(f.first_line)),
        "first_column": str(int(f.first_column)),
        "below_numeric": _bin(f.below_numeric_fraction),
        "right_numeric": _bin(f.right_numeric_fraction),
        "neighbor_void": _void_bin(f.neighbor_void_count),
        "inside_region": str(int(f.inside_region)),
        "corner_void": str(int(f.corner_void)),
        "above_region": str(int(not f.inside_region and f.row_in_region < 0)),
    }


@dataclass
class ClassifierModel:
    alpha: float = 1.0
    class_counts: dict[str, int] = field(default_factory=dict)
    # role -> feature -> value -> count
    feature_counts: dict[str, dict[str, dict[str, int]]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.class_counts.values())

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "alpha": self.alpha,
            "bins": list(FRACTION_BINS),
            "void_bins": list(VOID_BINS),
            "features": sorted(FEATURE_VALUES),
            "class_counts": self.class_counts,
            "feature_counts": self.feature_counts,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "ClassifierModel":
        if not isinstance(obj, dict) or obj.get("format") != MODEL_FORMAT:
            raise SchemaError("not a classifier model file")
        if obj.get("version") != MODEL_VERSION:
            raise SchemaError(f"model version {obj.get('version')!r} is not supported "
                              f"(expected {MODEL_VERSION})")
        if tuple(obj.get("bins", ())) != FRACTION_BINS or tuple(obj.get("void_bins", ())) != VOID_BINS:
            raise SchemaError("model was trained with different feature bins")
        if obj.get("features") != sorted(FEATURE_VALUES):
            raise SchemaError("model was trained on a different feature set")
        try:
            alpha = float(obj["alpha"])
            class_counts = {CellRole[k].name: int(v) for k, v in obj["class_counts"].items()}
            feature_counts = obj["feature_counts"]
            counts = [c for per in feature_counts.values() for vals in per.values() for c in vals.values()]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SchemaError(f"malformed model file ({exc})") from None
        if alpha <= 0 or any(c < 0 for c in class_counts.values()) or \
                any(not isinstance(c, int) or c < 0 for c in counts):
            raise SchemaError("model counts must be non-negative integers and alpha positive")
        return cls(alpha, class_counts, feature_counts)

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc.msg}") from exc
        return cls.from_json(obj)


def train(examples: Iterable[tuple[CellFeatures, CellRole]], alpha: float = 1.0) -> ClassifierModel:
    model = ClassifierModel(alpha=alpha)
    for features, role in examples:
        name = CellRole(role).name
        model.class_counts[name] = model.class_counts.get(name, 0) + 1
        per_class = model.feature_counts.setdefault(name, {})
        for feat, value in discretize(features).items():
            slot = per_class.setdefault(feat, {})
            slot[value] = slot.get(value, 0) + 1
    if not model.class_counts:
        raise ValueError("cannot train on an empty example set")
    # Canonical key order so that equal models serialize identically.
    model.class_counts = dict(sorted(model.class_counts.items()))
    model.feature_counts = {
        role: {feat: dict(sorted(vals.items())) for feat, vals in sorted(per.items())}
        for role, per in sorted(model.feature_counts.items())
    }
    return model


def log_joint(model: ClassifierModel, f: CellFeatures) -> dict[CellRole, float]:
    """Unnormalized log posterior per role; roles never seen in training get -inf."""
    values = discretize(f)
    total = model.total
    out = {}
    for role in CellRole:
        count = model.class_counts.get(role.name, 0)
        if count == 0:
            out[role] = -math.inf
            continue
        score = math.log(count / total)
        per_class = model.feature_counts[role.name]
        for feat, value in values.items():
            seen = per_class.get(feat, {}).get(value, 0)
            score += math.log((seen + model.alpha) / (count + model.alpha * len(FEATURE_VALUES[feat])))
        out[role] = score
    return out


def classify(model: ClassifierModel, f: CellFeatures) -> tuple[CellRole, dict[CellRole, float]]:
    scores = log_joint(model, f)
    best = max(scores.values())
    weights = {role: (math.exp(s - best) if s > -math.inf else 0.0) for role, s in scores.items()}
    norm = math.fsum(weights.values())
    posterior = {role: w / norm for role, w in weights.items()}
    # max() keeps the first maximal role, i.e. enum order breaks ties.
    role = max(CellRole, key=lambda r: (scores[r], -r.value))
    return role, posterior


def read_training_jsonl(path: str | Path) -> list[tuple[CellFeatures, CellRole]]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                examples.append((CellFeatures.from_json(obj["features"]), CellRole[obj["role"]]))
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: line {lineno}: bad training record ({exc})") from exc
    return examples


def write_training_jsonl(path: str | Path, examples: Iterable[tuple[CellFeatures, CellRole]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for features, role in examples:
            fh.write(json.dumps({"features": features.to_json(), "role": CellRole(role).name},
                                sort_keys=True) + "\n")
