"""Optional PNG figures (``--figures``): the cluster map and integrated-table charts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .clustering import ClusterAssignment, LayoutCoordinates  # noqa: E402
from .flatten import FlatTable  # noqa: E402
from .grid import NUMERIC_TYPES  # noqa: E402
from .views import cluster_color  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, out: Path, rel: str) -> str:
    path = out / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return rel


def plot_clusters(assignment: ClusterAssignment, coords: LayoutCoordinates,
                  out: Path, rel: str = "figures/clusters.png") -> str:
    fig, ax = plt.subplots(figsize=(6, 6))
    for k, doc in enumerate(coords.docs):
        x, y = coords.positions[k]
        color = cluster_color(assignment.cluster[doc])
        ax.add_patch(plt.Circle((x, y), coords.radii[k], color=color, alpha=0.7))
        ax.annotate(doc, (x, y), ha="center", va="center", fontsize=8)
    if len(coords.docs):
        pad = float(coords.radii.max()) + 0.2
        ax.set_xlim(coords.positions[:, 0].min() - pad, coords.positions[:, 0].max() + pad)
        ax.set_ylim(coords.positions[:, 1].min() - pad, coords.positions[:, 1].max() + pad)
    ax.set_aspect("equal")
    ax.set_title("document clusters")
    ax.set_xticks([])
    ax.set_yticks([])
    return _save(fig, out, rel)


def plot_integrated(table: FlatTable, out: Path, rel: str) -> str:
    """Line chart of every numeric value column against the first key column."""
    key = table.columns[0]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    xs = table.column(key.name)
    numeric_keys = key.dtype in NUMERIC_TYPES
    for col in table.columns[1:]:
        if col.dimension or col.dtype not in NUMERIC_TYPES:
            continue
        pts = [(x, y) for x, y in zip(xs, table.column(col.name))
               if isinstance(y, (int, float)) and x is not None]
        if not pts:
            continue
        if numeric_keys:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=col.name)
        else:
            pos = {x: k for k, x in enumerate(xs)}
            ax.plot([pos[p[0]] for p in pts], [p[1] for p in pts], marker="o", label=col.name)
    if not numeric_keys:
        ax.set_xticks(range(len(xs)), [str(x) for x in xs], rotation=45)
    ax.set_xlabel(key.name)
    ax.set_title(table.name)
    if ax.lines:
        ax.legend()
    fig.tight_layout()
    return _save(fig, out, rel)
