"""Static cluster view: layout JSON and an SVG with one circle per document."""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .clustering import ClusterAssignment, LayoutCoordinates
from .errors import ExportError

# Fixed palette (matplotlib's tab10); cluster k gets PALETTE[(k - 1) % 10].
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

SVG_SIZE = 600
SVG_MARGIN = 60


def cluster_color(cluster_id: int) -> str:
    return PALETTE[(cluster_id - 1) % len(PALETTE)]


def render_svg(assignment: ClusterAssignment, coords: LayoutCoordinates) -> str:
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
             f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
             f'  <rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="#ffffff"/>']
    n = len(coords.docs)
    if n:
        pos = coords.positions
        lo = pos.min(axis=0) - coords.radii.max()
        hi = pos.max(axis=0) + coords.radii.max()
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
        scale = (SVG_SIZE - 2 * SVG_MARGIN) / span
        for k, doc in enumerate(coords.docs):
            x = SVG_MARGIN + (pos[k, 0] - lo[0]) * scale
            y = SVG_MARGIN + (pos[k, 1] - lo[1]) * scale
            r = max(coords.radii[k] * scale, 3.0)
            color = cluster_color(assignment.cluster[doc])
            lines.append(f'  <circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{color}" '
                         f'fill-opacity="0.8" stroke="#333333" data-doc={quoteattr(doc)} '
                         f'data-cluster="{assignment.cluster[doc]}"/>')
            lines.append(f'  <text x="{x:.2f}" y="{y - r - 4:.2f}" font-family="sans-serif" '
                         f'font-size="11" text-anchor="middle">{escape(doc)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_cluster_view(assignment: ClusterAssignment, coords: LayoutCoordinates,
                      out_dir: str | Path) -> list[Path]:
    """Write ``layout.json`` and ``clusters.svg`` into ``out_dir``."""
    out = Path(out_dir)
    paths = [out / "layout.json", out / "clusters.svg"]
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths[0].write_text(json.dumps(coords.to_json(assignment), indent=2, ensure_ascii=False) + "\n",
                            encoding="utf-8")
        paths[1].write_text(render_svg(assignment, coords), encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"{out}: cannot write cluster view ({exc.strerror or exc})") from exc
    return paths
