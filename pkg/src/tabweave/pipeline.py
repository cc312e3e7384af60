"""Corpus-level orchestration behind the command-line subcommands.

Every subcommand works on a :class:`Corpus`, which computes each stage once
on first use. Per-document work (loading, detection, annotation, profiling)
may run in worker processes; everything after that is a reduction over
documents sorted by id, so the worker count never changes output bytes.
"""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

from . import FORMAT_VERSIONS, __version__
from .annotate import AnnotatedTable, annotate_sheet
from .bayes import ClassifierModel
from .clustering import (ClusterAssignment, LayoutCoordinates, LayoutParams, SimilarityMatrix,
                         build_clusters, doc_similarity, layout, recommend, similarity_matrix)
from .config import PipelineConfig
from .detection import DetectionParams, TableRegion, detect_tables
from .dspl import DatasetInfo, export_dspl
from .errors import ExportError, InputError
from .flatten import FlatTable, flatten_table, has_unique_key, integrate, pivot_check
from .grid import CellGrid, load_document
from .matching import (AttributeProfile, Correspondence, attribute_scores, best_concept, combine,
                       concept_match, profile_attributes, _provenance)
from .taxonomy import Concept, Lexicon, load_lexicon, load_taxonomy
from .views import emit_cluster_view

log = logging.getLogger("tabweave")


@dataclass
class TableAnalysis:
    sheet: str
    table: AnnotatedTable
    profiles: list[AttributeProfile]


@dataclass
class SheetAnalysis:
    name: str
    grid: CellGrid
    regions: list[TableRegion]
    tables: list[AnnotatedTable]


@dataclass
class DocAnalysis:
    doc_id: str
    source: str
    sheets: list[SheetAnalysis]
    tables: list[TableAnalysis]
    seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def profiles(self) -> list[AttributeProfile]:
        return [p for t in self.tables for p in t.profiles]


def analyze_document(path: str, cfg: PipelineConfig) -> DocAnalysis:
    """Load one document, detect and annotate its tables, profile their attributes."""
    start = time.perf_counter()
    doc = load_document(path, delimiter=cfg.delimiter)
    model = ClassifierModel.load(cfg.model) if cfg.model else None
    params = DetectionParams(cfg.min_cells, cfg.bridge_rows, cfg.bridge_cols, cfg.morphology)
    sheets, tables, warnings = [], [], []
    for sheet in doc.sheets:
        regions = detect_tables(sheet.grid, params)
        annotated = annotate_sheet(sheet.grid, regions, model)
        sheets.append(SheetAnalysis(sheet.name, sheet.grid, regions, annotated))
        for t in annotated:
            try:
                profiles = profile_attributes(t, sheet.grid, doc.doc_id, sheet.name)
            except ValueError as exc:
                warnings.append(f"{doc.doc_id}/{sheet.name}: {exc}; table skipped")
                continue
            tables.append(TableAnalysis(sheet.name, t, profiles))
    return DocAnalysis(doc.doc_id, doc.source_name, sheets, tables,
                       time.perf_counter() - start, warnings)


def slug(text: str) -> str:
    out = re.sub(r"[^0-9A-Za-z]+", "-", text).strip("-").lower()
    return out or "x"


def table_name(doc_id: str, sheet: str, region_id: int) -> str:
    return f"{slug(doc_id)}-{slug(sheet)}-t{region_id}"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


class Corpus:
    """Lazily computed pipeline stages over a fixed set of inputs."""

    def __init__(self, inputs: Sequence[str | Path], cfg: PipelineConfig):
        if not inputs:
            raise InputError("no input documents given")
        self.inputs = [str(p) for p in inputs]
        self.cfg = cfg

    # -- per-document stage -------------------------------------------------

    @cached_property
    def docs(self) -> list[DocAnalysis]:
        jobs = min(self.cfg.jobs, len(self.inputs))
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(analyze_document, self.inputs, [self.cfg] * len(self.inputs)))
        else:
            results = [analyze_document(p, self.cfg) for p in self.inputs]
        seen: dict[str, str] = {}
        for path, d in zip(self.inputs, results):
            if d.doc_id in seen:
                raise InputError(f"{path}: duplicate document id {d.doc_id!r} (also {seen[d.doc_id]})")
            seen[d.doc_id] = path
            for w in d.warnings:
                log.warning(w)
            log.info("%s: %d sheet(s), %d region(s)", d.doc_id, len(d.sheets),
                     sum(len(s.regions) for s in d.sheets))
        return sorted(results, key=lambda d: d.doc_id)

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.docs]

    @cached_property
    def taxonomy(self) -> list[Concept]:
        return load_taxonomy(self.cfg.taxonomy)

    @cached_property
    def lexicon(self) -> Lexicon:
        return load_lexicon(self.cfg.lexicon)

    # -- matching -----------------------------------------------------------

    @cached_property
    def tags(self) -> dict:
        """Best concept (or None) for every attribute, keyed by attribute id."""
        return {p.attr_id: best_concept(p, self.taxonomy, self.lexicon, self.cfg.tau)
                for d in self.docs for p in d.profiles}

    @cached_property
    def concept_links(self) -> list[Correspondence]:
        out = [c for d in self.docs for p in d.profiles
               for c in concept_match(p, self.taxonomy, self.lexicon, self.cfg.tau)]
        return sorted(out, key=Correspondence.sort_key)

    @cached_property
    def attribute_links(self) -> dict[tuple[str, str], list[Correspondence]]:
        """Attribute-to-attribute correspondences for every document pair (a < b)."""
        out = {}
        docs = self.docs
        for x in range(len(docs)):
            for y in range(x + 1, len(docs)):
                links = []
                for a in docs[x].profiles:
                    for b in docs[y].profiles:
                        scores = attribute_scores(a, b, self.lexicon)
                        confidence = combine(scores)
                        if confidence >= self.cfg.tau:
                            links.append(Correspondence(a.attr_id, b.attr_id, confidence,
                                                        _provenance(scores)))
                out[(docs[x].doc_id, docs[y].doc_id)] = sorted(links, key=Correspondence.sort_key)
        return out

    # -- clustering ---------------------------------------------------------

    @cached_property
    def similarity(self) -> SimilarityMatrix:
        by_id = {d.doc_id: d for d in self.docs}
        scores = {}
        for (a, b), links in self.attribute_links.items():
            pa = [p.attr_id for p in by_id[a].profiles]
            pb = [p.attr_id for p in by_id[b].profiles]
            scores[(a, b)] = doc_similarity(links, pa, pb) if pa and pb else 0.0
        return similarity_matrix(self.doc_ids, scores)

    @cached_property
    def clusters(self) -> ClusterAssignment:
        return build_clusters(self.similarity, self.cfg.epsilon)

    @cached_property
    def layout(self) -> LayoutCoordinates:
        params = LayoutParams(self.cfg.layout_iterations, self.cfg.layout_step, self.cfg.layout_seed)
        return layout(self.similarity, params, self.clusters)

    # -- flattening and integration -----------------------------------------

    @cached_property
    def flat_tables(self) -> list[tuple[TableAnalysis, FlatTable, bool]]:
        out = []
        for d in self.docs:
            grids = {s.name: s.grid for s in d.sheets}
            for ta in d.tables:
                concepts = {p.attr_id.axis: self.tags[p.attr_id] for p in ta.profiles
                            if self.tags[p.attr_id] is not None}
                name = table_name(d.doc_id, ta.sheet, ta.table.region.region_id)
                grid = grids[ta.sheet]
                flat = flatten_table(ta.table, grid, name, concepts, source=d.doc_id)
                ok = pivot_check(flat, ta.table, grid)
                if not ok:
                    log.warning("%s: flattened table does not reproduce its source block", name)
                out.append((ta, flat, ok))
        return out

    @cached_property
    def integrated(self) -> list[FlatTable]:
        """Join tables keyed by the same single dimension concept across documents.

        Only tables whose dimension columns carry exactly one concept and form
        a unique key take part; each group needs tables from two documents.
        """
        groups: dict[str, list[FlatTable]] = {}
        for _, flat, _ in self.flat_tables:
            dims = {c.concept for c in flat.columns if c.dimension and c.concept}
            if len(dims) != 1 or not has_unique_key(flat):
                continue
            if sum(1 for c in flat.columns if c.dimension) != 1:
                continue
            groups.setdefault(dims.pop(), []).append(flat)
        out = []
        for concept_id in sorted(groups):
            members = groups[concept_id]
            if len({t.source for t in members}) < 2:
                continue
            out.append(integrate(members, self.taxonomy, name=f"integrated-{slug(concept_id)}"))
        return out

    # -- reports ------------------------------------------------------------

    def regions_report(self) -> dict:
        return {
            "format": "tabweave-regions", "version": FORMAT_VERSIONS["report"],
            "documents": [{
                "doc_id": d.doc_id, "source": d.source,
                "sheets": [{"name": s.name, "shape": list(s.grid.shape),
                            "regions": [r.to_json() for r in s.regions]} for s in d.sheets],
            } for d in self.docs],
        }

    def annotations_report(self) -> dict:
        return {
            "format": "tabweave-annotations", "version": FORMAT_VERSIONS["report"],
            "classifier": "naive-bayes" if self.cfg.model else "rules",
            "documents": [{
                "doc_id": d.doc_id, "source": d.source,
                "sheets": [{"name": s.name, "tables": [t.to_json() for t in s.tables]}
                           for s in d.sheets],
            } for d in self.docs],
        }

    def correspondences_report(self) -> dict:
        return {
            "format": "tabweave-correspondences", "version": FORMAT_VERSIONS["report"],
            "tau": self.cfg.tau,
            "attributes": [{
                "id": str(p.attr_id), "name": p.name, "count": p.count,
                "concept": self.tags[p.attr_id].concept_id if self.tags[p.attr_id] else None,
            } for d in self.docs for p in d.profiles],
            "pairs": [{"left": a, "right": b, "links": [c.to_json() for c in links]}
                      for (a, b), links in self.attribute_links.items()],
            "concepts": [c.to_json() for c in self.concept_links],
        }

    def clusters_report(self) -> dict:
        out = {"format": "tabweave-clusters", "version": FORMAT_VERSIONS["report"],
               "epsilon": self.cfg.epsilon}
        out.update(self.clusters.to_json())
        out["recommendations"] = {d: recommend(self.similarity, d, self.cfg.recommend,
                                                    self.cfg.include_zero)
                                  for d in self.doc_ids}
        return out


def _write(out: Path, rel: str, text: str) -> str:
    path = out / rel
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise ExportError(f"{path}: cannot write ({exc.strerror or exc})") from exc
    return rel


@dataclass
class StageResult:
    files: list[str]
    summary: str


def cmd_detect(corpus: Corpus, out: Path) -> StageResult:
    n = sum(len(s.regions) for d in corpus.docs for s in d.sheets)
    files = [_write(out, "regions.json", _dump_json(corpus.regions_report()))]
    return StageResult(files, f"detect: {len(corpus.docs)} document(s), {n} region(s)")


def cmd_annotate(corpus: Corpus, out: Path) -> StageResult:
    n = sum(len(s.tables) for d in corpus.docs for s in d.sheets)
    files = [_write(out, "annotations.json", _dump_json(corpus.annotations_report()))]
    return StageResult(files, f"annotate: {n} table(s) annotated")


def cmd_match(corpus: Corpus, out: Path) -> StageResult:
    report = corpus.correspondences_report()
    links = sum(len(p["links"]) for p in report["pairs"])
    files = [_write(out, "correspondences.json", _dump_json(report))]
    return StageResult(files, f"match: {len(report['attributes'])} attribute(s), {links} link(s), "
                              f"{len(report['concepts'])} concept link(s)")


def cmd_cluster(corpus: Corpus, out: Path) -> StageResult:
    files = [_write(out, "similarity.csv", corpus.similarity.to_csv()),
             _write(out, "clusters.json", _dump_json(corpus.clusters_report()))]
    paths = emit_cluster_view(corpus.clusters, corpus.layout, out)
    files += [p.relative_to(out).as_posix() for p in paths]
    if corpus.cfg.figures:
        from .plotting import plot_clusters
        files.append(plot_clusters(corpus.clusters, corpus.layout, out, "figures/clusters.png"))
    k = len(corpus.clusters.cluster_ids)
    return StageResult(files, f"cluster: {len(corpus.docs)} document(s) in {k} cluster(s)")


def cmd_flatten(corpus: Corpus, out: Path) -> StageResult:
    files = [_write(out, f"flat/{flat.name}.csv", flat.to_csv()) for _, flat, _ in corpus.flat_tables]
    files += [_write(out, f"flat/{t.name}.csv", t.to_csv()) for t in corpus.integrated]
    if corpus.cfg.figures:
        from .plotting import plot_integrated
        files += [plot_integrated(t, out, f"figures/{t.name}.png") for t in corpus.integrated]
    bad = sum(1 for _, _, ok in corpus.flat_tables if not ok)
    summary = f"flatten: {len(corpus.flat_tables)} table(s), {len(corpus.integrated)} integrated"
    if bad:
        summary += f", {bad} failed the pivot check"
    return StageResult(files, summary)


def cmd_export(corpus: Corpus, out: Path) -> StageResult:
    tables = [flat for _, flat, _ in corpus.flat_tables] + corpus.integrated
    info = DatasetInfo(corpus.cfg.dataset_name, "; ".join(d.source or d.doc_id for d in corpus.docs),
                       corpus.cfg.provider)
    bundle = export_dspl(tables, info, out / "bundle", corpus.taxonomy)
    files = [f"bundle/{f}" for f in bundle.files]
    return StageResult(files, f"export: bundle with {len(tables)} table(s), "
                              f"{len(bundle.concepts)} concept(s)")


STAGES = {
    "detect": cmd_detect,
    "annotate": cmd_annotate,
    "match": cmd_match,
    "cluster": cmd_cluster,
    "flatten": cmd_flatten,
    "export": cmd_export,
}


def run_report(corpus: Corpus, files: list[str]) -> dict:
    by_id = {d.doc_id: d for d in corpus.docs}
    link_counts = {d: 0 for d in by_id}
    for (a, b), links in corpus.attribute_links.items():
        link_counts[a] += len(links)
        link_counts[b] += len(links)
    concept_counts = {d: 0 for d in by_id}
    for c in corpus.concept_links:
        concept_counts[c.left.doc_id] += 1
    docs = []
    for d in corpus.docs:
        entry = {"doc_id": d.doc_id, "source": d.source,
                 "regions": sum(len(s.regions) for s in d.sheets),
                 "tables": len(d.tables),
                 "attributes": len(d.profiles),
                 "correspondences": link_counts[d.doc_id],
                 "concept_links": concept_counts[d.doc_id]}
        if corpus.cfg.timings:
            entry["seconds"] = round(d.seconds, 6)
        docs.append(entry)
    return {
        "format": "tabweave-run", "version": FORMAT_VERSIONS["report"],
        "tool": {"name": "tabweave", "version": __version__},
        "config": {k: v for k, v in corpus.cfg.to_json().items()
                   if k not in ("output", "jobs", "timings")},
        "documents": docs,
        "clusters": [{"id": c, "docs": corpus.clusters.members(c)} for c in corpus.clusters.cluster_ids],
        "integrated": [{"name": t.name, "columns": t.column_names, "rows": len(t.rows)}
                       for t in corpus.integrated],
        "pivot_check_failures": sorted(f.name for _, f, ok in corpus.flat_tables if not ok),
        "manifest": sorted(files + ["run_report.json"]),
    }


def cmd_pipeline(corpus: Corpus, out: Path) -> StageResult:
    files = []
    for stage in STAGES.values():
        files += stage(corpus, out).files
    _write(out, "run_report.json", _dump_json(run_report(corpus, files)))
    n_int = len(corpus.integrated)
    return StageResult(files + ["run_report.json"],
                       f"pipeline: {len(corpus.docs)} document(s), {len(corpus.flat_tables)} table(s), "
                       f"{n_int} integrated, {len(files) + 1} file(s) written")
