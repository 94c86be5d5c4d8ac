"""Loading, validating and normalizing on-disk datasets.

File formats
------------
* node file: JSON lines, one object per declaration/module with keys
  ``name, kind, module, attributes, def_height, tactics, marker`` (all but the
  first two optional). ``def_height`` is an integer or ``"abbrev"``/``"opaque"``.
* edge file: CSV with header ``src,dst,origin,synth,auto[,visibility][,weight][,tags]``;
  ``synth``/``auto`` take ``0``, ``1`` or ``?``; ``tags`` is ``;``-separated.
* build weights: CSV ``module,seconds``.
* co-modification: JSON lines ``{"pr_id": ..., "files": [...]}``.
* manifest: JSON list of records (or ``{"records": [...]}``), one per
  (snapshot, layer), with paths relative to the manifest file.

Column names can be remapped per record with ``node_columns`` / ``edge_columns``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .core_graph import (
    KINDS,
    ORIGINS,
    VISIBILITIES,
    CycleError,
    DepGraph,
    DottedName,
    EdgeTable,
    GraphError,
    NodeRecord,
    build_graph,
    induced_subgraph,
    topological_levels,
)

log = logging.getLogger(__name__)

NODE_FIELDS = ("name", "kind", "module", "attributes", "def_height", "tactics", "marker")
EDGE_FIELDS = ("src", "dst", "origin", "synth", "auto", "visibility", "weight", "tags")
_ORIGIN_CODE = {o: i for i, o in enumerate(ORIGINS)}
_FLAG_CODE = {"0": 0, "1": 1, "?": -1, "": -1}
_VIS_CODE = {"": -1, "public": 0, "private": 1}


class DatasetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Issue:
    line: int | None
    code: str
    message: str
    source: str = ""

    def __str__(self) -> str:
        where = f"{self.source}:{self.line}" if self.line is not None else self.source
        return f"{where}: [{self.code}] {self.message}"


class IngestError(ValueError):
    def __init__(self, issues: Sequence[Issue]):
        self.issues = list(issues)
        head = "; ".join(str(i) for i in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(head + more)


# -- nodes ------------------------------------------------------------------


def _read_nodes(
    path: Path, columns: Mapping[str, str] | None = None
) -> tuple[list[NodeRecord], list[Issue]]:
    key = {f: (columns or {}).get(f, f) for f in NODE_FIELDS}
    records: list[NodeRecord] = []
    issues: list[Issue] = []
    seen: dict[str, int] = {}
    src = str(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record is not an object")
            except ValueError as exc:
                issues.append(Issue(lineno, "malformed", f"unparseable record: {exc}", src))
                continue
            name = obj.get(key["name"])
            kind = obj.get(key["kind"])
            if not isinstance(name, str) or not isinstance(kind, str):
                issues.append(Issue(lineno, "malformed", "record needs string 'name' and 'kind'", src))
                continue
            if kind not in KINDS:
                issues.append(Issue(lineno, "unknown-kind", f"unknown kind {kind!r}", src))
                continue
            if name in seen:
                issues.append(Issue(lineno, "duplicate-name", f"{name!r} already defined on line {seen[name]}", src))
                continue
            try:
                attrs = obj.get(key["attributes"])
                tactics = obj.get(key["tactics"])
                rec = NodeRecord(
                    id=len(records),
                    name=DottedName.parse(name),
                    kind=kind,
                    module=obj.get(key["module"]),
                    attributes=None if attrs is None else frozenset(attrs),
                    def_height=obj.get(key["def_height"]),
                    tactics=None if tactics is None else tuple(tactics),
                    marker=obj.get(key["marker"]),
                )
            except (TypeError, ValueError) as exc:
                issues.append(Issue(lineno, "bad-field", str(exc), src))
                continue
            seen[name] = lineno
            records.append(rec)
    return records, issues


def load_nodes(path, columns: Mapping[str, str] | None = None) -> list[NodeRecord]:
    """Read a node file; ids follow record order."""
    records, issues = _read_nodes(Path(path), columns)
    if issues:
        raise IngestError(issues)
    return records


def write_nodes(records: Iterable[NodeRecord], out: "str | Path | IO[str]") -> None:
    """Canonical node serialization (fixed key order, sorted attributes)."""

    def lines():
        for r in records:
            obj: dict = {"name": str(r.name), "kind": r.kind}
            if r.module is not None:
                obj["module"] = str(r.module)
            if r.attributes is not None:
                obj["attributes"] = sorted(r.attributes)
            if r.def_height is not None:
                obj["def_height"] = r.def_height if isinstance(r.def_height, str) else int(r.def_height)
            if r.tactics is not None:
                obj["tactics"] = list(r.tactics)
            if r.marker is not None:
                obj["marker"] = r.marker
            yield json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"

    _write_text(out, lines())


def _write_text(out, chunks: Iterable[str]) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.writelines(chunks)
    else:
        out.writelines(chunks)


# -- edges ------------------------------------------------------------------


class LoadedEdges(EdgeTable):
    """Edge table plus the accounting of rows that could not be resolved."""

    rows: int = 0
    unresolved: int = 0
    unresolved_lines: list[int]


def _read_edges(
    path: Path, id_index: Mapping[str, int], columns: Mapping[str, str] | None = None
) -> tuple[LoadedEdges, list[Issue]]:
    names = {f: (columns or {}).get(f, f) for f in EDGE_FIELDS}
    issues: list[Issue] = []
    src_l: list[int] = []
    dst_l: list[int] = []
    org_l: list[int] = []
    syn_l: list[int] = []
    aut_l: list[int] = []
    vis_l: list[int] = []
    wt_l: list[float] = []
    tags: dict[int, frozenset[str]] = {}
    rows = 0
    unresolved_lines: list[int] = []
    source = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            pos = {f: i for i, f in enumerate(EDGE_FIELDS)}
            pending: list[list[str]] = []
        elif first and first[0].strip() == names["src"]:
            header = [c.strip() for c in first]
            pos = {f: header.index(names[f]) for f in EDGE_FIELDS if names[f] in header}
            pending = []
        else:
            pos = {f: i for i, f in enumerate(EDGE_FIELDS)}
            pending = [first]
        missing = [f for f in ("src", "dst") if f not in pos]
        if missing:
            issues.append(Issue(1, "malformed", f"edge header lacks column(s) {missing}", source))
            empty = LoadedEdges([], [])
            empty.unresolved_lines = []
            return empty, issues

        def cell(row: list[str], f: str) -> str:
            i = pos.get(f)
            return row[i].strip() if i is not None and i < len(row) else ""

        start = 1 if pending else 2
        for lineno, row in enumerate(itertools.chain(pending, reader), start=start):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            rows += 1
            s, d = cell(row, "src"), cell(row, "dst")
            origin = cell(row, "origin") or "unknown"
            synth, auto = cell(row, "synth"), cell(row, "auto")
            vis = cell(row, "visibility")
            wtext = cell(row, "weight")
            if not s or not d:
                issues.append(Issue(lineno, "malformed", "missing endpoint", source))
                continue
            if origin not in _ORIGIN_CODE or synth not in _FLAG_CODE or auto not in _FLAG_CODE or vis not in _VIS_CODE:
                issues.append(Issue(lineno, "malformed", f"bad flag value in row {row!r}", source))
                continue
            try:
                w = float(wtext) if wtext else 1.0
            except ValueError:
                issues.append(Issue(lineno, "malformed", f"non-numeric weight {wtext!r}", source))
                continue
            if not math.isfinite(w):
                issues.append(Issue(lineno, "malformed", f"non-finite weight {wtext!r}", source))
                continue
            if w < 0:
                issues.append(Issue(lineno, "negative-weight", f"negative weight {w}", source))
                continue
            si, di = id_index.get(s), id_index.get(d)
            if si is None or di is None:
                unresolved_lines.append(lineno)
                continue
            t = cell(row, "tags")
            if t:
                tags[len(src_l)] = frozenset(x for x in t.split(";") if x)
            src_l.append(si)
            dst_l.append(di)
            org_l.append(_ORIGIN_CODE[origin])
            syn_l.append(_FLAG_CODE[synth])
            aut_l.append(_FLAG_CODE[auto])
            vis_l.append(_VIS_CODE[vis])
            wt_l.append(w)
    table = LoadedEdges(src_l, dst_l, org_l, syn_l, aut_l, vis_l, wt_l, tags)
    table.rows = rows
    table.unresolved = len(unresolved_lines)
    table.unresolved_lines = unresolved_lines
    return table, issues


def load_edges(path, id_index: Mapping[str, int], columns: Mapping[str, str] | None = None) -> LoadedEdges:
    """Read an edge file, resolving names through ``id_index``.

    Rows whose endpoints are unknown are skipped and counted in
    ``result.unresolved``; malformed rows raise :class:`IngestError`.
    """
    table, issues = _read_edges(Path(path), id_index, columns)
    if issues:
        raise IngestError(issues)
    if table.unresolved:
        log.warning("%s: skipped %d edge rows with unresolved endpoints", path, table.unresolved)
    return table


def _flag_text(code: int) -> str:
    return "?" if code < 0 else str(int(code))


def write_edges(edges: EdgeTable, names: Sequence[str], out: "str | Path | IO[str]") -> None:
    """Canonical edge serialization; ``names[i]`` is the name of node ``i``."""
    with_tags = bool(edges.tags)
    cols = ["src", "dst", "origin", "synth", "auto", "visibility", "weight"] + (["tags"] if with_tags else [])

    def lines():
        yield ",".join(cols) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for i in range(len(edges)):
            vis = int(edges.visibility[i])
            row = [
                names[int(edges.src[i])],
                names[int(edges.dst[i])],
                ORIGINS[int(edges.origin[i])],
                _flag_text(edges.synthesized[i]),
                _flag_text(edges.auto[i]),
                "" if vis < 0 else VISIBILITIES[vis],
                repr(float(edges.weight[i])),
            ]
            if with_tags:
                row.append(";".join(sorted(edges.tags.get(i, ()))))
            writer.writerow(row)
            yield buf.getvalue()
            buf.seek(0)
            buf.truncate()

    _write_text(out, lines())


# -- build weights & co-modification ----------------------------------------


def _read_weights(path: Path) -> tuple[dict[str, float], list[Issue], list[Issue]]:
    weights: dict[str, float] = {}
    issues: list[Issue] = []
    warns: list[Issue] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and [c.strip() for c in row[:2]] == ["module", "seconds"]:
                continue
            if len(row) < 2:
                issues.append(Issue(lineno, "malformed", "expected 'module,seconds'", str(path)))
                continue
            name, text = row[0].strip(), row[1].strip()
            try:
                w = float(text)
            except ValueError:
                issues.append(Issue(lineno, "malformed", f"non-numeric weight {text!r}", str(path)))
                continue
            if not math.isfinite(w):
                issues.append(Issue(lineno, "malformed", f"non-finite weight {text!r}", str(path)))
            elif w < 0:
                issues.append(Issue(lineno, "negative-weight", f"negative weight {w} for {name}", str(path)))
            else:
                weights[name] = w
    if not weights and not issues:
        warns.append(Issue(None, "empty", "build-weight file has no records", str(path)))
    return weights, issues, warns


def load_build_weights(path) -> dict[str, float]:
    """Module name -> compilation seconds."""
    weights, issues, warns = _read_weights(Path(path))
    if issues:
        raise IngestError(issues)
    for w in warns:
        warnings.warn(str(w), DatasetWarning, stacklevel=2)
    return weights


def weights_for(g: DepGraph, weights: Mapping[str, float]) -> np.ndarray:
    """Per-node weight array for ``g``; modules absent from ``weights`` get 0."""
    out = np.zeros(g.n_nodes)
    missing = 0
    for v, node in enumerate(g.nodes):
        w = weights.get(str(node.name))
        if w is None:
            missing += 1
        else:
            out[v] = w
    if missing:
        warnings.warn(f"{missing} modules have no build weight; using 0", DatasetWarning, stacklevel=2)
    return out


def normalize_module_path(text: str) -> DottedName:
    """``Data/Nat/Defs.lean`` -> ``Data.Nat.Defs``; dotted names pass through."""
    text = text.strip()
    if text.endswith(".lean"):
        text = text[: -len(".lean")]
    return DottedName.parse(text.replace("/", "."))


@dataclass(frozen=True)
class PullRequest:
    pr_id: str
    files: frozenset[DottedName]


def _read_comod(path: Path) -> tuple[list[PullRequest], list[Issue]]:
    prs: list[PullRequest] = []
    issues: list[Issue] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                files = obj["files"]
                pr_id = str(obj["pr_id"])
                if not isinstance(files, list):
                    raise TypeError("files must be a list")
                normalized = frozenset(normalize_module_path(f) for f in files)
            except (ValueError, KeyError, TypeError) as exc:
                issues.append(Issue(lineno, "malformed", f"bad PR record: {exc}", str(path)))
                continue
            if not normalized:
                issues.append(Issue(lineno, "empty-pr", f"PR {pr_id} lists no files", str(path)))
                continue
            prs.append(PullRequest(pr_id, normalized))
    return prs, issues


def load_comod(path) -> list[PullRequest]:
    prs, issues = _read_comod(Path(path))
    if issues:
        raise IngestError(issues)
    return prs


# -- manifests --------------------------------------------------------------


@dataclass(frozen=True)
class DatasetManifest:
    layer: str
    node_path: Path
    edge_path: Path
    snapshot_label: str = "default"
    weight_path: Path | None = None
    comod_path: Path | None = None
    content_hash: str | None = None
    node_columns: Mapping[str, str] | None = None
    edge_columns: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if self.layer not in ("module", "declaration"):
            raise ValueError(f"unknown layer {self.layer!r}")

    def files(self) -> list[tuple[str, Path]]:
        out = [("nodes", self.node_path), ("edges", self.edge_path)]
        if self.weight_path is not None:
            out.append(("weights", self.weight_path))
        if self.comod_path is not None:
            out.append(("comod", self.comod_path))
        return out

    def compute_hash(self) -> str:
        h = hashlib.sha256()
        for role, path in self.files():
            data = Path(path).read_bytes()
            h.update(f"{role}:{len(data)}:".encode())
            h.update(data)
        return h.hexdigest()

    def to_json(self, base: Path | None = None) -> dict:
        def rel(p):
            if p is None:
                return None
            if base is None:
                return str(p)
            return os.path.relpath(Path(p).resolve(), base).replace(os.sep, "/")

        obj = {
            "layer": self.layer,
            "snapshot_label": self.snapshot_label,
            "node_path": rel(self.node_path),
            "edge_path": rel(self.edge_path),
        }
        for k in ("weight_path", "comod_path"):
            if getattr(self, k) is not None:
                obj[k] = rel(getattr(self, k))
        for k in ("content_hash", "node_columns", "edge_columns"):
            if getattr(self, k) is not None:
                obj[k] = getattr(self, k)
        return obj


def load_manifest(path) -> list[DatasetManifest]:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("records", [data])
    base = path.parent

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    out = []
    for i, rec in enumerate(data):
        missing = [k for k in ("layer", "node_path", "edge_path") if k not in rec]
        if missing:
            raise IngestError([Issue(i, "malformed", f"manifest record lacks {missing}", str(path))])
        out.append(
            DatasetManifest(
                layer=rec["layer"],
                node_path=resolve(rec["node_path"]),
                edge_path=resolve(rec["edge_path"]),
                snapshot_label=str(rec.get("snapshot_label", "default")),
                weight_path=resolve(rec.get("weight_path")),
                comod_path=resolve(rec.get("comod_path")),
                content_hash=rec.get("content_hash"),
                node_columns=rec.get("node_columns"),
                edge_columns=rec.get("edge_columns"),
            )
        )
    return out


def write_manifest(records: Sequence[DatasetManifest], path, with_hash: bool = True) -> None:
    path = Path(path)
    objs = []
    for r in records:
        obj = r.to_json(path.parent.resolve())
        if with_hash:
            obj["content_hash"] = r.compute_hash()
        objs.append(obj)
    path.write_text(json.dumps(objs, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def manifest_hash(records: Sequence[DatasetManifest]) -> str:
    h = hashlib.sha256()
    for r in sorted(records, key=lambda r: (r.snapshot_label, r.layer)):
        h.update(f"{r.snapshot_label}/{r.layer}:{r.compute_hash()};".encode())
    return h.hexdigest()


# -- validation & assembly --------------------------------------------------


@dataclass
class ValidationReport:
    counts: dict[str, int] = field(default_factory=dict)
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "counts": dict(sorted(self.counts.items())),
            "errors": [str(i) for i in self.errors],
            "warnings": [str(i) for i in self.warnings],
        }


def _structural_issues(nodes: list[NodeRecord], table: EdgeTable, layer: str, source: str):
    """Dangling/duplicate/self-loop/cycle checks. Returns (graph|None, errors, warnings)."""
    errors: list[Issue] = []
    warns: list[Issue] = []
    n = len(nodes)
    if len(table):
        loops = np.flatnonzero(table.src == table.dst)
        for i in loops[:20]:
            errors.append(Issue(None, "self-loop", f"self-loop on {nodes[int(table.src[i])].name}", source))
        key = table.src * max(n, 1) + table.dst
        uniq, counts = np.unique(key, return_counts=True)
        for k in uniq[counts > 1][:20]:
            errors.append(
                Issue(None, "duplicate-edge", f"duplicate edge {nodes[int(k // n)].name}->{nodes[int(k % n)].name}", source)
            )
    if errors:
        return None, errors, warns
    try:
        g = build_graph(nodes, table)
    except GraphError as exc:
        return None, [Issue(None, "graph", str(exc), source)], warns

    allowed = np.zeros(g.n_edges, dtype=bool)
    if layer == "declaration":
        kinds = [nd.kind for nd in g.nodes]
        pairs = 0
        for e in range(g.n_edges):
            u, v = int(g.src[e]), int(g.dst[e])
            if kinds[u] == "inductive" and kinds[v] == "constructor" and g.has_edge(v, u):
                allowed[e] = True
                pairs += 1
        if pairs:
            warns.append(
                Issue(None, "inductive-constructor-cycle", f"{pairs} inductive<->constructor 2-cycles tolerated", source)
            )
    if allowed.any():
        check = induced_subgraph(g, np.ones(g.n_nodes, dtype=bool), ~allowed)
    else:
        check = g
    try:
        topological_levels(check)
    except CycleError as exc:
        names = " -> ".join(str(g.nodes[v].name) for v in exc.cycle)
        errors.append(Issue(None, "cycle", f"dependency cycle: {names}", source))
    return g, errors, warns


def validate(manifest: "DatasetManifest | Sequence[DatasetManifest] | str | Path") -> ValidationReport:
    """Run every loader and structural check; never raises for data problems."""
    if isinstance(manifest, (str, Path)):
        records = load_manifest(manifest)
    elif isinstance(manifest, DatasetManifest):
        records = [manifest]
    else:
        records = list(manifest)
    report = ValidationReport()

    def bump(key: str, n: int) -> None:
        report.counts[key] = report.counts.get(key, 0) + n

    for rec in records:
        tag = f"{rec.snapshot_label}/{rec.layer}"
        missing = [str(p) for _, p in rec.files() if not Path(p).exists()]
        if missing:
            report.errors.append(Issue(None, "missing-file", f"missing {missing}", tag))
            continue
        if rec.content_hash and rec.compute_hash() != rec.content_hash:
            report.errors.append(Issue(None, "hash-mismatch", "content hash differs from manifest", tag))
        nodes, issues = _read_nodes(rec.node_path, rec.node_columns)
        report.errors.extend(issues)
        bump(f"{tag}/nodes", len(nodes))
        index = {str(n.name): n.id for n in nodes}
        table, issues = _read_edges(rec.edge_path, index, rec.edge_columns)
        report.errors.extend(issues)
        bump(f"{tag}/edge_rows", table.rows)
        bump(f"{tag}/edges", len(table))
        bump(f"{tag}/unresolved_edges", table.unresolved)
        if table.unresolved:
            report.warnings.append(
                Issue(None, "unresolved-endpoint", f"{table.unresolved} edge rows reference unknown names", tag)
            )
        if not issues:
            _, errs, warns = _structural_issues(nodes, table, rec.layer, tag)
            report.errors.extend(errs)
            report.warnings.extend(warns)
        if rec.weight_path is not None:
            weights, issues, warns = _read_weights(rec.weight_path)
            report.errors.extend(issues)
            report.warnings.extend(warns)
            bump(f"{tag}/weights", len(weights))
            unweighted = sum(1 for n in nodes if str(n.name) not in weights)
            if weights and unweighted:
                report.warnings.append(Issue(None, "missing-weight", f"{unweighted} modules default to weight 0", tag))
        if rec.comod_path is not None:
            prs, issues = _read_comod(rec.comod_path)
            report.errors.extend(issues)
            bump(f"{tag}/prs", len(prs))
    return report


@dataclass
class Snapshot:
    label: str
    module: DepGraph | None = None
    declaration: DepGraph | None = None
    weights: dict[str, float] | None = None
    comod: list[PullRequest] | None = None
    unresolved: dict[str, int] = field(default_factory=dict)


@dataclass
class Dataset:
    records: list[DatasetManifest]
    snapshots: dict[str, Snapshot]
    content_hash: str

    @property
    def latest(self) -> Snapshot:
        return self.snapshots[list(self.snapshots)[-1]]


def load_layer(rec: DatasetManifest) -> tuple[DepGraph, int]:
    """Load one manifest record into a graph; returns (graph, unresolved edge rows)."""
    if rec.content_hash and rec.compute_hash() != rec.content_hash:
        raise IngestError([Issue(None, "hash-mismatch", "content hash differs from manifest", str(rec.node_path))])
    nodes = load_nodes(rec.node_path, rec.node_columns)
    table = load_edges(rec.edge_path, {str(n.name): n.id for n in nodes}, rec.edge_columns)
    return build_graph(nodes, table), table.unresolved


def load_dataset(manifest) -> Dataset:
    """Load every record of a manifest, grouped by snapshot label (file order)."""
    records = load_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    snaps: dict[str, Snapshot] = {}
    for rec in records:
        snap = snaps.setdefault(rec.snapshot_label, Snapshot(rec.snapshot_label))
        graph, unresolved = load_layer(rec)
        setattr(snap, rec.layer, graph)
        snap.unresolved[rec.layer] = unresolved
        if rec.weight_path is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DatasetWarning)
                snap.weights = load_build_weights(rec.weight_path)
        if rec.comod_path is not None:
            snap.comod = load_comod(rec.comod_path)
    return Dataset(records, snaps, manifest_hash(records))
