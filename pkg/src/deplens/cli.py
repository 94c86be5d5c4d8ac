"""Command-line interface: ``deplens <command> --manifest m.json ...``.

Every command writes one JSON (or flattened CSV) report envelope. Curve data
goes to ``--curves-dir`` as two-column CSV files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import aggregation as agg
from . import centrality as cen
from . import community as com
from . import decomp_stats as dec
from . import evolution as evo
from . import module_analysis as mod
from . import robustness as rob
from . import tail_fit as tf
from .core_graph import (
    CycleError,
    DepGraph,
    GraphError,
    Partition,
    condense,
    connected_components,
    dag_depth_and_widths,
    degree_stats,
)
from .ingest import IngestError, load_dataset, load_manifest, manifest_hash, validate

log = logging.getLogger("deplens")

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class DataError(Exception):
    """Input data cannot support the requested analysis (exit code 1)."""


# -- report plumbing ---------------------------------------------------------------


@dataclass
class Report:
    command: str
    parameters: dict
    payload: dict
    curves: dict[str, tuple[tuple[str, str], list]] = field(default_factory=dict)
    manifest_hash: str | None = None
    wall_time: float | None = None

    def envelope(self) -> dict:
        env = {
            "tool": "deplens",
            "version": __version__,
            "manifest_hash": self.manifest_hash,
            "command": self.command,
            "parameters": self.parameters,
            "payload": self.payload,
        }
        if self.curves:
            env["curves"] = {k: {"columns": list(cols), "rows": rows} for k, (cols, rows) in sorted(self.curves.items())}
        if self.wall_time is not None:
            env["wall_time"] = self.wall_time
        return clean(env)


def clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, NaN/inf -> None, tuples -> lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (set, frozenset)):
        return sorted(clean(v) for v in obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
        return out
    if isinstance(obj, list):
        out = []
        for i, v in enumerate(obj):
            out.extend(flatten(v, f"{prefix}[{i}]"))
        return out
    return [(prefix, obj)]


def render(report: Report, fmt: str) -> str:
    env = report.envelope()
    if fmt == "json":
        return json.dumps(env, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in flatten(env):
        w.writerow([k, "" if v is None else json.dumps(v, ensure_ascii=False) if not isinstance(v, str) else v])
    return buf.getvalue()


def emit_curves(report: "Report | dict", out_dir) -> list[Path]:
    """Write each curve as ``<command>_<name>.csv`` with a header row."""
    env = report.envelope() if isinstance(report, Report) else report
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, curve in sorted(env.get("curves", {}).items()):
        path = out / f"{env['command']}_{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(curve["columns"])
            for row in curve["rows"]:
                w.writerow(["" if v is None else v for v in row])
        written.append(path)
    return written


# -- data access ----------------------------------------------------------------


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self._dataset = None

    def child(self, args: argparse.Namespace) -> "Context":
        c = Context(args)
        c._dataset = self.dataset
        return c

    @property
    def dataset(self):
        if self._dataset is None:
            if not self.args.manifest:
                raise DataError("--manifest is required")
            self._dataset = load_dataset(self.args.manifest)
        return self._dataset

    def snapshot(self, label: str | None = None):
        ds = self.dataset
        label = label or self.args.snapshot
        if label is None:
            return ds.latest
        if label not in ds.snapshots:
            raise DataError(f"unknown snapshot {label!r}; have {sorted(ds.snapshots)}")
        return ds.snapshots[label]

    def module_graph(self, label=None) -> DepGraph:
        g = self.snapshot(label).module
        if g is None:
            raise DataError("dataset has no module layer")
        return g

    def decl_graph(self, label=None) -> DepGraph:
        g = self.snapshot(label).declaration
        if g is None:
            raise DataError("dataset has no declaration layer")
        return g

    def layer(self, spec: str | None = None, label=None) -> DepGraph:
        spec = spec or self.args.layer
        if spec == "module":
            return self.module_graph(label)
        if spec == "decl":
            return self.decl_graph(label)
        if spec.startswith("ns"):
            return agg.build_ns_graph(self.decl_graph(label), ns_depth(spec)).graph
        raise DataError(f"unknown layer {spec!r}")


def ns_depth(spec: str, default: int = 1) -> int:
    return int(spec.split(":", 1)[1]) if ":" in spec else default


def layer_type(text: str) -> str:
    if text in ("module", "decl") or text == "ns" or (text.startswith("ns:") and text[3:].isdigit() and int(text[3:]) >= 1):
        return text
    raise argparse.ArgumentTypeError("layer must be module, decl or ns:k")


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def require_seed(args) -> int:
    if args.seed is None:
        args._parser.error(f"{args.command} is randomized; pass --seed")
    return args.seed


# -- analysis helpers --------------------------------------------------------------


def _degree_block(g: DepGraph) -> dict:
    out = {}
    for d in ("in", "out"):
        s = degree_stats(g, d)
        out[d] = {"mean": s.mean, "median": s.median, "std": s.std, "max": s.max, "zero_count": s.zero_count}
    return out


def _dag_profile(g: DepGraph):
    try:
        return dag_depth_and_widths(g), False
    except CycleError:
        cg, _ = condense(g)
        return dag_depth_and_widths(cg), True


def _top_in_degree(g: DepGraph, k: int) -> list[dict]:
    return [{"rank": r, "name": n, "in_degree": int(s)} for r, _, n, s in cen.top_k(g.in_degree().astype(float), k, g.names())]


def _partition(ctx: Context, spec: str, g: DepGraph, layer: str) -> Partition:
    """Partition spec: community | module | ns:k | dir:k."""
    if spec == "community":
        return com.louvain(com.undirected_projection(g), require_seed(ctx.args), ctx.args.resolution).partition
    if spec == "module":
        if layer != "decl":
            raise DataError("module partition only applies to the declaration layer")
        grp = agg.module_grouping(g)
        if not grp.covered.all():
            keys = [grp.names[l] if l >= 0 else "?" for l in grp.labels.tolist()]
            return Partition.from_values(keys)
        return grp.to_partition()
    if spec.startswith("ns"):
        k = ns_depth(spec)
        return Partition.from_values([agg.truncate_namespace(nd.name, k) for nd in g.nodes])
    if spec.startswith("dir"):
        k = ns_depth(spec)
        return Partition.from_values([str(nd.name.truncate(k)) for nd in g.nodes])
    raise DataError(f"unknown partition {spec!r}")


# -- commands --------------------------------------------------------------------


def cmd_validate(ctx: Context) -> Report:
    rep = validate(ctx.args.manifest)
    try:
        h = manifest_hash(load_manifest(ctx.args.manifest))
    except OSError:
        h = None
    report = Report("validate", {}, rep.to_json(), manifest_hash=h)
    report.exit_code = EXIT_OK if rep.accepted else EXIT_INVALID
    return report


def cmd_stats(ctx: Context) -> Report:
    a = ctx.args
    what = set(a.what.split(","))
    if "all" in what:
        what = {"degree", "height", "attributes", "tactics", "depth", "zero-citation", "markers"}
    g = ctx.layer()
    payload: dict = {"nodes": g.n_nodes, "edges": g.n_edges}
    curves = {}
    if "degree" in what:
        payload["degree"] = _degree_block(g)
        prof, condensed = _dag_profile(g)
        wcc = connected_components(g, "weak")
        payload["dag"] = {"depth": prof.depth, "max_width": prof.max_width, "median_width": prof.median_width,
                          "source_layer_width": prof.widths[0] if prof.widths else 0, "condensed": condensed}
        payload["components"] = {"weak": wcc.n_groups,
                                  "giant_fraction": float(wcc.sizes.max() / g.n_nodes) if g.n_nodes else 0.0}
        payload["top_in_degree"] = _top_in_degree(g, a.top_k)
        curves["layer_widths"] = (("level", "width"), [[i, w] for i, w in enumerate(prof.widths)])
        hist = degree_stats(g, "in").histogram
        curves["in_degree_histogram"] = (("in_degree", "count"), [[k, v] for k, v in sorted(hist.items())])
    if "height" in what:
        payload["def_height"] = dec.def_height_stats(g).to_json()
    if "attributes" in what:
        payload["attributes"] = dec.attribute_stats(g).to_json()
    if "tactics" in what:
        grouping = agg.namespace_grouping(g, 1)
        ts = dec.tactic_stats(g, grouping, min_proofs=a.min_group)
        payload["tactics"] = {
            "proofs": ts.proofs, "steps": ts.steps, "steps_mean": ts.steps_mean,
            "steps_median": ts.steps_median, "steps_max": ts.steps_max,
            "top": [{"tactic": t, "count": c, "share": s} for t, c, s in ts.profile.top(a.top_k)],
            "groups": list(ts.group_names),
            "jsd": ts.jsd_matrix,
        }
    if "depth" in what:
        depth = agg.name_depth(g) if a.layer == "module" else agg.namespace_depth(g)
        payload["depth_asymmetry"] = agg.depth_asymmetry(g, depth).to_json()
    if "zero-citation" in what:
        kinds = a.kinds.split(",") if a.kinds else None
        overall, rows = agg.zero_citation_by_group(g, agg.namespace_grouping(g, 1), kinds, a.min_group)
        payload["zero_citation"] = {
            "total": overall.total, "zero": overall.zero, "rate": overall.rate,
            "groups": [{"group": k, "total": v.total, "zero": v.zero, "rate": v.rate} for k, v in list(rows.items())[: a.top_k]],
        }
    if "markers" in what:
        labels = [nd.marker for nd in g.nodes]
        if any(x is not None for x in labels):
            pr = cen.pagerank(g)
            rows, ratio = cen.group_compare(g, labels, pr, ratio=("theorem", "lemma"))
            payload["markers"] = {"groups": {k: v.__dict__ for k, v in rows.items()}, "ratio": ratio}
    params = {"layer": a.layer, "what": sorted(what), "top_k": a.top_k, "min_group": a.min_group}
    return Report("stats", params, payload, curves)


def cmd_reduce(ctx: Context) -> Report:
    g = ctx.layer()
    res = mod.transitive_reduction(g)
    before = dag_depth_and_widths(g)
    after = dag_depth_and_widths(res.reduced)
    names = g.names()
    payload = {
        "edges": g.n_edges,
        "removed": res.n_removed,
        "reduced_edges": res.reduced.n_edges,
        "redundancy_rate": res.redundancy_rate,
        "depth": before.depth,
        "levels_preserved": bool(np.array_equal(before.levels, after.levels)),
        "in_degree_max": {"original": int(g.in_degree().max(initial=0)),
                          "reduced": int(res.reduced.in_degree().max(initial=0))},
        "removed_edges": [[names[int(g.src[e])], names[int(g.dst[e])]] for e in res.removed],
    }
    curves = {
        "layer_widths_original": (("level", "width"), [[i, w] for i, w in enumerate(before.widths)]),
        "layer_widths_reduced": (("level", "width"), [[i, w] for i, w in enumerate(after.widths)]),
    }
    return Report("reduce", {"layer": ctx.args.layer}, payload, curves)


def cmd_critical_path(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.layer()
    weights = None if a.uniform else ctx.snapshot().weights
    if weights is None and not a.uniform:
        log.warning("no build weights in manifest; using uniform weights")
    cp = mod.critical_path(g, weights)
    payload = {
        "path": list(cp.names),
        "length": cp.length,
        "total_weight": cp.total_weight,
        "sequential_weight": cp.sequential_weight,
        "speedup": cp.speedup,
        "parallelism_ratio": cp.parallelism_ratio,
        "reference_parallelism_ratio": cp.reference_ratio,
    }
    return Report("critical-path", {"layer": a.layer, "uniform": bool(a.uniform or weights is None)}, payload)


def cmd_containment(ctx: Context) -> Report:
    a = ctx.args
    rows = []
    depths = a.depth or [1, 2, 3, 4, 5]
    if a.layer == "module":
        g = ctx.module_graph()
        for k in depths:
            c = mod.module_containment(g, k)
            rows.append({"depth": k, "ratio": c.ratio, "groups": c.group_count, "contained": c.contained})
    elif a.layer.startswith("ns"):
        g = ctx.decl_graph()
        if ":" in a.layer and not a.depth:
            depths = [ns_depth(a.layer)]
        for k in depths:
            grp = agg.namespace_grouping(g, k)
            rows.append({"depth": k, "ratio": agg.containment_ratio(g, grp), "groups": grp.n_groups})
    else:
        g = ctx.decl_graph()
        grp = agg.module_grouping(g)
        rows.append({"depth": "file", "ratio": agg.containment_ratio(g, grp, "covered"),
                     "ratio_all": agg.containment_ratio(g, grp, "all"), "groups": grp.n_groups})
        for k in depths:
            keys = [None if nd.module is None else str(nd.module.truncate(k)) for nd in g.nodes]
            dg = agg._sorted_grouping(keys)
            rows.append({"depth": k, "ratio": agg.containment_ratio(g, dg, "covered"), "groups": dg.n_groups})
    curves = {"decay": (("depth", "ratio"), [[r["depth"], r["ratio"]] for r in rows if isinstance(r["depth"], int)])}
    return Report("containment", {"layer": a.layer, "depths": depths}, {"rows": rows}, curves)


def cmd_cohesion(ctx: Context) -> Report:
    g = ctx.decl_graph()
    t = agg.module_cohesion(g)
    rows = [{"module": n, "internal": int(i), "external": int(e), "cohesion": float(c)}
            for n, i, e, c in zip(t.names, t.internal, t.external, t.cohesion)]
    hist = np.histogram(t.cohesion, bins=20, range=(0.0, 1.0))[0] if len(t.cohesion) else np.zeros(20, dtype=int)
    curves = {"histogram": (("bin_start", "modules"), [[round(i / 20, 2), int(c)] for i, c in enumerate(hist)])}
    return Report("cohesion", {}, {"summary": t.summary(), "modules": rows}, curves)


def cmd_utilization(ctx: Context) -> Report:
    gm, gd = ctx.module_graph(), ctx.decl_graph()
    u = mod.import_utilization(gm, gd)
    v = u.defined
    hist = np.histogram(v, bins=20, range=(0.0, 1.0))[0] if len(v) else np.zeros(20, dtype=int)
    curves = {"histogram": (("bin_start", "edges"), [[round(i / 20, 2), int(c)] for i, c in enumerate(hist)])}
    return Report("utilization", {}, {"summary": u.summary()}, curves)


def cmd_classify_imports(ctx: Context) -> Report:
    ic = mod.classify_import_edges(ctx.module_graph(), ctx.decl_graph())
    payload = {"summary": ic.summary()}
    dd = mod.depth_difference(ctx.module_graph(), ctx.decl_graph(), min_group=ctx.args.min_group)
    payload["depth_difference"] = {"summary": dd.summary(),
                                   "groups": {k: {"mean": m, "modules": c} for k, (m, c) in dd.per_group.items()}}
    return Report("classify-imports", {"min_group": ctx.args.min_group}, payload)


def cmd_aggregate_ns(ctx: Context) -> Report:
    a = ctx.args
    k = a.depth[0] if a.depth else (ns_depth(a.layer) if a.layer.startswith("ns") else 2)
    gd = ctx.decl_graph()
    wg = agg.build_ns_graph(gd, k)
    g = wg.graph
    cyclic = connected_components(g, "strong").n_groups < g.n_nodes
    payload = {
        "depth": k,
        "nodes": g.n_nodes,
        "edges": g.n_edges,
        "total_weight": wg.total_weight,
        "internal_weight": int(wg.internal.sum()),
        "has_root": wg.has_root,
        "cyclic": bool(cyclic),
        "containment": agg.containment_ratio(gd, agg.namespace_grouping(gd, k)),
        "top_in_degree": _top_in_degree(g, a.top_k),
    }
    if g.n_nodes >= 1:
        degs = g.in_degree()
        if (degs > 0).sum() >= 50 and len(np.unique(degs[degs > 0])) >= 2:
            payload["in_degree_tail"] = tf.fit_powerlaw(degs[degs > 0]).to_json()
    return Report("aggregate-ns", {"depth": k, "top_k": a.top_k}, payload)


def cmd_centrality(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.layer()
    measures = a.measure.split(",") if a.measure != "all" else ["pagerank", "betweenness", "in-degree"]
    payload = {}
    params = {"layer": a.layer, "measures": measures, "top_k": a.top_k, "alpha": a.alpha}
    for m in measures:
        if m == "pagerank":
            pr = cen.pagerank(g, damping=a.alpha)
            payload["pagerank"] = pr.to_json(a.top_k)
        elif m == "betweenness":
            if a.pivots:
                seed = require_seed(a)
                bc = cen.betweenness(g, "pivots", k=min(a.pivots, g.n_nodes), seed=seed)
                params.update(pivots=a.pivots, seed=seed)
            else:
                bc = cen.betweenness(g)
            payload["betweenness"] = bc.to_json(a.top_k)
        elif m == "in-degree":
            payload["in_degree"] = _top_in_degree(g, a.top_k)
        else:
            raise DataError(f"unknown measure {m!r}")
    return Report("centrality", params, payload)


def cmd_community(ctx: Context) -> Report:
    a = ctx.args
    seed = require_seed(a)
    g = ctx.layer()
    ug = com.undirected_projection(g, weighted=a.layer.startswith("ns"))
    res = com.louvain(ug, seed, a.resolution)
    sizes = res.partition.sizes
    names = g.names()
    members = []
    for c in range(min(res.n_communities, a.top_k)):
        idx = res.partition.members(c)
        top = sorted(idx.tolist(), key=lambda v: (-int(g.in_degree()[v]), names[v]))[:5]
        members.append({"community": c, "size": int(sizes[c]), "hubs": [names[v] for v in top]})
    payload = {
        "communities": res.n_communities,
        "modularity": res.modularity,
        "passes": res.passes,
        "q_history": list(res.q_history),
        "sizes": sizes,
        "largest": members,
        "undirected_edges": ug.n_edges,
    }
    params = {"layer": a.layer, "seed": seed, "resolution": a.resolution}
    return Report("community", params, payload)


def cmd_compare_partitions(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.layer()
    pa = _partition(ctx, a.a, g, a.layer)
    pb = _partition(ctx, a.b, g, a.layer)
    res = com.compare_partitions(pa, pb)
    params = {"layer": a.layer, "a": a.a, "b": a.b, "seed": a.seed, "resolution": a.resolution}
    payload = {**res.to_json(), "groups_a": pa.n_groups, "groups_b": pb.n_groups}
    return Report("compare-partitions", params, payload)


def cmd_fit_tail(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.layer()
    deg = g.in_degree() if a.degree == "in" else g.out_degree()
    samples = deg[deg > 0]
    fit = tf.fit_powerlaw(samples, xmin=a.xmin)
    payload = {"fit": fit.to_json(), "dropped_zeros": int((deg == 0).sum())}
    if a.compare:
        payload["comparisons"] = {k: v.to_json() for k, v in tf.compare_alternatives(samples, fit).items()}
    vals, counts = np.unique(samples, return_counts=True)
    ccdf = 1.0 - np.concatenate(([0], np.cumsum(counts)[:-1])) / len(samples)
    curves = {"ccdf": (("degree", "ccdf"), [[int(v), float(c)] for v, c in zip(vals, ccdf)])}
    return Report("fit-tail", {"layer": a.layer, "degree": a.degree, "xmin": a.xmin, "compare": a.compare}, payload, curves)


def cmd_robustness(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.layer()
    payload: dict = {}
    curves = {}
    params: dict = {"layer": a.layer, "strategy": a.strategy, "fractions": a.fractions, "score": a.score}
    base = rob.remove_and_measure(g)
    payload["intact"] = {"wcc_count": base.wcc_count, "gcc_size": base.gcc_size}
    if a.remove_top:
        top = [r[1] for r in cen.top_k(g.in_degree().astype(float), a.remove_top, g.names())]
        m = rob.remove_and_measure(g, top)
        payload["remove_top"] = {"k": a.remove_top, "removed": [g.name(v) for v in top], "wcc_count": m.wcc_count,
                                 "gcc_size": m.gcc_size, "disconnected": m.disconnected_count}
        params["remove_top"] = a.remove_top
    if a.single:
        names = a.single.split(",")
        missing = [n for n in names if n not in g.index]
        if missing:
            raise DataError(f"unknown node(s) {missing}")
        payload["single_node_impact"] = rob.single_node_impact(g, names)
    strategies = ["random", "targeted"] if a.strategy == "both" else [a.strategy]
    scores = None
    if "targeted" in strategies and a.score == "pagerank":
        scores = cen.pagerank(g).values
    for s in strategies:
        if s == "random":
            params.update(seed=require_seed(a), trials=a.trials)
            curve = rob.removal_curve(g, "random", a.fractions, a.trials, a.seed)
        else:
            curve = rob.removal_curve(g, "targeted", a.fractions, scores=scores)
        payload[s] = {"fractions": curve.fractions, "gcc_fraction": curve.gcc_fraction, "gcc_std": curve.gcc_std}
        curves[s] = (("fraction", "gcc_fraction"), [list(r) for r in curve.rows()])
    return Report("robustness", params, payload, curves)


def cmd_decomp(ctx: Context) -> Report:
    a = ctx.args
    g = ctx.decl_graph()
    kinds, mat = dec.inter_kind_flow(g)
    payload = {
        "edge_partitions": dec.edge_partition_stats(g).to_json(),
        "inter_kind_flow": {"kinds": list(kinds), "matrix": mat},
        "boundary": agg.edge_boundary_breakdown(g, agg.module_grouping(g), agg.namespace_grouping(g, a.depth[0] if a.depth else 1)),
    }
    subs = {}
    for tag in a.tags.split(","):
        sg = dec.tagged_subgraph(g, tag)
        row = {"nodes": sg.n_nodes, "edges": sg.n_edges}
        if 0 < sg.n_nodes <= a.diameter_limit:
            row["diameter"] = dec.diameter(sg)
        subs[tag] = row
    payload["tagged_subgraphs"] = subs
    return Report("decomp", {"tags": a.tags, "depth": a.depth[0] if a.depth else 1}, payload)


def cmd_pairs(ctx: Context) -> Report:
    a = ctx.args
    k = a.depth[0] if a.depth else (ns_depth(a.layer) if a.layer.startswith("ns") else 1)
    wg = agg.build_ns_graph(ctx.decl_graph(), k)
    pairs = agg.cross_group_pairs(wg, a.top_k)
    payload = {"pairs": [{"a": x, "b": y, "weight": w} for x, y, w in pairs]}
    return Report("pairs", {"depth": k, "top_k": a.top_k}, payload)


def cmd_snapshot_diff(ctx: Context) -> Report:
    a = ctx.args
    ds = ctx.dataset
    labels = list(ds.snapshots)
    src = a.from_label or labels[0]
    dst = a.to_label or labels[-1]
    rows = evo.growth_indicators([ds.snapshots[l] for l in labels])
    ga, gb = ctx.layer(label=src), ctx.layer(label=dst)
    payload = {
        "growth": [r.to_json() for r in rows],
        "from": src,
        "to": dst,
        "hub_turnover": evo.hub_turnover(ga, gb, a.top_k),
    }
    params = {"layer": a.layer, "from": src, "to": dst, "top_k": a.top_k}
    if a.seed is not None:
        pa = com.louvain(com.undirected_projection(ga), a.seed, a.resolution).partition
        pb = com.louvain(com.undirected_projection(gb), a.seed, a.resolution).partition
        payload["community_persistence"] = evo.community_persistence(evo.labels_by_name(ga, pa), evo.labels_by_name(gb, pb))
        params.update(seed=a.seed, resolution=a.resolution)
    return Report("snapshot-diff", params, payload)


def cmd_comod(ctx: Context) -> Report:
    snap = ctx.snapshot()
    if not snap.comod:
        raise DataError("dataset has no co-modification records")
    cg = evo.build_comod_graph(snap.comod)
    cmp = evo.comod_vs_imports(cg, ctx.module_graph())
    names = cg.names
    edges = [{"a": names[u], "b": names[v], "weight": w} for u, v, w in zip(cg.u.tolist(), cg.v.tolist(), cg.w.tolist())]
    payload = {
        "prs": len(snap.comod),
        "modules": cg.n,
        "edges": edges,
        "classes": cmp.counts(),
        "hidden": [list(p) for p in cmp.hidden],
    }
    return Report("comod", {}, payload)


def cmd_report_all(ctx: Context) -> Report:
    a = ctx.args
    require_seed(a)
    parts = {}
    plan: list[tuple[str, Callable, dict]] = [
        ("stats_module", cmd_stats, {"layer": "module", "what": "degree"}),
        ("stats_decl", cmd_stats, {"layer": "decl", "what": "all"}),
        ("reduce", cmd_reduce, {"layer": "module"}),
        ("critical_path", cmd_critical_path, {"layer": "module", "uniform": False}),
        ("containment_module", cmd_containment, {"layer": "module", "depth": None}),
        ("containment_ns", cmd_containment, {"layer": "ns", "depth": [1, 2]}),
        ("cohesion", cmd_cohesion, {}),
        ("utilization", cmd_utilization, {}),
        ("classify_imports", cmd_classify_imports, {}),
        ("aggregate_ns", cmd_aggregate_ns, {"layer": "ns:2", "depth": None}),
        ("centrality_module", cmd_centrality, {"layer": "module", "measure": "pagerank,in-degree"}),
        ("community_module", cmd_community, {"layer": "module"}),
        ("decomp", cmd_decomp, {"depth": None}),
        ("pairs", cmd_pairs, {"layer": "ns:1", "depth": None}),
        ("robustness", cmd_robustness, {"layer": "decl", "strategy": "both", "remove_top": 0, "single": None}),
    ]
    if ctx.snapshot().comod:
        plan.append(("comod", cmd_comod, {}))
    curves = {}
    for key, fn, overrides in plan:
        sub = argparse.Namespace(**{**vars(a), **overrides})
        sub.command = key
        try:
            r = fn(ctx.child(sub))
        except (DataError, GraphError, ValueError) as exc:
            parts[key] = {"error": str(exc)}
            continue
        parts[key] = {"parameters": r.parameters, "payload": r.payload}
        for name, c in r.curves.items():
            curves[f"{key}_{name}"] = c
    return Report("report-all", {"seed": a.seed}, parts, curves)


def cmd_fixtures(ctx: Context) -> Report:
    from .fixtures import write_toy_dataset

    out = ctx.args.dir
    path = write_toy_dataset(out)
    return Report("fixtures", {}, {"manifest": str(Path(out) / path.name)})


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "reduce": cmd_reduce,
    "critical-path": cmd_critical_path,
    "containment": cmd_containment,
    "cohesion": cmd_cohesion,
    "utilization": cmd_utilization,
    "classify-imports": cmd_classify_imports,
    "aggregate-ns": cmd_aggregate_ns,
    "centrality": cmd_centrality,
    "community": cmd_community,
    "compare-partitions": cmd_compare_partitions,
    "fit-tail": cmd_fit_tail,
    "robustness": cmd_robustness,
    "decomp": cmd_decomp,
    "pairs": cmd_pairs,
    "snapshot-diff": cmd_snapshot_diff,
    "comod": cmd_comod,
    "report-all": cmd_report_all,
    "fixtures": cmd_fixtures,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="dataset manifest (JSON)")
    common.add_argument("--snapshot", help="snapshot label (default: last in manifest)")
    common.add_argument("--seed", type=int, help="seed for randomized analyses")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--curves-dir", help="directory for curve CSV files")
    common.add_argument("--record-time", action="store_true", help="include wall time in the report")
    common.add_argument("--top-k", type=int, default=10)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="deplens", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"deplens {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_, layer="module"):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if layer is not None:
            sp.add_argument("--layer", type=layer_type, default=layer, help="module, decl or ns:k")
        sp.set_defaults(_parser=sp)
        return sp

    add("validate", "check a dataset and report problems", layer=None)
    sp = add("stats", "degree, DAG, height, attribute and tactic statistics")
    sp.add_argument("--what", default="degree", help="comma list of degree,height,attributes,tactics,depth,zero-citation,markers or all")
    sp.add_argument("--kinds", help="kind filter for zero-citation rates")
    sp.add_argument("--min-group", type=int, default=1)
    add("reduce", "transitive reduction and redundancy rate")
    sp = add("critical-path", "maximum-weight build path")
    sp.add_argument("--uniform", action="store_true", help="ignore build weights")
    sp = add("containment", "share of edges staying inside a group")
    sp.add_argument("--depth", type=int_list)
    add("cohesion", "per-module cohesion", layer=None)
    add("utilization", "import utilization distribution", layer=None)
    sp = add("classify-imports", "active/unused imports and direct/transitive file pairs", layer=None)
    sp.add_argument("--min-group", type=int, default=30)
    sp = add("aggregate-ns", "namespace graph at depth k", layer="ns:2")
    sp.add_argument("--depth", type=int_list)
    sp = add("centrality", "PageRank, betweenness and in-degree rankings")
    sp.add_argument("--measure", default="pagerank")
    sp.add_argument("--alpha", type=float, default=0.85, help="PageRank damping")
    sp.add_argument("--pivots", type=int, help="sampled betweenness sources (needs --seed)")
    sp = add("community", "Louvain communities")
    sp.add_argument("--resolution", type=float, default=1.0)
    sp = add("compare-partitions", "entropy, MI, NMI and ARI of two partitions", layer="decl")
    sp.add_argument("--a", default="community", help="community, module, ns:k or dir:k")
    sp.add_argument("--b", default="ns:1")
    sp.add_argument("--resolution", type=float, default=1.0)
    sp = add("fit-tail", "discrete power-law fit of a degree sequence", layer="decl")
    sp.add_argument("--degree", choices=("in", "out"), default="in")
    sp.add_argument("--xmin", type=int)
    sp.add_argument("--compare", action="store_true", help="likelihood-ratio tests against alternatives")
    sp = add("robustness", "connectivity under node removal", layer="decl")
    sp.add_argument("--strategy", choices=("random", "targeted", "both"), default="targeted")
    sp.add_argument("--fractions", type=float_list, default=[0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5])
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--score", choices=("pagerank", "in-degree"), default="pagerank")
    sp.add_argument("--remove-top", type=int, default=0, help="remove the top-k in-degree nodes at once")
    sp.add_argument("--single", help="comma list of node names to remove one at a time")
    sp = add("decomp", "edge partitions, tagged subgraphs, kind flow", layer=None)
    sp.add_argument("--tags", default="coe,extends,instance")
    sp.add_argument("--depth", type=int_list)
    sp.add_argument("--diameter-limit", type=int, default=5000)
    sp = add("pairs", "top cross-namespace pairs", layer="ns:1")
    sp.add_argument("--depth", type=int_list)
    sp = add("snapshot-diff", "growth, hub turnover and community persistence", layer="decl")
    sp.add_argument("--from", dest="from_label")
    sp.add_argument("--to", dest="to_label")
    sp.add_argument("--resolution", type=float, default=1.0)
    add("comod", "co-modification graph versus imports", layer=None)
    sp = add("report-all", "run the standard analyses into one report", layer=None)
    sp.add_argument("--resolution", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--fractions", type=float_list, default=[0.0, 0.05, 0.1, 0.2, 0.3, 0.5])
    sp.add_argument("--score", choices=("pagerank", "in-degree"), default="pagerank")
    sp.add_argument("--tags", default="coe,extends,instance")
    sp.add_argument("--diameter-limit", type=int, default=5000)
    sp.add_argument("--measure", default="pagerank")
    sp.add_argument("--alpha", type=float, default=0.85)
    sp.add_argument("--pivots", type=int)
    sp.add_argument("--min-group", type=int, default=1)
    sp.add_argument("--kinds")
    sp = add("fixtures", "write the bundled toy dataset", layer=None)
    sp.add_argument("dir", help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command not in ("validate", "fixtures") and not args.manifest:
        args._parser.error("--manifest is required")
    if args.command == "validate" and not args.manifest:
        args._parser.error("--manifest is required")
    ctx = Context(args)
    start = time.perf_counter()
    try:
        report = COMMANDS[args.command](ctx)
        if report.manifest_hash is None and ctx._dataset is not None:
            report.manifest_hash = ctx._dataset.content_hash
    except (IngestError, GraphError, DataError, OSError, ValueError) as exc:
        print(f"deplens: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"deplens: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    elapsed = time.perf_counter() - start
    if args.record_time:
        report.wall_time = elapsed
    print(f"deplens: {args.command} finished in {elapsed:.2f}s", file=sys.stderr)
    text = render(report, args.format)
    try:
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        if args.curves_dir:
            emit_curves(report, args.curves_dir)
    except OSError as exc:
        print(f"deplens: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return getattr(report, "exit_code", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
