"""Derived layers (namespace and file graphs) and boundary metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core_graph import DepGraph, DottedName, EdgeTable, Grouping, NodeRecord, lower_median

ROOT = "_root_"


def truncate_namespace(name: "DottedName | str", k: int) -> str:
    """Depth-``k`` namespace key of a declaration name.

    Names with more than ``k`` components keep their first ``k``; shorter
    dotted names fall back to their parent namespace; dotless names map to
    :data:`ROOT`.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    parts = DottedName.parse(str(name)).components
    if len(parts) == 1:
        return ROOT
    if len(parts) >= k + 1:
        return ".".join(parts[:k])
    return ".".join(parts[:-1])


def namespace_grouping(gd: DepGraph, k: int) -> Grouping:
    keys = [truncate_namespace(nd.name, k) for nd in gd.nodes]
    return _sorted_grouping(keys)


def module_grouping(gd: DepGraph) -> Grouping:
    """Declaration -> containing module, -1 where the module is unknown."""
    return _sorted_grouping([None if nd.module is None else str(nd.module) for nd in gd.nodes])


def _sorted_grouping(keys: Sequence[str | None]) -> Grouping:
    names = sorted({k for k in keys if k is not None})
    index = {k: i for i, k in enumerate(names)}
    labels = np.fromiter((-1 if k is None else index[k] for k in keys), dtype=np.int64, count=len(keys))
    return Grouping(labels, tuple(names))


def _as_grouping(grouping) -> Grouping:
    if isinstance(grouping, Grouping):
        return grouping
    if hasattr(grouping, "labels"):
        names = grouping.names or tuple(str(i) for i in range(grouping.n_groups))
        return Grouping(grouping.labels, names)
    labels = np.asarray(grouping, dtype=np.int64)
    return Grouping(labels, tuple(str(i) for i in range(int(labels.max(initial=-1)) + 1)))


@dataclass(frozen=True)
class WeightedGraph:
    """Aggregated graph; edge weight = number of underlying cross-group edges."""

    graph: DepGraph
    internal: np.ndarray  # per group: edges with both endpoints inside
    uncovered: int  # underlying edges with an unmapped endpoint

    @property
    def total_weight(self) -> float:
        return float(self.graph.weight.sum())

    @property
    def has_root(self) -> bool:
        return ROOT in self.graph.index

    def weight(self, a: str, b: str) -> float:
        e = self.graph.edge_id(self.graph.id_of(a), self.graph.id_of(b))
        return float(self.graph.weight[e]) if e >= 0 else 0.0

    def internal_of(self, a: str) -> int:
        return int(self.internal[self.graph.id_of(a)])


def aggregate(g: DepGraph, grouping, kind: str = "namespace") -> WeightedGraph:
    """Collapse ``g`` along ``grouping``; self-pairs become internal counts."""
    grp = _as_grouping(grouping)
    k = grp.n_groups
    a, b = grp.labels[g.src], grp.labels[g.dst]
    covered = (a >= 0) & (b >= 0)
    same = covered & (a == b)
    cross = covered & (a != b)
    internal = np.bincount(a[same], minlength=k)
    key = a[cross] * max(k, 1) + b[cross]
    uniq, counts = np.unique(key, return_counts=True)
    nodes = [NodeRecord(i, DottedName.parse(name), kind) for i, name in enumerate(grp.names)]
    table = EdgeTable(uniq // max(k, 1), uniq % max(k, 1), weight=counts.astype(float))
    return WeightedGraph(DepGraph(nodes, table), internal, int((~covered).sum()))


def build_ns_graph(gd: DepGraph, k: int) -> WeightedGraph:
    return aggregate(gd, namespace_grouping(gd, k), "namespace")


def aggregate_to_files(gd: DepGraph, grouping=None) -> WeightedGraph:
    """File-aggregated graph: one node per module, cross-file pairs only."""
    return aggregate(gd, module_grouping(gd) if grouping is None else grouping, "module")


def containment_ratio(g: DepGraph, grouping, denominator: str = "all") -> float:
    """Fraction of edges whose endpoints share a group.

    With ``denominator="covered"`` only edges with both endpoints mapped count;
    with ``"all"`` unmapped edges count as not contained.
    """
    if denominator not in ("all", "covered"):
        raise ValueError("denominator must be 'all' or 'covered'")
    grp = _as_grouping(grouping)
    a, b = grp.labels[g.src], grp.labels[g.dst]
    covered = (a >= 0) & (b >= 0)
    same = int((covered & (a == b)).sum())
    total = int(covered.sum()) if denominator == "covered" else g.n_edges
    return same / total if total else 0.0


# -- cohesion -----------------------------------------------------------------


@dataclass(frozen=True)
class CohesionTable:
    names: tuple[str, ...]
    internal: np.ndarray
    external: np.ndarray
    cohesion: np.ndarray

    def summary(self) -> dict:
        c = self.cohesion
        if len(c) == 0:
            return {"modules": 0}
        zero = int((c == 0).sum())
        return {
            "modules": len(c),
            "mean": float(c.mean()),
            "median": float(lower_median(c)),
            "std": float(c.std()),
            "max": float(c.max()),
            "zero_count": zero,
            "zero_fraction": zero / len(c),
        }

    def row(self, name: str) -> tuple[int, int, float]:
        i = self.names.index(name)
        return int(self.internal[i]), int(self.external[i]), float(self.cohesion[i])


def module_cohesion(gd: DepGraph, grouping=None) -> CohesionTable:
    """Per module: E_int, E_ext (edges with exactly one endpoint inside), and their ratio."""
    grp = module_grouping(gd) if grouping is None else _as_grouping(grouping)
    k = grp.n_groups
    a, b = grp.labels[gd.src], grp.labels[gd.dst]
    same = (a >= 0) & (a == b)
    internal = np.bincount(a[same], minlength=k)
    diff = ~same
    external = np.bincount(a[diff & (a >= 0)], minlength=k) + np.bincount(b[diff & (b >= 0)], minlength=k)
    tot = internal + external
    coh = np.where(tot > 0, internal / np.maximum(tot, 1), 0.0)
    return CohesionTable(grp.names, internal, external, coh)


# -- edge classes and depth asymmetry -------------------------------------------------

BOUNDARY_CLASSES = ("same_module", "cross_module_same_namespace", "cross_namespace", "missing")


def edge_boundary_breakdown(gd: DepGraph, modules=None, namespaces=None) -> dict[str, int]:
    """Four disjoint classes; an edge lacking either mapping is ``missing``."""
    mod = module_grouping(gd) if modules is None else _as_grouping(modules)
    ns = namespace_grouping(gd, 1) if namespaces is None else _as_grouping(namespaces)
    ma, mb = mod.labels[gd.src], mod.labels[gd.dst]
    na, nb = ns.labels[gd.src], ns.labels[gd.dst]
    missing = (ma < 0) | (mb < 0) | (na < 0) | (nb < 0)
    same_mod = ~missing & (ma == mb)
    same_ns = ~missing & ~same_mod & (na == nb)
    cross = ~missing & ~same_mod & ~same_ns
    return {
        "same_module": int(same_mod.sum()),
        "cross_module_same_namespace": int(same_ns.sum()),
        "cross_namespace": int(cross.sum()),
        "missing": int(missing.sum()),
    }


def name_depth(g: DepGraph) -> np.ndarray:
    """Component count of every node name (module depth)."""
    return np.fromiter((nd.name.depth for nd in g.nodes), dtype=np.int64, count=g.n_nodes)


def namespace_depth(g: DepGraph) -> np.ndarray:
    """Depth of each declaration's enclosing namespace (components minus one)."""
    return name_depth(g) - 1


@dataclass(frozen=True)
class DepthAsymmetry:
    n_edges: int
    same: float
    source_deeper: float
    target_deeper: float
    mean_diff: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def depth_asymmetry(g: DepGraph, depth: np.ndarray) -> DepthAsymmetry:
    """Statistics of depth(src) - depth(dst) over edges with both depths known (>= 0)."""
    depth = np.asarray(depth, dtype=np.int64)
    ds, dd = depth[g.src], depth[g.dst]
    ok = (ds >= 0) & (dd >= 0)
    diff = (ds - dd)[ok]
    n = len(diff)
    if n == 0:
        return DepthAsymmetry(0, 0.0, 0.0, 0.0, 0.0)
    return DepthAsymmetry(
        n, float((diff == 0).mean()), float((diff > 0).mean()), float((diff < 0).mean()), float(diff.mean())
    )


# -- pairs and zero citation -----------------------------------------------------


def cross_group_pairs(wg: "WeightedGraph | DepGraph", top_k: int = 10) -> list[tuple[str, str, float]]:
    """Unordered pairs ranked by w(A->B) + w(B->A); ties by names."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    g = wg.graph if isinstance(wg, WeightedGraph) else wg
    names = g.names()
    totals: dict[tuple[str, str], float] = {}
    for s, d, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
        a, b = sorted((names[s], names[d]))
        totals[(a, b)] = totals.get((a, b), 0.0) + w
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(a, b, w) for (a, b), w in ranked[:top_k]]


@dataclass(frozen=True)
class ZeroCitation:
    total: int
    zero: int

    @property
    def rate(self) -> float:
        return self.zero / self.total if self.total else 0.0


def zero_citation_by_group(
    gd: DepGraph,
    grouping,
    kinds: Iterable[str] | None = None,
    min_group: int = 1,
    mask: np.ndarray | None = None,
) -> tuple[ZeroCitation, dict[str, ZeroCitation]]:
    """Share of (filtered) nodes with in-degree zero, overall and per group.

    Groups with fewer than ``min_group`` filtered nodes are suppressed. The
    per-group dict is ordered by rate descending, then name.
    """
    if min_group < 1:
        raise ValueError("min_group must be >= 1")
    grp = _as_grouping(grouping)
    sel = np.ones(gd.n_nodes, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if kinds is not None:
        allowed = set(kinds)
        sel &= np.fromiter((nd.kind in allowed for nd in gd.nodes), dtype=bool, count=gd.n_nodes)
    zero = gd.in_degree() == 0
    overall = ZeroCitation(int(sel.sum()), int((sel & zero).sum()))
    lab = grp.labels
    ok = sel & (lab >= 0)
    tot = np.bincount(lab[ok], minlength=grp.n_groups)
    zer = np.bincount(lab[ok & zero], minlength=grp.n_groups)
    rows = {
        grp.names[i]: ZeroCitation(int(tot[i]), int(zer[i])) for i in range(grp.n_groups) if tot[i] >= min_group
    }
    ordered = dict(sorted(rows.items(), key=lambda kv: (-kv[1].rate, kv[0])))
    return overall, ordered
