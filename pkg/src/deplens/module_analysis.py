"""Module-layer analyses: redundancy, build critical path, containment, import usage."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .core_graph import (
    CycleError,
    DepGraph,
    DottedName,
    condense,
    induced_subgraph,
    lower_median,
    topological_levels,
)

# Parallelism figure quoted for the full Mathlib module graph. It disagrees with
# |V| / path length (7563 / 161 = 47.0), so both are reported side by side.
REFERENCE_PARALLELISM_RATIO = 22.4


def _topo_order(g: DepGraph) -> np.ndarray:
    levels = topological_levels(g)
    return np.lexsort((np.arange(g.n_nodes), levels))


def descendant_bitsets(g: DepGraph) -> list[int]:
    """``reach[v]`` has bit ``u`` set iff a path of length >= 1 leads v -> u. Needs a DAG."""
    reach = [0] * g.n_nodes
    for v in _topo_order(g)[::-1].tolist():
        acc = 0
        for w in g.successors(v).tolist():
            acc |= reach[w] | (1 << w)
        reach[v] = acc
    return reach


def reachability(g: DepGraph) -> list[int]:
    """Like :func:`descendant_bitsets` but defined for cyclic graphs too."""
    try:
        return descendant_bitsets(g)
    except CycleError:
        pass
    cg, part = condense(g)
    creach = descendant_bitsets(cg)
    members = [0] * cg.n_nodes
    sizes = part.sizes
    for v, c in enumerate(part.labels.tolist()):
        members[c] |= 1 << v
    expand = []
    for c in range(cg.n_nodes):
        acc = members[c] if sizes[c] > 1 else 0
        bits = creach[c]
        while bits:
            low = bits & -bits
            acc |= members[low.bit_length() - 1]
            bits ^= low
        expand.append(acc)
    return [expand[c] for c in part.labels.tolist()]


def reaches(reach: Sequence[int], u: int, v: int) -> bool:
    return bool(reach[u] >> v & 1)


# -- transitive reduction ----------------------------------------------------


@dataclass(frozen=True)
class ReductionResult:
    reduced: DepGraph
    removed: np.ndarray  # edge ids of the input graph
    n_original: int

    @property
    def n_removed(self) -> int:
        return len(self.removed)

    @property
    def redundancy_rate(self) -> float:
        return self.n_removed / self.n_original if self.n_original else 0.0


def transitive_reduction(g: DepGraph) -> ReductionResult:
    """Drop every edge (u, v) for which another path u -> ... -> v exists."""
    reach = descendant_bitsets(g)
    redundant = np.zeros(g.n_edges, dtype=bool)
    for u in range(g.n_nodes):
        lo, hi = int(g.out_ptr[u]), int(g.out_ptr[u + 1])
        if hi - lo < 2:
            continue
        succ = g.dst[lo:hi].tolist()
        via = 0
        for w in succ:
            via |= reach[w]
        if not via:
            continue
        for i, v in enumerate(succ):
            if via >> v & 1:
                redundant[lo + i] = True
    reduced = induced_subgraph(g, np.ones(g.n_nodes, dtype=bool), ~redundant)
    return ReductionResult(reduced, np.flatnonzero(redundant), g.n_edges)


# -- critical path ------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPath:
    nodes: tuple[int, ...]
    names: tuple[str, ...]
    total_weight: float
    sequential_weight: float
    n_graph_nodes: int
    reference_ratio: float = REFERENCE_PARALLELISM_RATIO

    @property
    def length(self) -> int:
        return len(self.nodes)

    @property
    def speedup(self) -> float:
        """Sequential build time over critical-path time."""
        return self.sequential_weight / self.total_weight if self.total_weight else float("nan")

    @property
    def parallelism_ratio(self) -> float:
        return self.n_graph_nodes / self.length if self.length else float("nan")


def node_weights(g: DepGraph, weights: "Mapping[str, float] | Sequence[float] | np.ndarray | None") -> np.ndarray:
    """Per-node weight vector; a mapping is keyed by node name, missing names weigh 0."""
    if weights is None:
        return np.ones(g.n_nodes)
    if isinstance(weights, Mapping):
        return np.array([float(weights.get(n, 0.0)) for n in g.names()])
    arr = np.asarray(weights, dtype=float)
    if arr.shape != (g.n_nodes,):
        raise ValueError("weight vector length must equal the node count")
    return arr


def critical_path(g: DepGraph, weights=None, rtol: float = 1e-12) -> CriticalPath:
    """Maximum node-weight source-to-sink path.

    Ties (within ``rtol``) go to the lexicographically smallest id sequence.
    ``weights=None`` weighs every node 1, giving the longest path in nodes.
    """
    w = node_weights(g, weights)
    if (w < 0).any():
        raise ValueError("node weights must be nonnegative")
    n = g.n_nodes
    if n == 0:
        return CriticalPath((), (), 0.0, 0.0, 0)
    best = np.zeros(n)
    nxt = np.full(n, -1, dtype=np.int64)
    for v in _topo_order(g)[::-1].tolist():
        succ = g.successors(v)
        if len(succ):
            vals = best[succ]
            top = vals.max()
            # successors are sorted, so the first near-maximal one is the smallest id
            pick = int(np.flatnonzero(vals >= top - rtol * max(abs(top), 1.0))[0])
            nxt[v] = succ[pick]
            best[v] = w[v] + top
        else:
            best[v] = w[v]
    sources = np.flatnonzero(g.in_degree() == 0)
    top = best[sources].max()
    v = int(sources[np.flatnonzero(best[sources] >= top - rtol * max(abs(top), 1.0))[0]])
    path = [v]
    while nxt[v] >= 0:
        v = int(nxt[v])
        path.append(v)
    total = float(w[path].sum())
    return CriticalPath(tuple(path), tuple(g.name(p) for p in path), total, float(w.sum()), n)


# -- containment ----------------------------------------------------------------


@dataclass(frozen=True)
class Containment:
    k: int
    ratio: float
    group_count: int
    contained: int
    n_edges: int


def module_containment(g: DepGraph, k: int) -> Containment:
    """Share of edges whose endpoint names agree on their first ``k`` components."""
    if k < 1:
        raise ValueError("k must be >= 1")
    keys: dict[DottedName, int] = {}
    lab = np.fromiter((keys.setdefault(nd.name.truncate(k), len(keys)) for nd in g.nodes), dtype=np.int64, count=g.n_nodes)
    same = int((lab[g.src] == lab[g.dst]).sum()) if g.n_edges else 0
    return Containment(k, same / g.n_edges if g.n_edges else 0.0, len(keys), same, g.n_edges)


# -- cross-layer import analysis ---------------------------------------------------


def map_to_modules(gd: DepGraph, gm: DepGraph) -> np.ndarray:
    """Module-graph id of each declaration's module, -1 when unknown or absent."""
    index = gm.index
    return np.fromiter(
        (-1 if nd.module is None else index.get(str(nd.module), -1) for nd in gd.nodes), dtype=np.int64, count=gd.n_nodes
    )


def file_pairs(gd: DepGraph, decl_module: np.ndarray) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Distinct cross-file (src module, dst module) pairs.

    Returns ``(src, dst, uncovered, intra)`` where ``uncovered`` counts
    declaration edges with an unmapped endpoint and ``intra`` same-file edges.
    """
    decl_module = np.asarray(decl_module, dtype=np.int64)
    a, b = decl_module[gd.src], decl_module[gd.dst]
    covered = (a >= 0) & (b >= 0)
    cross = covered & (a != b)
    n = int(max(decl_module.max(initial=-1) + 1, 1))
    key = np.unique(a[cross] * n + b[cross])
    return key // n, key % n, int((~covered).sum()), int((covered & (a == b)).sum())


DIRECT, TRANSITIVE, UNREACHABLE = 0, 1, 2


@dataclass(frozen=True)
class ImportClassification:
    active: np.ndarray  # bool per module-graph edge
    pair_src: np.ndarray
    pair_dst: np.ndarray
    pair_class: np.ndarray  # DIRECT / TRANSITIVE / UNREACHABLE per file pair
    uncovered_edges: int
    intra_file_edges: int

    @property
    def n_imports(self) -> int:
        return len(self.active)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def n_unused(self) -> int:
        return self.n_imports - self.n_active

    @property
    def n_file_pairs(self) -> int:
        return len(self.pair_class)

    def pair_counts(self) -> dict[str, int]:
        c = np.bincount(self.pair_class, minlength=3)
        return {"direct": int(c[0]), "transitive": int(c[1]), "unreachable": int(c[2])}

    def summary(self) -> dict:
        n_imp, n_pair = self.n_imports, self.n_file_pairs
        pc = self.pair_counts()
        out = {
            "imports": n_imp,
            "active": self.n_active,
            "unused": self.n_unused,
            "active_fraction": self.n_active / n_imp if n_imp else 0.0,
            "file_pairs": n_pair,
            "amplification": n_pair / n_imp if n_imp else float("nan"),
            "uncovered_edges": self.uncovered_edges,
            "intra_file_edges": self.intra_file_edges,
        }
        for k, v in pc.items():
            out[k] = v
            out[f"{k}_fraction"] = v / n_pair if n_pair else 0.0
        return out


def classify_import_edges(gm: DepGraph, gd: DepGraph, decl_module: np.ndarray | None = None) -> ImportClassification:
    """Compare declared imports with the file pairs declarations actually use."""
    if decl_module is None:
        decl_module = map_to_modules(gd, gm)
    ps, pd, uncovered, intra = file_pairs(gd, decl_module)
    n = max(gm.n_nodes, 1)
    used = np.isin(gm.src * n + gm.dst, ps * n + pd)
    cls = np.full(len(ps), UNREACHABLE, dtype=np.int64)
    if len(ps):
        is_import = np.isin(ps * n + pd, gm.src * n + gm.dst)
        cls[is_import] = DIRECT
        reach = reachability(gm)
        for i in np.flatnonzero(~is_import).tolist():
            if reach[int(ps[i])] >> int(pd[i]) & 1:
                cls[i] = TRANSITIVE
    return ImportClassification(used, ps, pd, cls, uncovered, intra)


@dataclass(frozen=True)
class Utilization:
    values: np.ndarray  # per module-graph edge, NaN when excluded
    excluded: int

    @property
    def defined(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]

    def summary(self) -> dict:
        v = self.defined
        if len(v) == 0:
            return {"edges": 0, "excluded": self.excluded, "median": float("nan"), "mean": float("nan"),
                    "q1": float("nan"), "q3": float("nan"), "iqr": float("nan"), "zero_count": 0}
        q1, q3 = np.percentile(v, [25, 75])
        return {
            "edges": int(len(v)),
            "excluded": self.excluded,
            "median": float(lower_median(v)),
            "mean": float(v.mean()),
            "q1": float(q1),
            "q3": float(q3),
            "iqr": float(q3 - q1),
            "zero_count": int((v == 0).sum()),
        }


def import_utilization(gm: DepGraph, gd: DepGraph, decl_module: np.ndarray | None = None) -> Utilization:
    """Per import edge A -> B: share of B's declarations cited from A's declarations."""
    if decl_module is None:
        decl_module = map_to_modules(gd, gm)
    decl_module = np.asarray(decl_module, dtype=np.int64)
    nm = max(gm.n_nodes, 1)
    sizes = np.bincount(decl_module[decl_module >= 0], minlength=gm.n_nodes)
    a = decl_module[gd.src]
    ok = a >= 0
    # distinct (importer module, cited declaration) pairs
    key = np.unique(a[ok] * max(gd.n_nodes, 1) + gd.dst[ok])
    mods, decls = key // max(gd.n_nodes, 1), key % max(gd.n_nodes, 1)
    bm = decl_module[decls]
    keep = bm >= 0
    pair_key, counts = np.unique(mods[keep] * nm + bm[keep], return_counts=True)
    edge_key = gm.src * nm + gm.dst
    refs = np.zeros(gm.n_edges)
    if len(pair_key):
        pos = np.minimum(np.searchsorted(pair_key, edge_key), len(pair_key) - 1)
        hit = pair_key[pos] == edge_key
        refs[hit] = counts[pos[hit]]
    denom = sizes[gm.dst].astype(float)
    values = np.full(gm.n_edges, np.nan)
    defined = denom > 0
    values[defined] = refs[defined] / denom[defined]
    return Utilization(values, int((~defined).sum()))


# -- depth difference -----------------------------------------------------------


def top_level_directory(name: "DottedName | str") -> str:
    """First component below a leading ``Mathlib`` root, else the first component."""
    parts = DottedName.parse(str(name)).components
    if parts[0] == "Mathlib" and len(parts) > 2:
        return parts[1]
    return parts[0]


@dataclass(frozen=True)
class DepthDifference:
    delta: np.ndarray  # per module, NaN when either mean is undefined
    imp_depth: np.ndarray
    use_depth: np.ndarray
    per_group: dict[str, tuple[float, int]]  # group -> (mean delta, module count)

    def summary(self) -> dict:
        d = self.delta[~np.isnan(self.delta)]
        n = len(d)
        if n == 0:
            return {"modules": 0}
        return {
            "modules": n,
            "mean": float(d.mean()),
            "median": float(lower_median(d)),
            "std": float(d.std()),
            "negative": float((d < 0).mean()),
            "positive": float((d > 0).mean()),
            "zero": float((d == 0).mean()),
        }


def depth_difference(
    gm: DepGraph,
    gd: DepGraph,
    decl_module: np.ndarray | None = None,
    group_of: Callable[[DottedName], str] = top_level_directory,
    min_group: int = 30,
) -> DepthDifference:
    """Mean depth of cited modules minus mean depth of imported modules, per module.

    Module depth is the component count of its name; cited modules are the
    distinct modules (other than A) containing declarations A's declarations cite.
    """
    if decl_module is None:
        decl_module = map_to_modules(gd, gm)
    decl_module = np.asarray(decl_module, dtype=np.int64)
    n = gm.n_nodes
    depth = np.array([nd.name.depth for nd in gm.nodes], dtype=float)
    imp_sum = np.bincount(gm.src, weights=depth[gm.dst], minlength=n)
    imp_cnt = gm.out_degree()
    ps, pd, _, _ = file_pairs(gd, decl_module)
    use_sum = np.bincount(ps, weights=depth[pd], minlength=n)
    use_cnt = np.bincount(ps, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        imp = np.where(imp_cnt > 0, imp_sum / np.maximum(imp_cnt, 1), np.nan)
        use = np.where(use_cnt > 0, use_sum / np.maximum(use_cnt, 1), np.nan)
    delta = use - imp
    groups: dict[str, list[float]] = {}
    for v in np.flatnonzero(~np.isnan(delta)).tolist():
        groups.setdefault(group_of(gm.nodes[v].name), []).append(float(delta[v]))
    per_group = {
        k: (float(np.mean(vals)), len(vals)) for k, vals in sorted(groups.items()) if len(vals) >= min_group
    }
    return DepthDifference(delta, imp, use, per_group)
