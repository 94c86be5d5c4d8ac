"""Edge-mechanism partitions, tagged subgraphs, attributes, heights, tactics, kind flow."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core_graph import (
    KINDS,
    ORIGINS,
    DepGraph,
    EdgeRecord,
    Grouping,
    NodeRecord,
    _gather,
    induced_subgraph,
    lower_median,
)

FLATTEN_ATTRIBUTE = "to_additive"


def _split(counts: Mapping[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    return {k: (v / total if total else 0.0) for k, v in counts.items()}


@dataclass(frozen=True)
class EdgePartitionStats:
    origin: dict[str, int]  # statement / proof / both
    origin_unknown: int
    synthesis: dict[str, int]  # explicit / synthesized
    synthesis_unknown: int
    derivation: dict[str, int]  # human / auto
    derivation_unknown: int

    @property
    def origin_fractions(self) -> dict[str, float]:
        return _split(self.origin)

    @property
    def synthesis_ratio(self) -> float:
        return _split(self.synthesis)["synthesized"]

    @property
    def auto_fraction(self) -> float:
        return _split(self.derivation)["auto"]

    def to_json(self) -> dict:
        return {
            "origin": self.origin,
            "origin_fractions": self.origin_fractions,
            "origin_unknown": self.origin_unknown,
            "synthesis": self.synthesis,
            "synthesis_ratio": self.synthesis_ratio,
            "synthesis_unknown": self.synthesis_unknown,
            "derivation": self.derivation,
            "auto_fraction": self.auto_fraction,
            "derivation_unknown": self.derivation_unknown,
        }


def edge_partition_stats(g: DepGraph) -> EdgePartitionStats:
    oc = np.bincount(g.origin, minlength=len(ORIGINS))
    s, a = g.synthesized, g.auto
    return EdgePartitionStats(
        {"statement": int(oc[0]), "proof": int(oc[1]), "both": int(oc[2])},
        int(oc[3]),
        {"explicit": int((s == 0).sum()), "synthesized": int((s == 1).sum())},
        int((s < 0).sum()),
        {"human": int((a == 0).sum()), "auto": int((a == 1).sum())},
        int((a < 0).sum()),
    )


NodePred = "Callable[[NodeRecord], bool] | np.ndarray | None"
EdgePred = "Callable[[EdgeRecord], bool] | np.ndarray | None"


def edge_tag_mask(g: DepGraph, tag: str) -> np.ndarray:
    mask = np.zeros(g.n_edges, dtype=bool)
    for e, tags in g.edge_tags.items():
        if tag in tags:
            mask[e] = True
    return mask


def node_attribute_mask(g: DepGraph, attribute: str) -> np.ndarray:
    return np.fromiter(
        (nd.attributes is not None and attribute in nd.attributes for nd in g.nodes), dtype=bool, count=g.n_nodes
    )


def subgraph_by_predicate(g: DepGraph, node_pred: NodePred = None, edge_pred: EdgePred = None) -> DepGraph:
    """Induced subgraph on passing nodes, keeping passing edges between them.

    Predicates are callables on records or precomputed boolean masks.
    """
    if node_pred is None:
        keep = np.ones(g.n_nodes, dtype=bool)
    elif callable(node_pred):
        keep = np.fromiter((bool(node_pred(nd)) for nd in g.nodes), dtype=bool, count=g.n_nodes)
    else:
        keep = np.asarray(node_pred, dtype=bool)
    if edge_pred is None:
        ekeep = None
    elif callable(edge_pred):
        ekeep = np.fromiter((bool(edge_pred(g.edge(e))) for e in range(g.n_edges)), dtype=bool, count=g.n_edges)
    else:
        ekeep = np.asarray(edge_pred, dtype=bool)
    return induced_subgraph(g, keep, ekeep)


def tagged_subgraph(g: DepGraph, tag: str) -> DepGraph:
    """Edges carrying ``tag`` and the nodes they touch."""
    em = edge_tag_mask(g, tag)
    keep = np.zeros(g.n_nodes, dtype=bool)
    keep[g.src[em]] = True
    keep[g.dst[em]] = True
    return induced_subgraph(g, keep, em)


def diameter(g: DepGraph) -> int:
    """Longest finite directed shortest-path length (unit edges)."""
    if g.n_nodes == 0:
        raise ValueError("diameter of an empty graph is undefined")
    n = g.n_nodes
    best = 0
    for s in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[s] = True
        frontier = np.array([s])
        d = 0
        while True:
            nxt = _gather(g.out_ptr, g.dst, frontier)
            nxt = np.unique(nxt[~seen[nxt]])
            if len(nxt) == 0:
                break
            seen[nxt] = True
            frontier = nxt
            d += 1
        best = max(best, d)
    return best


# -- node-level statistics ---------------------------------------------------


def _records(nodes: "DepGraph | Iterable[NodeRecord]") -> Sequence[NodeRecord]:
    return nodes.nodes if isinstance(nodes, DepGraph) else list(nodes)


@dataclass(frozen=True)
class AttributeStats:
    universe: int
    counts: dict[str, int]
    any_count: int
    flattened: int

    @property
    def shares(self) -> dict[str, float]:
        return {k: (v / self.universe if self.universe else 0.0) for k, v in self.counts.items()}

    @property
    def flattening_ratio(self) -> float:
        return self.flattened / self.universe if self.universe else 0.0

    @property
    def any_share(self) -> float:
        return self.any_count / self.universe if self.universe else 0.0

    def to_json(self) -> dict:
        return {
            "universe": self.universe,
            "counts": self.counts,
            "shares": self.shares,
            "any_count": self.any_count,
            "any_share": self.any_share,
            "flattened": self.flattened,
            "flattening_ratio": self.flattening_ratio,
        }


def attribute_stats(nodes, flatten_attribute: str = FLATTEN_ATTRIBUTE) -> AttributeStats:
    """Prevalence over nodes whose attribute set is known (the attribute universe)."""
    recs = [r for r in _records(nodes) if r.attributes is not None]
    counts: Counter[str] = Counter()
    for r in recs:
        counts.update(r.attributes)
    ordered = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return AttributeStats(
        len(recs), ordered, sum(1 for r in recs if r.attributes), int(counts.get(flatten_attribute, 0))
    )


@dataclass(frozen=True)
class HeightStats:
    regular: int
    abbrev: int
    opaque: int
    median: int | None
    mean: float | None
    max: int | None
    deciles: tuple[int, ...]

    def to_json(self) -> dict:
        return dict(self.__dict__, deciles=list(self.deciles))


def def_height_stats(nodes) -> HeightStats:
    """Counts per height class; summary statistics over regular heights only."""
    heights = [r.def_height for r in _records(nodes) if r.def_height is not None]
    regular = np.array([h for h in heights if not isinstance(h, str)], dtype=np.int64)
    abbrev = sum(1 for h in heights if h == "abbrev")
    opaque = sum(1 for h in heights if h == "opaque")
    if len(regular) == 0:
        return HeightStats(0, abbrev, opaque, None, None, None, ())
    dec = np.percentile(regular, np.arange(10, 100, 10), method="lower")
    return HeightStats(
        len(regular), abbrev, opaque, int(lower_median(regular)), float(regular.mean()), int(regular.max()),
        tuple(int(x) for x in dec),
    )


@dataclass(frozen=True)
class FreqProfile:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def distribution(self) -> dict[str, float]:
        t = self.total
        return {k: v / t for k, v in self.counts.items()} if t else {}

    def share(self, label: str) -> float:
        t = self.total
        return self.counts.get(label, 0) / t if t else 0.0

    def top(self, k: int) -> list[tuple[str, int, float]]:
        return [(lab, c, self.share(lab)) for lab, c in list(self.counts.items())[:k]]

    @classmethod
    def from_counter(cls, counter: Mapping[str, int]) -> "FreqProfile":
        return cls(dict(sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))))


def jsd(p: FreqProfile, q: FreqProfile) -> float:
    """Jensen-Shannon divergence in bits."""
    pd, qd = p.distribution(), q.distribution()
    if not pd or not qd:
        raise ValueError("JSD needs two nonempty profiles")
    labels = sorted(set(pd) | set(qd))
    a = np.array([pd.get(k, 0.0) for k in labels])
    b = np.array([qd.get(k, 0.0) for k in labels])
    m = (a + b) / 2

    def kl(x):
        nz = x > 0
        return float((x[nz] * np.log2(x[nz] / m[nz])).sum())

    return min(max(0.5 * kl(a) + 0.5 * kl(b), 0.0), 1.0)


@dataclass(frozen=True)
class TacticStats:
    profile: FreqProfile
    proofs: int
    steps: int
    steps_mean: float
    steps_median: int
    steps_max: int
    groups: dict[str, FreqProfile]
    group_names: tuple[str, ...]
    jsd_matrix: np.ndarray

    def jsd(self, a: str, b: str) -> float:
        return float(self.jsd_matrix[self.group_names.index(a), self.group_names.index(b)])


def tactic_stats(nodes, grouping: "Grouping | Callable[[NodeRecord], str | None] | None" = None,
                 min_proofs: int = 1) -> TacticStats:
    """Tactic frequencies over tactic-mode proofs (nonempty tactic lists).

    Groups with fewer than ``min_proofs`` tactic proofs are left out of the
    JSD matrix.
    """
    recs = _records(nodes)
    if isinstance(grouping, Grouping):
        keys = [None if l < 0 else grouping.names[l] for l in grouping.labels.tolist()]
    elif callable(grouping):
        keys = [grouping(r) for r in recs]
    else:
        keys = [None] * len(recs)
    total: Counter[str] = Counter()
    per: dict[str, Counter[str]] = {}
    proofs_per: Counter[str] = Counter()
    lengths = []
    for r, key in zip(recs, keys):
        if not r.tactics:
            continue
        lengths.append(len(r.tactics))
        total.update(r.tactics)
        if key is not None:
            per.setdefault(key, Counter()).update(r.tactics)
            proofs_per[key] += 1
    lengths = np.array(lengths, dtype=np.int64)
    groups = {k: FreqProfile.from_counter(per[k]) for k in sorted(per) if proofs_per[k] >= min_proofs}
    names = tuple(groups)
    mat = np.zeros((len(names), len(names)))
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            mat[i, j] = mat[j, i] = jsd(groups[names[i]], groups[names[j]])
    return TacticStats(
        FreqProfile.from_counter(total),
        len(lengths),
        int(lengths.sum()),
        float(lengths.mean()) if len(lengths) else 0.0,
        int(lower_median(lengths)) if len(lengths) else 0,
        int(lengths.max()) if len(lengths) else 0,
        groups,
        names,
        mat,
    )


def inter_kind_flow(g: DepGraph) -> tuple[tuple[str, ...], np.ndarray]:
    """Edge counts by (source kind, target kind) over the kinds present."""
    codes = g.kinds().astype(np.int64)
    present = np.unique(codes)
    pos = np.full(len(KINDS), -1, dtype=np.int64)
    pos[present] = np.arange(len(present))
    k = len(present)
    a, b = pos[codes[g.src]], pos[codes[g.dst]]
    mat = np.bincount(a * k + b, minlength=k * k).reshape(k, k) if k else np.zeros((0, 0), dtype=np.int64)
    return tuple(KINDS[c] for c in present.tolist()), mat
