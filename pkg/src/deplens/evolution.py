"""Cross-snapshot comparisons and co-modification analysis."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .community import UndirectedGraph, compare_partitions
from .core_graph import DepGraph, Partition
from .ingest import PullRequest


@dataclass(frozen=True)
class GrowthRow:
    label: str
    declarations: int
    modules: int
    edges: int

    @property
    def density(self) -> float:
        return self.edges / self.declarations if self.declarations else 0.0

    def to_json(self) -> dict:
        return {**self.__dict__, "density": self.density}


def _snapshot_parts(s) -> tuple[str, DepGraph | None, DepGraph | None]:
    if isinstance(s, tuple):
        return s[0], s[1], s[2] if len(s) > 2 else None
    return s.label, getattr(s, "declaration", None), getattr(s, "module", None)


def growth_indicators(series: Sequence) -> list[GrowthRow]:
    """One row per snapshot: |D_t|, |M_t|, |E_t| and density |E_t| / |D_t|.

    Items are ``(label, declaration graph, module graph)`` tuples or objects
    with ``label``, ``declaration`` and ``module`` attributes.
    """
    if not series:
        raise ValueError("empty snapshot series")
    rows = []
    seen = set()
    for s in series:
        label, gd, gm = _snapshot_parts(s)
        if label in seen:
            raise ValueError(f"duplicate snapshot label {label!r}")
        seen.add(label)
        rows.append(
            GrowthRow(
                str(label),
                gd.n_nodes if gd is not None else 0,
                gm.n_nodes if gm is not None else 0,
                gd.n_edges if gd is not None else 0,
            )
        )
    return rows


def _in_degree_by_name(g: DepGraph) -> dict[str, int]:
    return dict(zip(g.names(), g.in_degree().tolist()))


def _top(deg: Mapping[str, int], universe: set[str], k: int) -> list[str]:
    return sorted(universe, key=lambda x: (-deg[x], x))[:k]


def hub_turnover(ga: DepGraph, gb: DepGraph, k: int = 100) -> float:
    """Spearman correlation of in-degree over the union of both top-k sets.

    Only names present in both graphs are ranked; a node outside one graph's
    top-k ties for last place in that ranking.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    da, db = _in_degree_by_name(ga), _in_degree_by_name(gb)
    universe = set(da) & set(db)
    if not universe:
        raise ValueError("graphs share no node names")
    ta, tb = _top(da, universe, k), _top(db, universe, k)
    union = sorted(set(ta) | set(tb))
    sa, sb = set(ta), set(tb)
    xa = np.array([da[u] if u in sa else -1 for u in union], dtype=float)
    xb = np.array([db[u] if u in sb else -1 for u in union], dtype=float)
    if len(union) < 2:
        return float("nan")
    return float(stats.spearmanr(xa, xb).statistic)


def labels_by_name(g: DepGraph, partition: Partition) -> dict[str, int]:
    return dict(zip(g.names(), partition.labels.tolist()))


def community_persistence(a: Mapping[str, int], b: Mapping[str, int]) -> float:
    """NMI of two name-keyed labelings restricted to their shared names."""
    shared = sorted(set(a) & set(b))
    if not shared:
        raise ValueError("labelings share no node names")
    return compare_partitions([a[x] for x in shared], [b[x] for x in shared]).nmi


def build_comod_graph(prs: Iterable[PullRequest]) -> UndirectedGraph:
    """Modules as nodes; w(a, b) = number of PRs touching both."""
    prs = list(prs)
    names = sorted({str(f) for pr in prs for f in pr.files})
    index = {n: i for i, n in enumerate(names)}
    us: list[int] = []
    vs: list[int] = []
    for pr in prs:
        ids = sorted(index[str(f)] for f in pr.files)
        for i, j in combinations(ids, 2):
            us.append(i)
            vs.append(j)
    return UndirectedGraph.from_edges(len(names), us, vs, None, tuple(names))


@dataclass(frozen=True)
class ComodComparison:
    both: list[tuple[str, str]]
    hidden: list[tuple[str, str]]
    import_only: list[tuple[str, str]]
    outside: list[tuple[str, str]]  # co-modified pairs naming a module absent from the import graph

    def counts(self) -> dict[str, int]:
        return {k: len(getattr(self, k)) for k in ("both", "hidden", "import_only", "outside")}


def comod_vs_imports(comod: UndirectedGraph, gm: DepGraph) -> ComodComparison:
    """Compare co-modified pairs with import pairs, ignoring import direction."""
    names = comod.names or tuple(str(i) for i in range(comod.n))
    cpairs = {tuple(sorted((names[u], names[v]))) for u, v in zip(comod.u.tolist(), comod.v.tolist()) if u != v}
    gnames = gm.names()
    ipairs = {tuple(sorted((gnames[s], gnames[d]))) for s, d in zip(gm.src.tolist(), gm.dst.tolist())}
    known = set(gnames)
    outside = sorted(p for p in cpairs if p[0] not in known or p[1] not in known)
    inside = cpairs - set(outside)
    return ComodComparison(sorted(inside & ipairs), sorted(inside - ipairs), sorted(ipairs - inside), outside)
