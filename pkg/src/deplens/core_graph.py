"""Graph data model shared by every analysis layer.

Edges are always stored citer -> cited (importer -> imported, proof -> premise).
Node ids are dense integers assigned in input order; every determinism contract
in the package is stated in id space.
"""
from __future__ import annotations

import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

KINDS = (
    "theorem",
    "definition",
    "abbrev",
    "constructor",
    "inductive",
    "opaque",
    "quotient",
    "axiom",
    "module",
    "namespace",
)
ORIGINS = ("statement", "proof", "both", "unknown")
VISIBILITIES = ("public", "private")
DEF_HEIGHT_SPECIAL = ("abbrev", "opaque")
MAX_DEF_HEIGHT = 10_000

_ORIGIN_CODE = {o: i for i, o in enumerate(ORIGINS)}
_VIS_CODE = {None: -1, "public": 0, "private": 1}
UNKNOWN = -1


class GraphError(ValueError):
    pass


class DanglingEndpointError(GraphError):
    def __init__(self, edge_index: int, src: int, dst: int):
        super().__init__(f"edge {edge_index} ({src}->{dst}) refers to an undeclared node id")
        self.edge_index = edge_index


class DuplicateEdgeError(GraphError):
    def __init__(self, edge_index: int, src: int, dst: int):
        super().__init__(f"edge {edge_index} duplicates ({src}->{dst})")
        self.edge_index = edge_index


class CycleError(GraphError):
    """Raised by operations that require an acyclic graph.

    ``cycle`` holds one witness cycle as a node-id sequence in edge order,
    first node repeated at the end.
    """

    def __init__(self, cycle: Sequence[int]):
        super().__init__(f"graph contains a cycle: {' -> '.join(map(str, cycle))}")
        self.cycle = list(cycle)


@dataclass(frozen=True, order=True)
class DottedName:
    components: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("a dotted name needs at least one component")
        for c in self.components:
            if not c or "." in c:
                raise ValueError(f"invalid name component {c!r}")

    @classmethod
    def parse(cls, text: str) -> "DottedName":
        if isinstance(text, DottedName):
            return text
        return cls(tuple(text.split(".")))

    @property
    def depth(self) -> int:
        return len(self.components)

    def truncate(self, k: int) -> "DottedName":
        if k < 1:
            raise ValueError("truncation depth must be >= 1")
        return DottedName(self.components[:k])

    @property
    def parent(self) -> "DottedName | None":
        if len(self.components) == 1:
            return None
        return DottedName(self.components[:-1])

    def __str__(self) -> str:
        return ".".join(self.components)


def _as_name(value: "str | DottedName | None") -> "DottedName | None":
    if value is None:
        return None
    return DottedName.parse(value)


@dataclass(frozen=True)
class NodeRecord:
    id: int
    name: DottedName
    kind: str
    module: DottedName | None = None
    attributes: frozenset[str] | None = None
    # regular height as int, or one of DEF_HEIGHT_SPECIAL
    def_height: int | str | None = None
    tactics: tuple[str, ...] | None = None
    marker: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.name, DottedName):
            object.__setattr__(self, "name", DottedName.parse(self.name))
        if self.module is not None and not isinstance(self.module, DottedName):
            object.__setattr__(self, "module", DottedName.parse(self.module))
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.attributes is not None and not isinstance(self.attributes, frozenset):
            object.__setattr__(self, "attributes", frozenset(self.attributes))
        if self.tactics is not None and not isinstance(self.tactics, tuple):
            object.__setattr__(self, "tactics", tuple(self.tactics))
        h = self.def_height
        if h is not None:
            if isinstance(h, str):
                if h not in DEF_HEIGHT_SPECIAL:
                    raise ValueError(f"invalid definitional height {h!r}")
            elif isinstance(h, bool) or not isinstance(h, (int, np.integer)) or not 0 <= h <= MAX_DEF_HEIGHT:
                raise ValueError(f"invalid definitional height {h!r}")


@dataclass(frozen=True)
class EdgeRecord:
    src: int
    dst: int
    origin: str = "unknown"
    synthesized: bool | None = None
    auto: bool | None = None
    visibility: str | None = None
    weight: float = 1.0
    tags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.origin not in _ORIGIN_CODE:
            raise ValueError(f"unknown edge origin {self.origin!r}")
        if self.visibility not in _VIS_CODE:
            raise ValueError(f"unknown visibility {self.visibility!r}")
        if not (self.weight >= 0 and np.isfinite(self.weight)):
            raise ValueError(f"edge weight must be finite and nonnegative, got {self.weight!r}")
        if not isinstance(self.tags, frozenset):
            object.__setattr__(self, "tags", frozenset(self.tags))


def _flag_code(value: bool | None) -> int:
    if value is None:
        return UNKNOWN
    return 1 if value else 0


def _flag_value(code: int) -> bool | None:
    return None if code < 0 else bool(code)


class EdgeTable(Sequence):
    """Columnar edge storage that reads like a sequence of :class:`EdgeRecord`.

    Tags are sparse: only edges carrying tags appear in ``tags``.
    """

    def __init__(
        self,
        src,
        dst,
        origin=None,
        synthesized=None,
        auto=None,
        visibility=None,
        weight=None,
        tags: Mapping[int, frozenset[str]] | None = None,
    ):
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        m = len(self.src)
        if len(self.dst) != m:
            raise ValueError("src and dst columns differ in length")

        def col(values, dtype, fill):
            if values is None:
                return np.full(m, fill, dtype=dtype)
            arr = np.asarray(values, dtype=dtype)
            if len(arr) != m:
                raise ValueError("edge columns differ in length")
            return arr

        self.origin = col(origin, np.int8, _ORIGIN_CODE["unknown"])
        self.synthesized = col(synthesized, np.int8, UNKNOWN)
        self.auto = col(auto, np.int8, UNKNOWN)
        self.visibility = col(visibility, np.int8, -1)
        self.weight = col(weight, np.float64, 1.0)
        self.tags = dict(tags or {})

    @classmethod
    def from_records(cls, records: Iterable[EdgeRecord]) -> "EdgeTable":
        records = list(records)
        return cls(
            [r.src for r in records],
            [r.dst for r in records],
            [_ORIGIN_CODE[r.origin] for r in records],
            [_flag_code(r.synthesized) for r in records],
            [_flag_code(r.auto) for r in records],
            [_VIS_CODE[r.visibility] for r in records],
            [r.weight for r in records],
            {i: r.tags for i, r in enumerate(records) if r.tags},
        )

    def __len__(self) -> int:
        return len(self.src)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        vis = int(self.visibility[i])
        return EdgeRecord(
            src=int(self.src[i]),
            dst=int(self.dst[i]),
            origin=ORIGINS[int(self.origin[i])],
            synthesized=_flag_value(int(self.synthesized[i])),
            auto=_flag_value(int(self.auto[i])),
            visibility=None if vis < 0 else VISIBILITIES[vis],
            weight=float(self.weight[i]),
            tags=self.tags.get(i, frozenset()),
        )

    def take(self, index: np.ndarray) -> "EdgeTable":
        """Rows ``index`` (integer array) as a new table."""
        index = np.asarray(index, dtype=np.int64)
        new_pos: dict[int, int] = {}
        if self.tags:
            inv = np.full(len(self), -1, dtype=np.int64)
            inv[index] = np.arange(len(index))
            new_pos = {old: int(inv[old]) for old in self.tags if inv[old] >= 0}
        return EdgeTable(
            self.src[index],
            self.dst[index],
            self.origin[index],
            self.synthesized[index],
            self.auto[index],
            self.visibility[index],
            self.weight[index],
            {new: self.tags[old] for old, new in new_pos.items()},
        )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _gather(ptr: np.ndarray, idx: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Concatenate the CSR rows of ``nodes``."""
    starts = ptr[nodes]
    counts = ptr[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return idx[:0]
    offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
    return idx[offsets + np.arange(total)]


class DepGraph:
    """Immutable directed graph with node and edge attribute tables.

    Build instances with :func:`build_graph`. Edges are kept sorted by
    ``(src, dst)``; the edge attribute columns are aligned with that order,
    so ``successors(v)`` and ``edge_ids_out(v)`` describe the same edges.
    """

    def __init__(self, nodes: Sequence[NodeRecord], edges: EdgeTable, allow_self_loops: bool = False):
        self.nodes: tuple[NodeRecord, ...] = tuple(nodes)
        self.allow_self_loops = allow_self_loops
        n = len(self.nodes)
        order = np.lexsort((edges.dst, edges.src))
        table = edges.take(order)
        self._edges = table
        self.src = _frozen(table.src)
        self.dst = _frozen(table.dst)
        self.out_ptr = _frozen(np.concatenate(([0], np.cumsum(np.bincount(self.src, minlength=n)))).astype(np.int64))
        in_order = np.lexsort((self.src, self.dst))
        self.in_eid = _frozen(in_order.astype(np.int64))
        self.in_src = _frozen(self.src[in_order])
        self.in_ptr = _frozen(np.concatenate(([0], np.cumsum(np.bincount(self.dst, minlength=n)))).astype(np.int64))
        for col in (table.origin, table.synthesized, table.auto, table.visibility, table.weight):
            _frozen(col)
        self._index: dict[str, int] | None = None

    # -- sizes -----------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def __repr__(self) -> str:
        return f"DepGraph(|V|={self.n_nodes}, |E|={self.n_edges})"

    # -- edge columns ----------------------------------------------------
    @property
    def edge_table(self) -> EdgeTable:
        return self._edges

    @property
    def origin(self) -> np.ndarray:
        return self._edges.origin

    @property
    def synthesized(self) -> np.ndarray:
        return self._edges.synthesized

    @property
    def auto(self) -> np.ndarray:
        return self._edges.auto

    @property
    def visibility(self) -> np.ndarray:
        return self._edges.visibility

    @property
    def weight(self) -> np.ndarray:
        return self._edges.weight

    @property
    def edge_tags(self) -> Mapping[int, frozenset[str]]:
        return self._edges.tags

    def edge(self, e: int) -> EdgeRecord:
        return self._edges[e]

    def edges(self) -> Iterator[EdgeRecord]:
        for e in range(self.n_edges):
            yield self._edges[e]

    # -- adjacency -------------------------------------------------------
    def successors(self, v: int) -> np.ndarray:
        return self.dst[self.out_ptr[v] : self.out_ptr[v + 1]]

    def predecessors(self, v: int) -> np.ndarray:
        return self.in_src[self.in_ptr[v] : self.in_ptr[v + 1]]

    def edge_ids_out(self, v: int) -> range:
        return range(int(self.out_ptr[v]), int(self.out_ptr[v + 1]))

    def edge_id(self, u: int, v: int) -> int:
        """Index of edge (u, v), or -1 when absent."""
        lo, hi = int(self.out_ptr[u]), int(self.out_ptr[u + 1])
        pos = lo + int(np.searchsorted(self.dst[lo:hi], v))
        if pos < hi and self.dst[pos] == v:
            return pos
        return -1

    def has_edge(self, u: int, v: int) -> bool:
        return self.edge_id(u, v) >= 0

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def adjacency(self, weighted: bool = False) -> sparse.csr_matrix:
        data = self.weight if weighted else np.ones(self.n_edges)
        return sparse.csr_matrix((data, (self.src, self.dst)), shape=(self.n_nodes, self.n_nodes))

    # -- names -----------------------------------------------------------
    def name(self, v: int) -> str:
        return str(self.nodes[v].name)

    def names(self) -> list[str]:
        return [str(n.name) for n in self.nodes]

    @property
    def index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {str(n.name): n.id for n in self.nodes}
        return self._index

    def id_of(self, name: "str | DottedName") -> int:
        return self.index[str(name)]

    def kinds(self) -> np.ndarray:
        code = {k: i for i, k in enumerate(KINDS)}
        return np.fromiter((code[n.kind] for n in self.nodes), dtype=np.int8, count=self.n_nodes)


def build_graph(
    nodes: Sequence[NodeRecord],
    edges: "Sequence[EdgeRecord] | EdgeTable",
    allow_self_loops: bool = False,
) -> DepGraph:
    """Validate ``nodes``/``edges`` and freeze them into a :class:`DepGraph`.

    Node ids must equal their position. Errors name the offending input edge
    index (position in ``edges``).
    """
    for i, node in enumerate(nodes):
        if node.id != i:
            raise GraphError(f"node at position {i} has id {node.id}; ids must be dense and in order")
    table = edges if isinstance(edges, EdgeTable) else EdgeTable.from_records(edges)
    n = len(nodes)
    m = len(table)
    if m:
        bad = np.flatnonzero((table.src < 0) | (table.src >= n) | (table.dst < 0) | (table.dst >= n))
        if len(bad):
            i = int(bad[0])
            raise DanglingEndpointError(i, int(table.src[i]), int(table.dst[i]))
        if not allow_self_loops:
            loops = np.flatnonzero(table.src == table.dst)
            if len(loops):
                i = int(loops[0])
                raise GraphError(f"edge {i} is a self-loop on node {int(table.src[i])}")
        key = table.src * max(n, 1) + table.dst
        order = np.argsort(key, kind="stable")
        dup = np.flatnonzero(key[order][1:] == key[order][:-1])
        if len(dup):
            i = int(order[dup + 1].min())
            raise DuplicateEdgeError(i, int(table.src[i]), int(table.dst[i]))
    return DepGraph(nodes, table, allow_self_loops=allow_self_loops)


def induced_subgraph(g: DepGraph, keep: np.ndarray, edge_keep: np.ndarray | None = None) -> DepGraph:
    """Subgraph on nodes where ``keep`` is true, renumbered densely in id order.

    ``edge_keep`` optionally filters edges further (aligned with ``g``'s edges).
    """
    keep = np.asarray(keep, dtype=bool)
    new_id = np.full(g.n_nodes, -1, dtype=np.int64)
    kept = np.flatnonzero(keep)
    new_id[kept] = np.arange(len(kept))
    nodes = [dataclasses.replace(g.nodes[v], id=i) for i, v in enumerate(kept)]
    emask = keep[g.src] & keep[g.dst]
    if edge_keep is not None:
        emask &= np.asarray(edge_keep, dtype=bool)
    table = g.edge_table.take(np.flatnonzero(emask))
    table.src = new_id[table.src]
    table.dst = new_id[table.dst]
    return DepGraph(nodes, table, allow_self_loops=g.allow_self_loops)


# -- partitions -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Partition:
    """Total assignment of nodes to dense group ids ``0..k-1``."""

    labels: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        if len(labels) and labels.min() < 0:
            raise ValueError("partition labels must be nonnegative (every node labeled)")
        object.__setattr__(self, "labels", _frozen(labels.copy()))

    @classmethod
    def from_values(cls, values: Sequence) -> "Partition":
        """Dense ids in order of first appearance; names are ``str(value)``."""
        ids: dict = {}
        labels = np.fromiter((ids.setdefault(v, len(ids)) for v in values), dtype=np.int64, count=len(values))
        return cls(labels, tuple(str(v) for v in ids))

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_groups)

    @property
    def n_groups(self) -> int:
        if self.names is not None:
            return len(self.names)
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def groups(self) -> dict[int, int]:
        return {i: int(c) for i, c in enumerate(self.sizes) if c}

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.labels == group)

    def restrict(self, index: np.ndarray) -> "Partition":
        """Partition of the nodes ``index``, relabeled densely."""
        sub = self.labels[np.asarray(index, dtype=np.int64)]
        uniq, dense = np.unique(sub, return_inverse=True)
        names = tuple(self.names[u] for u in uniq) if self.names is not None else None
        return Partition(dense.astype(np.int64), names)


@dataclass(frozen=True, eq=False)
class Grouping:
    """Partial node -> group map; label -1 marks nodes with no known group."""

    labels: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", _frozen(np.asarray(self.labels, dtype=np.int64).copy()))

    @classmethod
    def from_keys(cls, keys: Sequence[str | None]) -> "Grouping":
        ids: dict[str, int] = {}
        labels = np.fromiter(
            (-1 if k is None else ids.setdefault(k, len(ids)) for k in keys), dtype=np.int64, count=len(keys)
        )
        return cls(labels, tuple(ids))

    @property
    def covered(self) -> np.ndarray:
        return self.labels >= 0

    @property
    def n_groups(self) -> int:
        return len(self.names)

    def to_partition(self) -> Partition:
        if not self.covered.all():
            raise ValueError("grouping does not cover every node")
        return Partition(self.labels, self.names)


def _ordered_partition(raw: np.ndarray) -> Partition:
    """Relabel: size descending, ties by smallest member id."""
    n = len(raw)
    if n == 0:
        return Partition(np.zeros(0, dtype=np.int64))
    k = int(raw.max()) + 1
    sizes = np.bincount(raw, minlength=k)
    first = np.full(k, n, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(n))
    order = np.lexsort((first, -sizes))
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return Partition(rank[raw])


def connected_components(g: DepGraph, mode: str = "weak") -> Partition:
    if mode not in ("weak", "strong"):
        raise ValueError("mode must be 'weak' or 'strong'")
    if g.n_nodes == 0:
        return Partition(np.zeros(0, dtype=np.int64))
    _, raw = csgraph.connected_components(g.adjacency(), directed=True, connection=mode)
    return _ordered_partition(raw.astype(np.int64))


def condense(g: DepGraph) -> tuple[DepGraph, Partition]:
    """Collapse each SCC to a super-node.

    Super-node ``c`` takes the name and kind of its smallest member; an edge's
    weight counts the original edge weight crossing between the two SCCs.
    """
    part = connected_components(g, "strong")
    lab = part.labels
    k = part.n_groups
    rep = np.full(k, g.n_nodes, dtype=np.int64)
    np.minimum.at(rep, lab, np.arange(g.n_nodes))
    nodes = [dataclasses.replace(g.nodes[int(rep[c])], id=c) for c in range(k)]
    s, d = lab[g.src], lab[g.dst]
    cross = s != d
    key = s[cross] * max(k, 1) + d[cross]
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.bincount(inv, weights=g.weight[cross], minlength=len(uniq))
    table = EdgeTable(uniq // max(k, 1), uniq % max(k, 1), weight=w)
    return DepGraph(nodes, table), part


def _witness_cycle(g: DepGraph, remaining: np.ndarray) -> list[int]:
    # every remaining node still has a remaining predecessor; walk backwards
    v = int(np.flatnonzero(remaining)[0])
    seen: dict[int, int] = {}
    path: list[int] = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(int(u) for u in g.predecessors(v) if remaining[u])
    cycle = path[seen[v] :][::-1]
    return cycle + [cycle[0]]


def topological_levels(g: DepGraph, orientation: str = "stored") -> np.ndarray:
    """Longest-path level of every node.

    With ``orientation="stored"`` sources (nodes nothing points at) sit at 0
    and ``level(v) = 1 + max level over in-neighbours``. ``"reversed"``
    applies the same rule to the transposed graph, so premises / sinks sit at 0.
    Raises :class:`CycleError` on cyclic input.
    """
    if orientation == "stored":
        ptr, idx, indeg = g.out_ptr, g.dst, g.in_degree().copy()
    elif orientation == "reversed":
        ptr, idx, indeg = g.in_ptr, g.in_src, g.out_degree().copy()
    else:
        raise ValueError("orientation must be 'stored' or 'reversed'")
    n = g.n_nodes
    level = np.full(n, -1, dtype=np.int64)
    frontier = np.flatnonzero(indeg == 0)
    depth = 0
    while len(frontier):
        level[frontier] = depth
        nxt = _gather(ptr, idx, frontier)
        if len(nxt) == 0:
            break
        dec = np.bincount(nxt, minlength=n)
        touched = np.flatnonzero(dec)
        indeg[touched] -= dec[touched]
        frontier = touched[indeg[touched] == 0]
        depth += 1
    remaining = level < 0
    if remaining.any():
        if orientation == "stored":
            raise CycleError(_witness_cycle(g, remaining))
        raise CycleError(_witness_cycle(g, remaining)[::-1])
    return level


@dataclass(frozen=True)
class DagProfile:
    depth: int
    widths: tuple[int, ...]
    levels: np.ndarray

    @property
    def max_width(self) -> int:
        return max(self.widths, default=0)

    @property
    def median_width(self) -> int:
        return int(np.sort(self.widths)[(len(self.widths) - 1) // 2]) if self.widths else 0


def dag_depth_and_widths(g: DepGraph, orientation: str = "stored") -> DagProfile:
    levels = topological_levels(g, orientation)
    widths = tuple(int(c) for c in np.bincount(levels)) if len(levels) else ()
    return DagProfile(depth=len(widths) - 1, widths=widths, levels=levels)


@dataclass(frozen=True)
class DegreeStats:
    mean: float
    median: int
    std: float
    max: int
    zero_count: int
    histogram: dict[int, int]


def lower_median(values) -> float:
    values = np.sort(np.asarray(values))
    if len(values) == 0:
        return 0
    return values[(len(values) - 1) // 2]


def degree_stats(g: DepGraph, direction: str = "in") -> DegreeStats:
    if direction == "in":
        deg = g.in_degree()
    elif direction == "out":
        deg = g.out_degree()
    else:
        raise ValueError("direction must be 'in' or 'out'")
    if len(deg) == 0:
        return DegreeStats(0.0, 0, 0.0, 0, 0, {})
    counts = np.bincount(deg)
    hist = {int(k): int(c) for k, c in enumerate(counts) if c}
    return DegreeStats(
        mean=float(deg.mean()),
        median=int(lower_median(deg)),
        std=float(deg.std()),
        max=int(deg.max()),
        zero_count=int(counts[0]),
        histogram=hist,
    )


def node_mask(g: DepGraph, predicate: Callable[[NodeRecord], bool] | None) -> np.ndarray:
    if predicate is None:
        return np.ones(g.n_nodes, dtype=bool)
    return np.fromiter((bool(predicate(n)) for n in g.nodes), dtype=bool, count=g.n_nodes)
