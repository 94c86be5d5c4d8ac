"""Connectivity under node removal."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core_graph import DepGraph


def _component_sizes(g: DepGraph, keep: np.ndarray) -> np.ndarray:
    """Sizes of the weak components among nodes where ``keep`` holds."""
    n = g.n_nodes
    if not keep.any():
        return np.zeros(0, dtype=np.int64)
    emask = keep[g.src] & keep[g.dst]
    a = sparse.csr_matrix((np.ones(int(emask.sum()), dtype=np.int8), (g.src[emask], g.dst[emask])), shape=(n, n))
    _, labels = csgraph.connected_components(a, directed=True, connection="weak")
    sizes = np.bincount(labels[keep])
    return sizes[sizes > 0]


@dataclass(frozen=True)
class RemovalMeasure:
    removed: int
    remaining: int
    wcc_count: int
    gcc_size: int

    @property
    def disconnected_count(self) -> int:
        return self.remaining - self.gcc_size


def _mask(g: DepGraph, nodes: Iterable) -> np.ndarray:
    keep = np.ones(g.n_nodes, dtype=bool)
    for v in nodes:
        keep[g.id_of(v) if isinstance(v, str) else int(v)] = False
    return keep


def remove_and_measure(g: DepGraph, nodes: Iterable = ()) -> RemovalMeasure:
    """Weak components of the subgraph induced by the surviving nodes."""
    keep = _mask(g, nodes)
    sizes = _component_sizes(g, keep)
    return RemovalMeasure(
        int(g.n_nodes - keep.sum()), int(keep.sum()), int(len(sizes)), int(sizes.max()) if len(sizes) else 0
    )


def _gcc_members(g: DepGraph, keep: np.ndarray) -> np.ndarray:
    n = g.n_nodes
    emask = keep[g.src] & keep[g.dst]
    a = sparse.csr_matrix((np.ones(int(emask.sum()), dtype=np.int8), (g.src[emask], g.dst[emask])), shape=(n, n))
    _, labels = csgraph.connected_components(a, directed=True, connection="weak")
    sizes = np.bincount(labels[keep], minlength=labels.max() + 1)
    return keep & (labels == int(np.argmax(sizes)))


def single_node_impact(g: DepGraph, candidates: Sequence) -> dict[str, int]:
    """Nodes of the original giant component cut off from it by removing each candidate alone.

    The removed node itself is not counted, so a leaf scores 0. Only the
    remains of the original giant component are searched for the new one.
    """
    full = np.ones(g.n_nodes, dtype=bool)
    gcc = _gcc_members(g, full)
    base = int(gcc.sum())
    out: dict[str, int] = {}
    for c in candidates:
        v = g.id_of(c) if isinstance(c, str) else int(c)
        keep = gcc.copy()
        keep[v] = False
        after = _component_sizes(g, keep)
        new_gcc = int(after.max()) if len(after) else 0
        out[g.name(v)] = base - int(gcc[v]) - new_gcc
    return out


@dataclass(frozen=True)
class RemovalCurve:
    fractions: np.ndarray
    gcc_fraction: np.ndarray  # mean over trials
    gcc_std: np.ndarray
    strategy: str
    trials: int
    seed: int | None

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.fractions.tolist(), self.gcc_fraction.tolist()))


def removal_counts(n: int, fractions: np.ndarray) -> np.ndarray:
    return np.floor(fractions * n + 1e-9).astype(np.int64)


def targeted_order(scores: np.ndarray) -> np.ndarray:
    """Highest score first, ties by smaller id."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def _curve_for_order(g: DepGraph, order: np.ndarray, counts: np.ndarray) -> np.ndarray:
    n = g.n_nodes
    out = np.zeros(len(counts))
    for i, k in enumerate(counts.tolist()):
        keep = np.ones(n, dtype=bool)
        keep[order[:k]] = False
        sizes = _component_sizes(g, keep)
        out[i] = (sizes.max() if len(sizes) else 0) / n
    return out


def removal_curve(
    g: DepGraph,
    strategy: str,
    fractions: Sequence[float],
    trials: int = 10,
    seed: int | None = None,
    scores: "np.ndarray | None" = None,
) -> RemovalCurve:
    """Giant-component fraction (of the original |V|) after removing each fraction of nodes.

    ``targeted`` removes by a ranking fixed on the intact graph (``scores``,
    default in-degree). ``random`` averages ``trials`` seeded permutations;
    within a trial removal sets are nested, so every curve is nonincreasing.
    """
    f = np.asarray(fractions, dtype=float)
    if len(f) == 0 or f.min() < 0 or f.max() > 1 or np.any(np.diff(f) < 0):
        raise ValueError("fractions must be ascending values in [0, 1]")
    if g.n_nodes == 0:
        raise ValueError("graph is empty")
    counts = removal_counts(g.n_nodes, f)
    if strategy == "targeted":
        s = g.in_degree() if scores is None else np.asarray(scores.values if hasattr(scores, "values") else scores)
        curve = _curve_for_order(g, targeted_order(s), counts)
        return RemovalCurve(f, curve, np.zeros_like(curve), "targeted", 1, None)
    if strategy != "random":
        raise ValueError("strategy must be 'random' or 'targeted'")
    if seed is None:
        raise ValueError("random removal requires a seed")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    runs = np.array([_curve_for_order(g, rng.permutation(g.n_nodes), counts) for _ in range(trials)])
    return RemovalCurve(f, runs.mean(axis=0), runs.std(axis=0), "random", trials, seed)
