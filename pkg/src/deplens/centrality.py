"""PageRank, Brandes betweenness, rankings and labeled group comparisons."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .core_graph import DepGraph, _gather


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("DEPLENS_THREADS", "1") or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    names: tuple[str, ...] | None = None
    measure: str = ""
    params: dict = field(default_factory=dict)
    seed: int | None = None
    converged: bool = True
    iterations: int = 0

    def __len__(self) -> int:
        return len(self.values)

    def score(self, node: "int | str") -> float:
        if isinstance(node, str):
            if self.names is None:
                raise KeyError(node)
            node = self.names.index(node)
        return float(self.values[node])

    def to_json(self, k: int | None = None) -> dict:
        return {
            "measure": self.measure,
            "params": self.params,
            "seed": self.seed,
            "converged": self.converged,
            "iterations": self.iterations,
            "top": [{"rank": r, "name": n, "score": s} for r, _, n, s in top_k(self, k or len(self))],
        }


def pagerank(
    g: DepGraph, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 200, weighted: bool = False
) -> ScoreVector:
    """Power iteration along stored edges; dangling mass is spread uniformly.

    Stops when the L1 change drops below ``tol``. If ``max_iter`` is reached
    first, the last iterate is returned with ``converged=False``.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("pagerank needs at least one node")
    if not 0 <= damping < 1:
        raise ValueError("damping must lie in [0, 1)")
    a = g.adjacency(weighted=weighted)
    out = np.asarray(a.sum(axis=1)).ravel()
    dangling = out == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out))
    pt = (sparse.diags(inv) @ a).T.tocsr()
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = damping * (pt @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        err = np.abs(nxt - x).sum()
        x = nxt
        if err < tol:
            converged = True
            break
    params = {"damping": damping, "tol": tol, "max_iter": max_iter, "weighted": weighted}
    return ScoreVector(x, tuple(g.names()), "pagerank", params, None, converged, it)


def _brandes_source(ptr: np.ndarray, idx: np.ndarray, n: int, s: int) -> np.ndarray:
    """Dependency delta_s(v) of every node for source ``s`` (unit lengths)."""
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n)
    dist[s] = 0
    sigma[s] = 1.0
    frontier = np.array([s], dtype=np.int64)
    layers: list[tuple[np.ndarray, np.ndarray]] = []
    d = 0
    while len(frontier):
        counts = ptr[frontier + 1] - ptr[frontier]
        eu = np.repeat(frontier, counts)
        ev = _gather(ptr, idx, frontier)
        fresh = ev[dist[ev] < 0]
        if len(fresh):
            dist[fresh] = d + 1
        on = dist[ev] == d + 1
        eu, ev = eu[on], ev[on]
        if len(ev) == 0:
            break
        sigma += np.bincount(ev, weights=sigma[eu], minlength=n)
        layers.append((eu, ev))
        frontier = np.unique(ev)
        d += 1
    delta = np.zeros(n)
    for eu, ev in reversed(layers):
        delta += np.bincount(eu, weights=sigma[eu] / sigma[ev] * (1.0 + delta[ev]), minlength=n)
    delta[s] = 0.0
    return delta


def betweenness(
    g: DepGraph,
    mode: str = "exact",
    k: int | None = None,
    seed: int | None = None,
    normalized: bool = True,
    threads: int | None = None,
) -> ScoreVector:
    """Directed shortest-path betweenness.

    ``mode="pivots"`` accumulates from ``k`` sources drawn without replacement
    and scales by N/k; a seed is mandatory. Normalization divides by (N-1)(N-2).
    Summation follows source order, so results do not depend on ``threads``.
    """
    n = g.n_nodes
    if mode == "exact":
        sources = np.arange(n)
        scale = 1.0
    elif mode == "pivots":
        if seed is None:
            raise ValueError("pivot sampling requires a seed")
        if k is None or not 1 <= k <= n:
            raise ValueError("pivot count k must satisfy 1 <= k <= |V|")
        sources = np.random.default_rng(seed).choice(n, size=k, replace=False)
        scale = n / k
    else:
        raise ValueError("mode must be 'exact' or 'pivots'")
    ptr, idx = g.out_ptr, g.dst
    bc = np.zeros(n)
    workers = thread_count(threads)
    if workers == 1:
        for s in sources.tolist():
            bc += _brandes_source(ptr, idx, n, s)
    else:
        batch = workers * 4
        with ThreadPoolExecutor(workers) as pool:
            for lo in range(0, len(sources), batch):
                for delta in pool.map(lambda s: _brandes_source(ptr, idx, n, s), sources[lo : lo + batch].tolist()):
                    bc += delta
    bc *= scale
    if normalized and n > 2:
        bc /= (n - 1) * (n - 2)
    params = {"mode": mode, "k": k, "normalized": normalized}
    return ScoreVector(bc, tuple(g.names()), "betweenness", params, seed)


def top_k(
    scores: "ScoreVector | np.ndarray", k: int, labels: Sequence[str] | None = None
) -> list[tuple[int, int, str, float]]:
    """``(rank, node id, label, score)`` rows, descending by score, ties by label."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(scores, ScoreVector):
        values = scores.values
        labels = labels if labels is not None else scores.names
    else:
        values = np.asarray(scores, dtype=float)
    if labels is None:
        labels = [str(i) for i in range(len(values))]
    labels = list(labels)
    order = sorted(range(len(values)), key=lambda i: (-values[i], labels[i]))[:k]
    return [(r + 1, i, labels[i], float(values[i])) for r, i in enumerate(order)]


@dataclass(frozen=True)
class GroupRow:
    count: int
    mean_in_degree: float
    zero_citation_rate: float
    mean_pagerank: float | None


def group_compare(
    g: DepGraph,
    labels: Sequence[str | None] | None = None,
    pagerank_scores: "ScoreVector | np.ndarray | None" = None,
    ratio: tuple[str, str] | None = None,
) -> tuple[dict[str, GroupRow], dict[str, float] | None]:
    """Structural statistics per label; unlabeled nodes are ignored.

    ``labels`` defaults to each node's ``marker``. With ``ratio=(a, b)`` the
    second result holds the a/b ratio of every mean; otherwise it is None.
    """
    if labels is None:
        labels = [nd.marker for nd in g.nodes]
    if len(labels) != g.n_nodes:
        raise ValueError("one label per node required")
    present = sorted({x for x in labels if x is not None})
    if not present:
        raise ValueError("no labeled nodes")
    indeg = g.in_degree()
    pr = None
    if pagerank_scores is not None:
        pr = pagerank_scores.values if isinstance(pagerank_scores, ScoreVector) else np.asarray(pagerank_scores)
    lab = np.array([x if x is not None else "" for x in labels], dtype=object)
    rows: dict[str, GroupRow] = {}
    for name in present:
        m = lab == name
        d = indeg[m]
        rows[name] = GroupRow(
            int(m.sum()),
            float(d.mean()),
            float((d == 0).mean()),
            None if pr is None else float(pr[m].mean()),
        )
    ratios = None
    if ratio is not None and ratio[0] in rows and ratio[1] in rows:
        a, b = rows[ratio[0]], rows[ratio[1]]

        def div(x, y):
            return x / y if (x is not None and y) else None

        ratios = {
            "mean_in_degree": div(a.mean_in_degree, b.mean_in_degree),
            "zero_citation_rate": div(a.zero_citation_rate, b.zero_citation_rate),
            "mean_pagerank": div(a.mean_pagerank, b.mean_pagerank),
        }
    return rows, ratios
