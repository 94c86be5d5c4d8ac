"""Acceptance criteria. Tier 1 runs on bundled fixtures; tier 2 needs the published dataset.

Each test carries a ``criterion`` marker; the terminal summary prints one
pass/fail line per criterion.
"""
import itertools
import math
import time
from collections import deque

import numpy as np
import pytest
from scipy import stats

from deplens import fixtures
from deplens.aggregation import (
    build_ns_graph,
    containment_ratio,
    module_cohesion,
    namespace_grouping,
    truncate_namespace,
)
from deplens.centrality import betweenness, group_compare, pagerank
from deplens.community import UndirectedGraph, compare_partitions, louvain, modularity, undirected_projection
from deplens.core_graph import (
    CycleError,
    connected_components,
    dag_depth_and_widths,
    degree_stats,
    topological_levels,
)
from deplens.module_analysis import (
    classify_import_edges,
    critical_path,
    import_utilization,
    module_containment,
    transitive_reduction,
)
from deplens.robustness import remove_and_measure, removal_curve, single_node_impact
from deplens.tail_fit import compare_alternatives, fit_powerlaw

from .graphgen import preferential_attachment, random_dag, random_digraph

# -- oracles ------------------------------------------------------------------


def reachable_without(g, u, v):
    """True when v is reachable from u after deleting the direct edge u -> v."""
    seen = {u}
    todo = [u]
    while todo:
        x = todo.pop()
        for y in g.successors(x).tolist():
            if x == u and y == v:
                continue
            if y == v:
                return True
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return False


def dense_pagerank(g, damping=0.85, iters=5000):
    n = g.n_nodes
    A = np.zeros((n, n))
    for s, d in zip(g.src.tolist(), g.dst.tolist()):
        A[s, d] += 1
    out = A.sum(axis=1)
    P = np.where(out[:, None] > 0, A / np.maximum(out, 1)[:, None], 1.0 / n)
    x = np.full(n, 1.0 / n)
    for _ in range(iters):
        x = damping * x @ P + (1 - damping) / n
    return x


def shortest_paths(g, s):
    """All shortest paths from s by explicit enumeration, keyed by target."""
    dist = {s: 0}
    q = deque([s])
    while q:
        x = q.popleft()
        for y in g.successors(x).tolist():
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    paths = {s: [[s]]}
    for x in sorted(dist, key=dist.get):
        for y in g.successors(x).tolist():
            if dist.get(y) == dist[x] + 1:
                paths.setdefault(y, []).extend(p + [y] for p in paths[x])
    return paths


def brute_betweenness(g):
    n = g.n_nodes
    bc = np.zeros(n)
    for s in range(n):
        for t, ps in shortest_paths(g, s).items():
            if t == s:
                continue
            for p in ps:
                for v in p[1:-1]:
                    bc[v] += 1.0 / len(ps)
    return bc


def brute_nmi_ari(a, b):
    n = len(a)
    table = {}
    for x, y in zip(a, b):
        table[(x, y)] = table.get((x, y), 0) + 1
    ca, cb = {}, {}
    for x in a:
        ca[x] = ca.get(x, 0) + 1
    for y in b:
        cb[y] = cb.get(y, 0) + 1
    ha = -sum(c / n * math.log(c / n) for c in ca.values())
    hb = -sum(c / n * math.log(c / n) for c in cb.values())
    mi = sum(c / n * math.log(c * n / (ca[x] * cb[y])) for (x, y), c in table.items())
    nmi = 1.0 if ha == 0 and hb == 0 else 2 * mi / (ha + hb)
    # pair counting over all element pairs
    both = only_a = only_b = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa, sb = a[i] == a[j], b[i] == b[j]
            both += sa and sb
            only_a += sa and not sb
            only_b += sb and not sa
            pairs += 1
    sum_a, sum_b = both + only_a, both + only_b
    expected = sum_a * sum_b / pairs if pairs else 0.0
    denom = 0.5 * (sum_a + sum_b) - expected
    ari = 1.0 if denom == 0 else (both - expected) / denom
    return nmi, ari


def set_partitions(n):
    """Restricted-growth strings of length n."""
    def rec(prefix, mx):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(mx + 2):
            yield from rec(prefix + [v], max(mx, v))

    if n == 0:
        yield ()
        return
    yield from rec([0], 0)


def integer_partition_shapes(n):
    """One set partition per block-size multiset (orbit representatives under relabelling)."""
    def parts(m, mx):
        if m == 0:
            yield []
            return
        for k in range(min(m, mx), 0, -1):
            for rest in parts(m - k, k):
                yield [k] + rest

    for sizes in parts(n, n):
        labels = []
        for b, k in enumerate(sizes):
            labels += [b] * k
        yield tuple(labels)


def zipf_tail(alpha, xmin, n, rng):
    """Discrete power law on k >= xmin by rejection from scipy's zeta distribution."""
    out = []
    while len(out) < n:
        x = stats.zipf.rvs(alpha, size=4 * n, random_state=rng)
        out.extend(x[x >= xmin].tolist())
    return np.array(out[:n])


# -- tier 1 -------------------------------------------------------------------


@pytest.mark.criterion(1, "transitive reduction equals reachability-minimal oracle; diamond removes the shortcut")
def test_c1_reduction_oracle():
    rng = np.random.default_rng(20240101)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        g = random_dag(rng, n, float(rng.uniform(0.1, 0.7)))
        expected = {(g.name(s), g.name(d)) for s, d in zip(g.src.tolist(), g.dst.tolist()) if reachable_without(g, s, d)}
        res = transitive_reduction(g)
        got = {(g.name(int(g.src[e])), g.name(int(g.dst[e]))) for e in res.removed}
        assert got == expected
        kept = {(res.reduced.name(s), res.reduced.name(d)) for s, d in zip(res.reduced.src.tolist(), res.reduced.dst.tolist())}
        assert kept | got == {(g.name(s), g.name(d)) for s, d in zip(g.src.tolist(), g.dst.tolist())}


@pytest.mark.criterion(1, "transitive reduction equals reachability-minimal oracle; diamond removes the shortcut")
def test_c1_diamond():
    g = fixtures.diamond()
    res = transitive_reduction(g)
    assert [(g.name(int(g.src[e])), g.name(int(g.dst[e]))) for e in res.removed] == [("Algebra.Group.Defs", "Init")]


@pytest.mark.criterion(2, "build-graph fixture: critical path weight 8 s, speedup 1.5x")
def test_c2_build_graph():
    g, w = fixtures.build_example()
    cp = critical_path(g, w)
    assert cp.total_weight == 8.0
    assert cp.sequential_weight == 12.0
    assert cp.speedup == 1.5
    assert cp.names == ("Algebra.Order.Group", "Algebra.Group.Defs", "Init")


@pytest.mark.criterion(3, "PageRank: 3-cycle uniform; dense power-iteration oracle on 50 graphs")
def test_c3_pagerank():
    cyc = fixtures.make_graph(["a", "b", "c"], [("a", "b"), ("b", "c"), ("c", "a")])
    pr = pagerank(cyc)
    assert np.max(np.abs(pr.values - 1 / 3)) < 1e-9
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 51))
        g = random_digraph(rng, n, float(rng.uniform(0.01, 0.3)))
        got = pagerank(g).values
        assert np.max(np.abs(got - dense_pagerank(g))) <= 1e-8


@pytest.mark.criterion(4, "betweenness: exact matches path enumeration; pivots within 5% on top-10")
def test_c4_exact_betweenness():
    rng = np.random.default_rng(11)
    for trial in range(12):
        n = int(rng.integers(3, 61))
        g = random_digraph(rng, n, float(rng.uniform(1.0, 3.0)) / n)
        got = betweenness(g, normalized=False).values
        np.testing.assert_allclose(got, brute_betweenness(g), rtol=1e-9, atol=1e-9)
    g = preferential_attachment(rng, 60, 3)
    np.testing.assert_allclose(betweenness(g, normalized=False).values, brute_betweenness(g), rtol=1e-9, atol=1e-9)


def _pivot_fixture():
    """200 nodes, each citing 4 random others."""
    rng = np.random.default_rng(200)
    names = [f"m{i}" for i in range(200)]
    edges = set()
    for i in range(200):
        for j in rng.choice(200, size=4, replace=False).tolist():
            if i != j:
                edges.add((names[i], names[j]))
    return fixtures.make_graph(names, sorted(edges))


@pytest.mark.criterion(4, "betweenness: exact matches path enumeration; pivots within 5% on top-10")
def test_c4_pivot_estimator():
    g = _pivot_fixture()
    exact = betweenness(g).values
    top = np.argsort(-exact, kind="stable")[:10]
    est = np.array([betweenness(g, mode="pivots", k=100, seed=s).values[top] for s in range(50)])
    rel = np.abs(est.mean(axis=0) - exact[top]) / exact[top]
    assert rel.max() < 0.05, rel


@pytest.mark.criterion(5, "NMI/ARI match brute-force contingency tables on partitions of <= 8 elements")
def test_c5_partition_comparison():
    for n in range(1, 9):
        bs = list(set_partitions(n))
        # all pairs up to n = 6; beyond that every pair is equivalent, under a
        # simultaneous relabelling of elements, to one whose first partition is a shape representative
        firsts = bs if n <= 6 else list(integer_partition_shapes(n))
        for a in firsts:
            for b in bs:
                got = compare_partitions(a, b)
                nmi, ari = brute_nmi_ari(a, b)
                assert abs(got.nmi - nmi) < 1e-12 and abs(got.ari - ari) < 1e-12, (a, b)
        for a in bs:
            same = compare_partitions(a, a)
            assert same.nmi == 1.0 and same.ari == 1.0


def _cliques():
    names = [f"c{i}" for i in range(10)]
    edges = [(names[i], names[j]) for blk in (range(5), range(5, 10)) for i, j in itertools.combinations(blk, 2)]
    edges.append(("c4", "c5"))
    return undirected_projection(fixtures.make_graph(names, edges))


@pytest.mark.criterion(6, "Louvain recovers cliques and planted blocks; Q equals modularity(partition)")
def test_c6_louvain():
    ug = _cliques()
    for seed in range(10):
        res = louvain(ug, seed=seed)
        lab = res.partition.labels
        assert len(set(lab[:5].tolist())) == 1 and len(set(lab[5:].tolist())) == 1 and lab[0] != lab[5]
        assert abs(res.modularity - modularity(ug, res.partition)) <= 1e-12

    rng = np.random.default_rng(4)
    truth = np.repeat(np.arange(4), 32)
    us, vs = [], []
    for i in range(128):
        for j in range(i + 1, 128):
            if rng.random() < (0.3 if truth[i] == truth[j] else 0.01):
                us.append(i)
                vs.append(j)
    planted = UndirectedGraph.from_edges(128, us, vs)
    for seed in range(5):
        res = louvain(planted, seed=seed)
        assert compare_partitions(res.partition, truth).nmi >= 0.9
        assert abs(res.modularity - modularity(planted, res.partition)) <= 1e-12


@pytest.mark.criterion(7, "tail fit on alpha=2.5 samples: alpha within 0.1, xmin in [4,7], under 60 s")
def test_c7_tail_fit():
    rng = np.random.default_rng(2500)
    body = rng.integers(1, 5, size=2000)
    samples = np.concatenate([body, zipf_tail(2.5, 5, 8000, rng)])
    rng.shuffle(samples)
    assert len(samples) == 10_000
    t0 = time.perf_counter()
    fit = fit_powerlaw(samples)
    elapsed = time.perf_counter() - t0
    assert abs(fit.alpha - 2.5) <= 0.1
    assert 4 <= fit.xmin <= 7
    assert elapsed < 60


@pytest.mark.criterion(8, "robustness curves nonincreasing; random >= targeted on 1,000-node hub graph")
def test_c8_robustness():
    g = preferential_attachment(np.random.default_rng(1000), 1000, 2)
    fr = np.round(np.arange(0, 1.0001, 0.05), 2)
    tgt = removal_curve(g, "targeted", fr)
    assert np.all(np.diff(tgt.gcc_fraction) <= 0)
    for seed in range(20):
        rnd = removal_curve(g, "random", fr, trials=1, seed=seed)
        assert np.all(np.diff(rnd.gcc_fraction) <= 0)
        assert np.all(rnd.gcc_fraction >= tgt.gcc_fraction)


@pytest.mark.criterion(9, "namespace aggregation creates the Nat<->Int cycle; truncation examples")
def test_c9_aggregation():
    g = fixtures.aggregation_cycle()
    topological_levels(g)  # acyclic input
    wg = build_ns_graph(g, 2)
    ns = wg.graph
    assert sorted(ns.names()) == ["Int", "Nat"]
    assert wg.weight("Nat", "Int") == 1 and wg.weight("Int", "Nat") == 1
    with pytest.raises(CycleError):
        topological_levels(ns)
    assert truncate_namespace("Nat.Prime.dvd_mul", 2) == "Nat.Prime"
    assert truncate_namespace("Nat.add_comm", 2) == "Nat"
    assert truncate_namespace("funext", 1) == "_root_"


# -- tier 2 -------------------------------------------------------------------

MODULE_BETWEENNESS_TOP10 = [
    "Tactic.Common", "Init", "LinearAlgebra.Span.Basic", "Analysis.Normed.Module.FiniteDimension",
    "Analysis.RCLike.Basic", "Analysis.SpecificLimits.Basic", "Analysis.SpecificLimits.Normed",
    "LinearAlgebra.Determinant", "CategoryTheory.Category.Basic", "Tactic.NormNum",
]
DECL_BETWEENNESS_TOP10 = [
    "Real", "Real.ofCauchy", "Rat.linearOrder", "Real.pi", "Real.exists_cos_eq_zero",
    "Rat.instIsStrictOrderedRing", "Rat.le_refl", "Real.zero_lt_one", "Complex.log", "instSemiringNNReal",
]


@pytest.fixture(scope="module")
def published(dataset_manifest):
    from deplens.ingest import load_dataset

    return load_dataset(dataset_manifest).latest


def _strip(name):
    return name[len("Mathlib."):] if name.startswith("Mathlib.") else name


@pytest.mark.dataset
@pytest.mark.criterion(10, "module graph size, redundancy, reduced edges, depth, max in-degree")
def test_c10_module_graph(published):
    gm = published.module
    assert (gm.n_nodes, gm.n_edges) == (7563, 23570)
    red = transitive_reduction(gm)
    assert abs(red.redundancy_rate - 0.175) <= 0.002
    assert red.reduced.n_edges == 19448
    assert dag_depth_and_widths(gm).depth == 153
    assert degree_stats(gm, "in").max == 167


@pytest.mark.dataset
@pytest.mark.criterion(11, "declaration graph size, degrees, GCC, synthesis ratio, origin split")
def test_c11_declaration_graph(published):
    from deplens.decomp_stats import edge_partition_stats

    gd = published.declaration
    assert (gd.n_nodes, gd.n_edges) == (308129, 8436366)
    assert degree_stats(gd, "in").max == 89936 and degree_stats(gd, "out").max == 522
    sizes = connected_components(gd).sizes()
    assert round(sizes.max() / gd.n_nodes, 4) == 0.9998
    eps = edge_partition_stats(gd)
    assert abs(eps.synthesis_ratio - 0.742) <= 0.001
    fr = eps.origin_fractions
    for key, val in (("statement", 0.081), ("proof", 0.439), ("both", 0.480)):
        assert abs(fr[key] - val) <= 0.001


@pytest.mark.dataset
@pytest.mark.criterion(12, "containment by depth, cohesion, utilization")
def test_c12_containment(published):
    gm, gd = published.module, published.declaration
    for k, val in zip(range(1, 6), (0.975, 0.602, 0.341, 0.088, 0.008)):
        assert abs(module_containment(gm, k).ratio - val) <= 0.002
    for k, val in ((1, 0.222), (2, 0.142)):
        assert abs(containment_ratio(gd, namespace_grouping(gd, k)) - val) <= 0.002
    coh = module_cohesion(gd).summary()
    assert abs(coh["mean"] - 0.107) <= 0.005 and abs(coh["zero_fraction"] - 0.084) <= 0.003
    util = import_utilization(gm, gd).summary()
    assert abs(util["median"] - 0.016) <= 0.002 and abs(util["zero_count"] - 11410) <= 50


@pytest.mark.dataset
@pytest.mark.criterion(13, "import classification: active share, file-graph size, class split")
def test_c13_classification(published):
    s = classify_import_edges(published.module, published.declaration).summary()
    assert abs(s["active_fraction"] - 0.721) <= 0.003
    assert abs(s["file_pairs"] - 215211) <= 0.001 * 215211
    for key, val in (("direct", 0.078), ("transitive", 0.918), ("unreachable", 0.004)):
        assert abs(s[f"{key}_fraction"] - val) <= 0.002


@pytest.mark.dataset
@pytest.mark.criterion(14, "declaration degree tails: in-degree alpha at xmin 20; out-degree alternatives win")
def test_c14_tails(published):
    gd = published.declaration
    indeg = gd.in_degree()
    fit = fit_powerlaw(indeg[indeg > 0])
    assert fit.xmin == 20 and abs(fit.alpha - 1.781) <= 0.01
    outdeg = gd.out_degree()
    outdeg = outdeg[outdeg > 0]
    comps = compare_alternatives(outdeg, fit_powerlaw(outdeg))
    assert comps["lognormal"].R < 0 and comps["truncated_power_law"].R < 0


@pytest.mark.dataset
@pytest.mark.criterion(15, "community quality and partition agreement")
def test_c15_communities(published):
    from deplens.aggregation import module_grouping, namespace_grouping
    from deplens.module_analysis import top_level_directory

    gm, gd = published.module, published.declaration
    qm = louvain(undirected_projection(gm), seed=0)
    assert qm.modularity >= 0.60
    qd = louvain(undirected_projection(gd), seed=0)
    assert qd.modularity >= 0.45
    dirs = [top_level_directory(n) for n in gm.names()]
    assert abs(compare_partitions(qm.partition, dirs).nmi - 0.34) <= 0.03
    mg = module_grouping(gd)
    ng = namespace_grouping(gd, 1)
    cov = mg.covered
    nmi = compare_partitions(ng.labels[cov], mg.labels[cov]).nmi
    assert abs(nmi - 0.708) <= 0.01


@pytest.mark.dataset
@pytest.mark.criterion(16, "robustness: top-5 removal components, targeted 20%, Eq.refl impact")
def test_c16_robustness(published):
    gm, gd = published.module, published.declaration
    top5 = np.lexsort((np.arange(gm.n_nodes), -gm.in_degree()))[:5]
    assert remove_and_measure(gm, top5).wcc_count == 29
    red = transitive_reduction(gm).reduced
    assert remove_and_measure(red, [gm.name(int(v)) for v in top5]).wcc_count == 56
    curve = removal_curve(gd, "targeted", [0.0, 0.2])
    assert abs(curve.gcc_fraction[1] - 0.461) <= 0.01
    assert single_node_impact(gd, ["Eq.refl"])["Eq.refl"] == 6


@pytest.mark.dataset
@pytest.mark.criterion(17, "group comparison, tactic shares, definitional heights")
def test_c17_groups(published):
    from deplens.decomp_stats import def_height_stats, tactic_stats

    gd = published.declaration
    _, ratios = group_compare(gd, ratio=("theorem", "lemma"))
    assert abs(ratios["mean_in_degree"] - 1.47) <= 0.02
    top3 = [share for _, _, share in tactic_stats(gd).profile.top(3)]
    for got, val in zip(top3, (0.169, 0.112, 0.104)):
        assert abs(got - val) <= 0.001
    h = def_height_stats(gd)
    assert h.median == 7 and h.max == 60


@pytest.mark.dataset
@pytest.mark.criterion(18, "betweenness top-10 overlap with reference rankings (>= 6/10)")
def test_c18_betweenness_overlap(published):
    from deplens.centrality import top_k

    gm, gd = published.module, published.declaration
    mod_top = {_strip(r[2]) for r in top_k(betweenness(gm), 10)}
    assert len(mod_top & set(MODULE_BETWEENNESS_TOP10)) >= 6
    dec_top = {r[2] for r in top_k(betweenness(gd, mode="pivots", k=500, seed=0), 10)}
    assert len(dec_top & set(DECL_BETWEENNESS_TOP10)) >= 6
