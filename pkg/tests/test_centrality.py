import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from deplens import fixtures
from deplens.centrality import betweenness, group_compare, pagerank, thread_count, top_k
from deplens.fixtures import make_graph

from .graphgen import digraphs, preferential_attachment, to_nx


@settings(max_examples=60, deadline=None)
@given(digraphs(max_n=20))
def test_pagerank_is_distribution(g):
    pr = pagerank(g)
    assert pr.converged
    assert abs(pr.values.sum() - 1) < 1e-12 and np.all(pr.values > 0)
    ref = nx.pagerank(to_nx(g), alpha=0.85, tol=1e-14, max_iter=10_000)
    np.testing.assert_allclose(pr.values, [ref[i] for i in range(g.n_nodes)], atol=1e-8)


def test_pagerank_weighted_and_flags():
    g = make_graph(["a", "b", "c"], [("a", "b", {"weight": 3.0}), ("a", "c")])
    w = pagerank(g, weighted=True).values
    u = pagerank(g).values
    assert w[1] > w[2] and u[1] == pytest.approx(u[2])
    slow = pagerank(g, max_iter=1)
    assert not slow.converged and slow.iterations == 1
    with pytest.raises(ValueError):
        pagerank(g, damping=1.0)


def test_x_graph_center():
    bc = betweenness(fixtures.x_graph(), normalized=False)
    assert bc.score("c") == 4 and bc.values.sum() == 4
    norm = betweenness(fixtures.x_graph())
    assert norm.score("c") == pytest.approx(4 / 12)


@settings(max_examples=60, deadline=None)
@given(digraphs(max_n=25))
def test_betweenness_matches_networkx(g):
    got = betweenness(g).values
    ref = nx.betweenness_centrality(to_nx(g), normalized=True)
    np.testing.assert_allclose(got, [ref[i] for i in range(g.n_nodes)], atol=1e-12)


def test_betweenness_threads_identical():
    g = preferential_attachment(np.random.default_rng(5), 150, 3)
    a = betweenness(g, threads=1).values
    b = betweenness(g, threads=3).values
    assert np.array_equal(a, b)
    p1 = betweenness(g, mode="pivots", k=40, seed=9, threads=1).values
    p2 = betweenness(g, mode="pivots", k=40, seed=9, threads=2).values
    assert np.array_equal(p1, p2)


def test_pivots_full_sample_is_exact():
    g = preferential_attachment(np.random.default_rng(6), 40, 2)
    np.testing.assert_allclose(betweenness(g, mode="pivots", k=40, seed=1).values, betweenness(g).values)
    with pytest.raises(ValueError):
        betweenness(g, mode="pivots", k=10)
    with pytest.raises(ValueError):
        betweenness(g, mode="pivots", k=0, seed=1)


def test_thread_env(monkeypatch):
    monkeypatch.setenv("DEPLENS_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("DEPLENS_THREADS", "0")
    assert thread_count() == 1
    assert thread_count(2) == 2


def test_top_k_ties_by_label():
    rows = top_k(np.array([1.0, 3.0, 3.0, 0.5]), 3, ["d", "c", "b", "a"])
    assert [(r, lab) for r, _, lab, _ in rows] == [(1, "b"), (2, "c"), (3, "d")]
    with pytest.raises(ValueError):
        top_k(np.ones(2), 0)


def test_group_compare_ratio():
    g = make_graph(
        [
            {"name": "t1", "marker": "theorem"},
            {"name": "t2", "marker": "theorem"},
            {"name": "l1", "marker": "lemma"},
            {"name": "x"},
        ],
        [("x", "t1"), ("l1", "t1"), ("x", "t2"), ("t2", "l1")],
    )
    rows, ratios = group_compare(g, ratio=("theorem", "lemma"))
    assert rows["theorem"].mean_in_degree == 1.5 and rows["lemma"].mean_in_degree == 1
    assert ratios["mean_in_degree"] == 1.5
    assert rows["theorem"].zero_citation_rate == 0
    rows, _ = group_compare(g, pagerank_scores=pagerank(g))
    assert rows["lemma"].mean_pagerank > 0
