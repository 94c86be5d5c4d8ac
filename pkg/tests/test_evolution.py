import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from deplens import fixtures
from deplens.core_graph import DottedName, Partition
from deplens.evolution import (
    build_comod_graph,
    community_persistence,
    comod_vs_imports,
    growth_indicators,
    hub_turnover,
    labels_by_name,
)
from deplens.fixtures import make_graph
from deplens.ingest import PullRequest

NAMES = ["a", "b", "c", "d", "e"]


def tournament(forward: bool):
    # forward: every node cites all later ones, so in-degree grows along NAMES
    pairs = itertools.combinations(NAMES, 2)
    return make_graph(NAMES, [(x, y) if forward else (y, x) for x, y in pairs])


def test_growth_rows():
    g1, g2 = tournament(True), make_graph(["a", "b"], [("a", "b")])
    rows = growth_indicators([("v1", g2, None), ("v2", g1, g2)])
    assert [(r.declarations, r.modules, r.edges) for r in rows] == [(2, 0, 1), (5, 2, 10)]
    assert rows[1].density == 2.0 and rows[1].to_json()["density"] == 2.0
    with pytest.raises(ValueError):
        growth_indicators([])
    with pytest.raises(ValueError):
        growth_indicators([("v", g1, None), ("v", g1, None)])


def test_hub_turnover_extremes():
    a, b = tournament(True), tournament(False)
    assert hub_turnover(a, a, k=5) == pytest.approx(1.0)
    assert hub_turnover(a, b, k=5) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        hub_turnover(a, b, k=1)
    with pytest.raises(ValueError):
        hub_turnover(a, make_graph(["z"], []), k=5)


def test_hub_turnover_outside_top_ties_last():
    a, b = tournament(True), tournament(False)
    # top-2 of a is {e, d}; of b is {a, b}; outsiders share the bottom rank
    union = ["a", "b", "d", "e"]
    da = {"a": -1, "b": -1, "d": 3, "e": 4}
    db = {"a": 4, "b": 3, "d": -1, "e": -1}
    expect = stats.spearmanr([da[u] for u in union], [db[u] for u in union]).statistic
    assert hub_turnover(a, b, k=2) == pytest.approx(expect)


def test_community_persistence_shared_names():
    g = tournament(True)
    labels = labels_by_name(g, Partition.from_values([0, 0, 1, 1, 1]))
    assert labels == {"a": 0, "b": 0, "c": 1, "d": 1, "e": 1}
    other = {"a": 5, "b": 5, "c": 7, "d": 7, "e": 7, "new": 9}
    assert community_persistence(labels, other) == 1.0
    with pytest.raises(ValueError):
        community_persistence(labels, {"zz": 1})


files = st.frozensets(st.sampled_from(["A.x", "A.y", "B.z", "C.w", "D.v"]), min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(st.lists(files, min_size=1, max_size=12))
def test_comod_weights_count_prs(file_sets):
    prs = [PullRequest(str(i), frozenset(DottedName.parse(f) for f in fs)) for i, fs in enumerate(file_sets)]
    cg = build_comod_graph(prs)
    expect = Counter()
    for fs in file_sets:
        for p in itertools.combinations(sorted(fs), 2):
            expect[p] += 1
    got = {
        tuple(sorted((cg.names[u], cg.names[v]))): w
        for u, v, w in zip(cg.u.tolist(), cg.v.tolist(), cg.w.tolist())
    }
    assert got == dict(expect)
    assert cg.names == tuple(sorted({f for fs in file_sets for f in fs}))


def test_comod_example():
    prs, gm = fixtures.comod_example()
    cg = build_comod_graph(prs)
    i, j = cg.names.index("Data.Int.Defs"), cg.names.index("Data.Nat.Defs")
    k = np.flatnonzero((cg.u == min(i, j)) & (cg.v == max(i, j)))
    assert cg.w[k].tolist() == [2.0]
    cmp = comod_vs_imports(cg, gm)
    assert ("Algebra.Group.Defs", "Data.Nat.Order") in cmp.hidden
    assert ("Data.Int.Defs", "Data.Nat.Defs") in cmp.both
    assert cmp.counts() == {"both": 3, "hidden": 1, "import_only": 0, "outside": 0}


def test_comod_outside_pairs():
    prs = [PullRequest("1", frozenset(map(DottedName.parse, ["A.x", "Gone.y"])))]
    gm = fixtures.modules(["A.x", "B.z"], [("A.x", "B.z")])
    cmp = comod_vs_imports(build_comod_graph(prs), gm)
    assert cmp.outside == [("A.x", "Gone.y")] and cmp.import_only == [("A.x", "B.z")]
