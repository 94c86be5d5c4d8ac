import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deplens import fixtures
from deplens.core_graph import NodeRecord
from deplens.decomp_stats import (
    FreqProfile,
    attribute_stats,
    def_height_stats,
    diameter,
    edge_partition_stats,
    inter_kind_flow,
    jsd,
    subgraph_by_predicate,
    tactic_stats,
    tagged_subgraph,
)
from deplens.fixtures import make_graph


def test_edge_partition_counts():
    g = make_graph(
        ["a", "b", "c", "d"],
        [("a", "b", "statement", 1, 0), ("a", "c", "proof", 0, 1), ("b", "c", "both", 1, 1), ("c", "d")],
    )
    s = edge_partition_stats(g)
    assert s.origin == {"statement": 1, "proof": 1, "both": 1} and s.origin_unknown == 1
    assert s.origin_fractions["proof"] == pytest.approx(1 / 3)
    assert s.synthesis_ratio == pytest.approx(2 / 3) and s.synthesis_unknown == 1
    assert s.auto_fraction == pytest.approx(2 / 3)
    assert s.to_json()["derivation_unknown"] == 1


def test_coercion_tower():
    g = fixtures.coercion_tower()
    sub = tagged_subgraph(g, "coe")
    assert (sub.n_nodes, sub.n_edges) == (5, 4)
    assert diameter(sub) == 4
    assert tagged_subgraph(g, "simp").n_nodes == 0


def test_subgraph_predicates():
    g = fixtures.coercion_tower()
    sub = subgraph_by_predicate(g, lambda r: str(r.name) != "Rat")
    assert sub.n_nodes == 4 and sub.n_edges == 2
    sub = subgraph_by_predicate(g, edge_pred=np.array([True, False, False, True]))
    assert sub.n_nodes == 5 and sub.n_edges == 2


def test_diameter_ignores_unreachable():
    g = make_graph(["a", "b", "c"], [("a", "b"), ("c", "b")])
    assert diameter(g) == 1


def test_attribute_universe():
    recs = [
        NodeRecord(0, "a", "theorem", attributes={"simp", "to_additive"}),
        NodeRecord(1, "b", "theorem", attributes={"simp"}),
        NodeRecord(2, "c", "theorem", attributes=set()),
        NodeRecord(3, "d", "theorem"),  # unknown, excluded
    ]
    s = attribute_stats(recs)
    assert s.universe == 3 and s.counts == {"simp": 2, "to_additive": 1}
    assert s.any_count == 2 and s.flattening_ratio == pytest.approx(1 / 3)
    assert s.shares["simp"] == pytest.approx(2 / 3)


def test_height_chain():
    s = def_height_stats(fixtures.height_chain())
    assert (s.regular, s.median, s.max, s.mean) == (3, 2, 3, 2.0)
    recs = [NodeRecord(0, "x", "definition", def_height="abbrev"), NodeRecord(1, "y", "definition", def_height="opaque")]
    s = def_height_stats(recs)
    assert (s.regular, s.abbrev, s.opaque, s.median) == (0, 1, 1, None)


profiles = st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 20), min_size=1).map(FreqProfile.from_counter)


@settings(max_examples=100, deadline=None)
@given(profiles, profiles)
def test_jsd_properties(p, q):
    d = jsd(p, q)
    assert 0 <= d <= 1
    assert d == pytest.approx(jsd(q, p))
    assert jsd(p, p) == pytest.approx(0, abs=1e-12)
    # direct formula
    pd, qd = p.distribution(), q.distribution()
    keys = set(pd) | set(qd)
    m = {k: (pd.get(k, 0) + qd.get(k, 0)) / 2 for k in keys}
    kl = lambda x: sum(v * math.log2(v / m[k]) for k, v in x.items() if v > 0)  # noqa: E731
    assert d == pytest.approx(0.5 * kl(pd) + 0.5 * kl(qd), abs=1e-12)


def test_jsd_disjoint_and_empty():
    assert jsd(FreqProfile({"a": 3}), FreqProfile({"b": 1})) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        jsd(FreqProfile({}), FreqProfile({"a": 1}))


def test_tactic_stats_groups():
    recs = [
        NodeRecord(0, "A.x", "theorem", tactics=["simp", "exact"]),
        NodeRecord(1, "A.y", "theorem", tactics=["simp"]),
        NodeRecord(2, "B.z", "theorem", tactics=["ring", "ring", "exact"]),
        NodeRecord(3, "B.w", "theorem", tactics=[]),  # term-mode proof
        NodeRecord(4, "C.v", "theorem", tactics=["omega"]),
    ]
    s = tactic_stats(recs, lambda r: str(r.name).split(".")[0], min_proofs=1)
    assert s.proofs == 4 and s.steps == 7 and s.steps_max == 3 and s.steps_median == 1
    assert list(s.profile.counts) == ["exact", "ring", "simp", "omega"]
    assert s.group_names == ("A", "B", "C")
    assert s.jsd("A", "C") == pytest.approx(1.0) and s.jsd("A", "A") == 0
    assert np.allclose(s.jsd_matrix, s.jsd_matrix.T)
    s2 = tactic_stats(recs, lambda r: str(r.name).split(".")[0], min_proofs=2)
    assert s2.group_names == ("A",)


def test_inter_kind_flow():
    g = make_graph(
        [{"name": "t"}, {"name": "d", "kind": "definition"}, {"name": "i", "kind": "inductive"}],
        [("t", "d"), ("t", "i"), ("d", "i")],
    )
    kinds, mat = inter_kind_flow(g)
    assert set(kinds) == {"theorem", "definition", "inductive"}
    assert mat.sum() == 3
    idx = {k: i for i, k in enumerate(kinds)}
    assert mat[idx["theorem"], idx["inductive"]] == 1 and mat[idx["definition"], idx["inductive"]] == 1
