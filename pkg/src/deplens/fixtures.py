"""Small hand-built graphs used by tests, examples and the ``fixtures`` command."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core_graph import DepGraph, EdgeRecord, NodeRecord, build_graph
from .ingest import DatasetManifest, PullRequest, normalize_module_path, write_edges, write_manifest, write_nodes


def make_graph(nodes: Sequence, edges: Iterable[Sequence], allow_self_loops: bool = False) -> DepGraph:
    """Nodes as names or dicts of NodeRecord fields; edges as (src, dst[, origin, synth, auto]) by name."""
    recs = []
    for i, spec in enumerate(nodes):
        if isinstance(spec, str):
            spec = {"name": spec}
        spec = {"kind": "theorem", **spec}
        recs.append(NodeRecord(id=i, **spec))
    index = {str(r.name): r.id for r in recs}
    erecs = []
    for e in edges:
        src, dst, *rest = e
        kw = {}
        if rest and isinstance(rest[-1], dict):
            kw = rest.pop()
        if rest:
            kw["origin"] = rest[0]
        if len(rest) > 1:
            kw["synthesized"] = bool(rest[1])
        if len(rest) > 2:
            kw["auto"] = bool(rest[2])
        erecs.append(EdgeRecord(index[src], index[dst], **kw))
    return build_graph(recs, erecs, allow_self_loops=allow_self_loops)


def modules(names: Sequence[str], imports: Iterable[tuple[str, str]]) -> DepGraph:
    return make_graph([{"name": n, "kind": "module"} for n in names], imports)


# -- figure-derived fixtures -----------------------------------------------------


def three_views() -> tuple[DepGraph, DepGraph]:
    """Five declarations over three files; returns (declaration graph, module graph)."""
    gd = make_graph(
        [
            {"name": "Nat.add_comm", "module": "Data.Nat.Basic"},
            {"name": "Nat.add_left_comm", "module": "Data.Nat.Basic"},
            {"name": "Nat.succ_eq_add_one", "module": "Data.Nat.Defs"},
            {"name": "Nat.zero_add", "module": "Data.Nat.Defs"},
            {"name": "Eq.refl", "kind": "constructor", "module": "Init.Prelude"},
        ],
        [
            ("Nat.add_left_comm", "Nat.add_comm", "proof", 0, 0),
            ("Nat.succ_eq_add_one", "Nat.add_comm", "proof", 0, 0),
            ("Nat.add_comm", "Eq.refl", "proof", 1, 0),
            ("Nat.add_left_comm", "Eq.refl", "proof", 1, 0),
            ("Nat.succ_eq_add_one", "Eq.refl", "proof", 1, 0),
            ("Nat.zero_add", "Eq.refl", "proof", 1, 0),
        ],
    )
    gm = modules(
        ["Data.Nat.Defs", "Data.Nat.Basic", "Init.Prelude"],
        [("Data.Nat.Defs", "Data.Nat.Basic"), ("Data.Nat.Basic", "Init.Prelude"), ("Data.Nat.Defs", "Init.Prelude")],
    )
    return gd, gm


def aggregation_example() -> DepGraph:
    """Declaration fragment whose depth-2 view has Nat.Primrec -> Nat (weight 1)."""
    return make_graph(
        ["Nat.add_comm", "Nat.add_left_comm", "Nat.Primrec.zero", "Nat.succ_eq_one", "Nat.zero_add"],
        [
            ("Nat.add_left_comm", "Nat.add_comm"),
            ("Nat.succ_eq_one", "Nat.add_comm"),
            ("Nat.zero_add", "Nat.add_left_comm"),
            ("Nat.Primrec.zero", "Nat.add_comm"),
        ],
    )


def aggregation_cycle() -> DepGraph:
    """Acyclic declarations that form Nat <-> Int once truncated at depth 2."""
    return make_graph(
        ["Nat.prime_iff_prime_int", "Int.dvd_natAbs", "Int.lcm_neg", "Nat.lcm"],
        [("Nat.prime_iff_prime_int", "Int.dvd_natAbs"), ("Int.lcm_neg", "Nat.lcm")],
    )


BUILD_WEIGHTS = {
    "Algebra.Order.Group": 1.0,
    "Data.Nat.Defs": 2.0,
    "Algebra.Group.Defs": 6.0,
    "Data.Int.Defs": 2.0,
    "Init": 1.0,
}


def build_example() -> tuple[DepGraph, dict[str, float]]:
    """Five-module build graph with per-module compile seconds."""
    top, mids = "Algebra.Order.Group", ["Data.Nat.Defs", "Algebra.Group.Defs", "Data.Int.Defs"]
    g = modules([top, *mids, "Init"], [(top, m) for m in mids] + [(m, "Init") for m in mids])
    return g, dict(BUILD_WEIGHTS)


def diamond() -> DepGraph:
    """Diamond plus the redundant shortcut Algebra.Group.Defs -> Init."""
    return modules(
        ["Algebra.Group.Defs", "Data.Int.Notation", "Data.Nat.Notation", "Init"],
        [
            ("Algebra.Group.Defs", "Data.Int.Notation"),
            ("Algebra.Group.Defs", "Data.Nat.Notation"),
            ("Data.Int.Notation", "Init"),
            ("Data.Nat.Notation", "Init"),
            ("Algebra.Group.Defs", "Init"),
        ],
    )


def comod_example() -> tuple[list[PullRequest], DepGraph]:
    prs = [
        ("18042", ["Data/Nat/Defs.lean", "Data/Nat/Order.lean", "Data/Int/Defs.lean"]),
        ("18107", ["Data/Nat/Defs.lean", "Data/Int/Defs.lean"]),
        ("18253", ["Algebra/Group/Defs.lean", "Data/Nat/Order.lean"]),
    ]
    records = [PullRequest(pid, frozenset(normalize_module_path(f) for f in files)) for pid, files in prs]
    gm = modules(
        ["Data.Nat.Defs", "Data.Int.Defs", "Data.Nat.Order", "Algebra.Group.Defs"],
        [
            ("Data.Int.Defs", "Data.Nat.Defs"),
            ("Data.Nat.Order", "Data.Nat.Defs"),
            ("Data.Nat.Order", "Data.Int.Defs"),
        ],
    )
    return records, gm


def coercion_tower() -> DepGraph:
    """N -> Z -> Q -> R -> C with every edge tagged ``coe``."""
    names = ["Nat", "Int", "Rat", "Real", "Complex"]
    return make_graph(
        [{"name": n, "kind": "inductive", "attributes": ["coe"]} for n in names],
        [(a, b, {"tags": {"coe"}}) for a, b in zip(names, names[1:])],
    )


def height_chain() -> DepGraph:
    return make_graph(
        [
            {"name": "Nat.pow", "kind": "definition", "def_height": 3},
            {"name": "Nat.mul", "kind": "definition", "def_height": 2},
            {"name": "Nat.add", "kind": "definition", "def_height": 1},
        ],
        [("Nat.pow", "Nat.mul", "statement"), ("Nat.mul", "Nat.add", "statement")],
    )


def utilization_example() -> tuple[DepGraph, DepGraph]:
    """ZeroLEOne cites 2 of the 50 declarations of Pi.Defs; returns (decls, modules)."""
    src_mod, dst_mod = "Algebra.Order.ZeroLEOne", "Algebra.Notation.Pi.Defs"
    pi = ["Pi.instOne", "Pi.instZero"] + [f"Pi.inst_{i:02d}" for i in range(48)]
    nodes = [{"name": "Pi.instZeroLEOneClass", "kind": "definition", "module": src_mod}]
    nodes += [{"name": n, "kind": "definition", "module": dst_mod} for n in pi]
    gd = make_graph(nodes, [("Pi.instZeroLEOneClass", "Pi.instOne"), ("Pi.instZeroLEOneClass", "Pi.instZero")])
    return gd, modules([src_mod, dst_mod], [(src_mod, dst_mod)])


def x_graph() -> DepGraph:
    """Two sources and two sinks joined through one center node."""
    return make_graph(["a", "b", "c", "d", "e"], [("a", "c"), ("b", "c"), ("c", "d"), ("c", "e")])


# -- toy on-disk dataset --------------------------------------------------------


_MODULES = [
    "Init.Prelude",
    "Data.Nat.Defs",
    "Data.Nat.Basic",
    "Data.Int.Defs",
    "Data.Nat.Order",
    "Algebra.Group.Defs",
    "Algebra.Order.Group",
]
_IMPORTS = [
    ("Data.Nat.Defs", "Init.Prelude"),
    ("Data.Nat.Basic", "Data.Nat.Defs"),
    ("Data.Nat.Basic", "Init.Prelude"),
    ("Data.Int.Defs", "Data.Nat.Defs"),
    ("Data.Nat.Order", "Data.Nat.Defs"),
    ("Data.Nat.Order", "Data.Int.Defs"),
    ("Algebra.Group.Defs", "Init.Prelude"),
    ("Algebra.Order.Group", "Algebra.Group.Defs"),
    ("Algebra.Order.Group", "Data.Nat.Order"),
    ("Algebra.Order.Group", "Init.Prelude"),
]
_WEIGHTS = {
    "Init.Prelude": 1.0,
    "Data.Nat.Defs": 2.0,
    "Data.Nat.Basic": 3.0,
    "Data.Int.Defs": 2.0,
    "Data.Nat.Order": 4.0,
    "Algebra.Group.Defs": 6.0,
    "Algebra.Order.Group": 1.0,
}


def _toy_declarations(extra: bool = False) -> DepGraph:
    def d(name, kind, module, **kw):
        return {"name": name, "kind": kind, "module": module, **kw}

    nodes = [
        d("Eq", "inductive", "Init.Prelude", attributes=[], def_height="opaque"),
        d("Eq.refl", "constructor", "Init.Prelude", attributes=[]),
        d("Nat", "inductive", "Init.Prelude", attributes=[]),
        d("Nat.succ", "constructor", "Init.Prelude", attributes=["simp"]),
        d("Nat.add", "definition", "Data.Nat.Defs", attributes=["simp"], def_height=1),
        d("Nat.mul", "definition", "Data.Nat.Defs", attributes=[], def_height=2),
        d("Nat.pow", "definition", "Data.Nat.Defs", attributes=[], def_height=3),
        d("Nat.zero_add", "theorem", "Data.Nat.Defs", attributes=["simp"], tactics=["induction", "simp", "rw"], marker="theorem"),
        d("Nat.succ_eq_add_one", "theorem", "Data.Nat.Defs", attributes=[], tactics=["rfl"], marker="theorem"),
        d("Nat.add_comm", "theorem", "Data.Nat.Basic", attributes=["simp"], tactics=["induction", "simp", "rw", "rw"], marker="theorem"),
        d("Nat.add_left_comm", "theorem", "Data.Nat.Basic", attributes=[], tactics=["rw", "rw", "exact"], marker="lemma"),
        d("Nat.le", "inductive", "Data.Nat.Order", attributes=[]),
        d("Nat.le.refl", "constructor", "Data.Nat.Order", attributes=[]),
        d("Nat.le_succ", "theorem", "Data.Nat.Order", attributes=["simp"], tactics=["exact"], marker="lemma"),
        d("Int", "inductive", "Data.Int.Defs", attributes=[]),
        d("Int.ofNat", "constructor", "Data.Int.Defs", attributes=["coe"]),
        d("Int.add", "definition", "Data.Int.Defs", attributes=[], def_height="abbrev"),
        d("Int.add_comm", "theorem", "Data.Int.Defs", attributes=["simp"], tactics=["simp", "omega"], marker="theorem"),
        d("Mul", "definition", "Algebra.Group.Defs", attributes=[], def_height=1),
        d("Add", "definition", "Algebra.Group.Defs", attributes=["to_additive"], def_height=1),
        d("Monoid", "definition", "Algebra.Group.Defs", attributes=[], def_height=4),
        d("AddMonoid", "definition", "Algebra.Group.Defs", attributes=["to_additive"], def_height=4),
        d("mul_comm", "theorem", "Algebra.Group.Defs", attributes=["simp"], tactics=["exact"], marker="theorem"),
        d("OrderedMonoid", "definition", "Algebra.Order.Group", attributes=[], def_height=5),
        d("funext", "theorem", None, attributes=None),
    ]
    edges = [
        ("Eq", "Eq.refl", "statement", 0, 0),
        ("Eq.refl", "Eq", "statement", 0, 0),
        ("Nat", "Nat.succ", "statement", 0, 0),
        ("Nat.succ", "Nat", "statement", 0, 0),
        ("Nat.add", "Nat", "statement", 0, 0),
        ("Nat.add", "Nat.succ", "proof", 0, 0),
        ("Nat.mul", "Nat.add", "proof", 0, 0),
        ("Nat.mul", "Nat", "statement", 0, 0),
        ("Nat.pow", "Nat.mul", "proof", 0, 0),
        ("Nat.pow", "Nat", "statement", 0, 0),
        ("Nat.zero_add", "Nat.add", "statement", 0, 0),
        ("Nat.zero_add", "Eq.refl", "proof", 1, 0),
        ("Nat.succ_eq_add_one", "Nat.add_comm", "proof", 0, 0),
        ("Nat.succ_eq_add_one", "Eq.refl", "proof", 1, 0),
        ("Nat.succ_eq_add_one", "Nat.succ", "statement", 0, 0),
        ("Nat.add_comm", "Nat.add", "both", 0, 0),
        ("Nat.add_comm", "Eq.refl", "proof", 1, 0),
        ("Nat.add_left_comm", "Nat.add_comm", "proof", 0, 0),
        ("Nat.add_left_comm", "Eq.refl", "proof", 1, 0),
        ("Nat.le", "Nat", "statement", 0, 0),
        ("Nat.le", "Nat.le.refl", "statement", 0, 1),
        ("Nat.le.refl", "Nat.le", "statement", 0, 0),
        ("Nat.le_succ", "Nat.le", "statement", 0, 0),
        ("Nat.le_succ", "Nat.le.refl", "proof", 0, 0),
        ("Int", "Int.ofNat", "statement", 0, 0),
        ("Int.ofNat", "Int", "statement", 0, 0),
        ("Int.ofNat", "Nat", "statement", 0, 0, {"tags": {"coe"}}),
        ("Int.add", "Int", "statement", 0, 0),
        ("Int.add_comm", "Int.add", "statement", 0, 0),
        ("Int.add_comm", "Nat.add_comm", "proof", 0, 0),
        ("Int.add_comm", "Eq.refl", "proof", 1, 0),
        ("Mul", "Nat", "statement", 1, 1),
        ("Add", "Nat", "statement", 1, 1),
        ("Monoid", "Mul", "statement", 0, 0, {"tags": {"extends"}}),
        ("AddMonoid", "Add", "statement", 0, 0, {"tags": {"extends"}}),
        ("mul_comm", "Monoid", "statement", 1, 0),
        ("mul_comm", "Eq.refl", "proof", 1, 0),
        ("OrderedMonoid", "Monoid", "statement", 0, 0, {"tags": {"extends"}}),
        ("OrderedMonoid", "Nat.le", "statement", 1, 0),
        ("funext", "Eq", "statement", 0, 0),
    ]
    if extra:
        nodes.append(d("Nat.mul_comm", "theorem", "Data.Nat.Basic", attributes=[], tactics=["rw", "simp"], marker="theorem"))
        edges += [("Nat.mul_comm", "Nat.mul", "statement", 0, 0), ("Nat.mul_comm", "Nat.add_comm", "proof", 0, 0)]
    return make_graph(nodes, edges)


def _bulk_block(size: int, rng: np.random.Generator) -> tuple[list[dict], list[tuple]]:
    """Preferential-attachment declarations ``Bulk.Tk.dNNN`` (heavy-tailed in-degree)."""
    nodes, edges, targets = [], [], []
    for i in range(size):
        name = f"Bulk.T{i % 7}.d{i:04d}"
        nodes.append({"name": name, "kind": "theorem", "module": "Bulk.Lemmas", "attributes": [],
                      "tactics": ["simp"] if i % 3 else ["rw", "exact"], "marker": "theorem" if i % 2 else "lemma"})
        if i:
            picks = {targets[j] for j in rng.integers(0, len(targets), size=min(3, i))} if targets else set()
            picks.add(f"Bulk.T{(i - 1) % 7}.d{i - 1:04d}")
            for t in sorted(picks):
                edges.append((name, t, "proof", 0, 0))
                targets.append(t)
        targets.append(name)
    return nodes, edges


def toy_library(extra: bool = False, bulk: int = 0) -> tuple[DepGraph, DepGraph, dict[str, float], list[PullRequest]]:
    """Declarations, modules, build weights and PR records of a small consistent library.

    ``bulk`` appends that many synthetic declarations in module ``Bulk.Lemmas``.
    """
    names, imports, weights = list(_MODULES), list(_IMPORTS), dict(_WEIGHTS)
    gd = _toy_declarations(extra)
    if bulk:
        names.append("Bulk.Lemmas")
        imports.append(("Bulk.Lemmas", "Init.Prelude"))
        weights["Bulk.Lemmas"] = 2.0
        bnodes, bedges = _bulk_block(bulk, np.random.default_rng(0))
        nodes = [dict(_record_fields(r)) for r in gd.nodes] + bnodes
        edges = [_edge_spec(gd, e) for e in range(gd.n_edges)] + bedges
        gd = make_graph(nodes, edges)
    prs, _ = comod_example()
    return gd, modules(names, imports), weights, prs


def _record_fields(r: NodeRecord) -> dict:
    out = {"name": str(r.name), "kind": r.kind}
    for k in ("module", "attributes", "def_height", "tactics", "marker"):
        v = getattr(r, k)
        if v is not None:
            out[k] = str(v) if k == "module" else v
    return out


def _edge_spec(g: DepGraph, e: int) -> tuple:
    rec = g.edge(e)
    kw = {"origin": rec.origin, "synthesized": rec.synthesized, "auto": rec.auto, "tags": rec.tags}
    return (g.name(rec.src), g.name(rec.dst), kw)


def write_toy_dataset(out_dir: "str | Path", bulk: int = 0) -> Path:
    """Write a two-snapshot toy dataset and return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for label, extra in (("v1", False), ("v2", True)):
        gd, gm, weights, prs = toy_library(extra, bulk)
        write_nodes(gm.nodes, out / f"{label}_modules.jsonl")
        write_edges(gm.edge_table, gm.names(), out / f"{label}_imports.csv")
        write_nodes(gd.nodes, out / f"{label}_decls.jsonl")
        write_edges(gd.edge_table, gd.names(), out / f"{label}_premises.csv")
        with open(out / f"{label}_weights.csv", "w", encoding="utf-8") as fh:
            fh.write("module,seconds\n")
            for name in gm.names():
                fh.write(f"{name},{weights[name]!r}\n")
        with open(out / f"{label}_prs.jsonl", "w", encoding="utf-8") as fh:
            for pr in prs:
                files = sorted(str(f).replace(".", "/") + ".lean" for f in pr.files)
                fh.write(json.dumps({"pr_id": pr.pr_id, "files": files}) + "\n")
        records.append(
            DatasetManifest(
                "module", out / f"{label}_modules.jsonl", out / f"{label}_imports.csv", label,
                weight_path=out / f"{label}_weights.csv", comod_path=out / f"{label}_prs.jsonl",
            )
        )
        records.append(DatasetManifest("declaration", out / f"{label}_decls.jsonl", out / f"{label}_premises.csv", label))
    path = out / "manifest.json"
    write_manifest(records, path)
    return path
