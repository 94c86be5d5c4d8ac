import json

import pytest

from deplens.cli import Report, emit_curves, main
from deplens.fixtures import write_toy_dataset

# (command, extra args) runs expected to succeed on the bulk toy dataset
RUNS = [
    ("validate", []),
    ("stats", ["--what", "all", "--layer", "decl"]),
    ("reduce", []),
    ("critical-path", []),
    ("critical-path", ["--uniform"]),
    ("containment", ["--layer", "decl", "--depth", "1,2"]),
    ("cohesion", []),
    ("utilization", []),
    ("classify-imports", ["--min-group", "1"]),
    ("aggregate-ns", ["--depth", "1,2"]),
    ("centrality", ["--measure", "pagerank,betweenness,in-degree", "--layer", "decl"]),
    ("centrality", ["--measure", "betweenness", "--pivots", "20", "--seed", "3", "--layer", "decl"]),
    ("community", ["--layer", "decl", "--seed", "1"]),
    ("compare-partitions", ["--a", "community", "--b", "ns:1", "--seed", "1"]),
    ("fit-tail", ["--compare"]),
    ("robustness", ["--strategy", "both", "--trials", "2", "--seed", "5", "--single", "Nat.add"]),
    ("decomp", []),
    ("pairs", []),
    ("snapshot-diff", ["--seed", "2"]),
    ("comod", []),
]


@pytest.fixture(scope="module")
def manifest(tmp_path_factory):
    return str(write_toy_dataset(tmp_path_factory.mktemp("toy"), bulk=400))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("command,extra", RUNS, ids=[f"{c}-{i}" for i, (c, _) in enumerate(RUNS)])
def test_command_succeeds(capsys, manifest, command, extra):
    code, out, err = run(capsys, command, "--manifest", manifest, *extra)
    assert code == 0, err
    env = json.loads(out)
    assert env["command"] == command and env["tool"] == "deplens"
    assert len(env["manifest_hash"]) == 64
    assert "wall_time" not in env


def test_report_all_is_reproducible(capsys, manifest, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        code, _, err = run(capsys, "report-all", "--manifest", manifest, "--seed", "7", "--trials", "2", "--out", str(p))
        assert code == 0, err
    assert a.read_bytes() == b.read_bytes()


def test_curves_dir(capsys, manifest, tmp_path):
    code, _, _ = run(
        capsys, "robustness", "--manifest", manifest, "--strategy", "targeted", "--fractions", "0,0.5,1",
        "--curves-dir", str(tmp_path),
    )
    assert code == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files and all(f.startswith("robustness_") and f.endswith(".csv") for f in files)
    lines = (tmp_path / files[0]).read_text().splitlines()
    assert len(lines) == 4
    gcc = [float(r.split(",")[1]) for r in lines[1:]]
    assert 0 < gcc[0] <= 1 and gcc == sorted(gcc, reverse=True) and gcc[-1] == 0


def test_usage_errors(capsys, manifest):
    with pytest.raises(SystemExit) as exc:
        main(["community", "--manifest", manifest])
    # randomized commands refuse to run without a seed
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--manifest", manifest, "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["stats"])
    assert exc.value.code == 2


def test_invalid_input_exit_code(capsys, tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "stats", "--manifest", str(bad))
    assert code == 1 and "invalid input" in err
    code, _, _ = run(capsys, "stats", "--manifest", str(tmp_path / "missing.json"))
    assert code == 1


def test_small_sample_fit_is_invalid(capsys, tmp_path):
    m = str(write_toy_dataset(tmp_path))
    code, _, err = run(capsys, "fit-tail", "--manifest", m)
    assert code == 1


def test_csv_and_record_time(capsys, manifest):
    code, out, _ = run(capsys, "reduce", "--manifest", manifest, "--format", "csv", "--record-time")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "key,value"
    keys = [r.split(",", 1)[0] for r in rows[1:]]
    assert "command" in keys and "wall_time" in keys


def test_fixtures_command(capsys, tmp_path):
    code, out, _ = run(capsys, "fixtures", str(tmp_path / "ds"))
    assert code == 0
    assert (tmp_path / "ds").is_dir()
    code, _, _ = run(capsys, "validate", "--manifest", json.loads(out)["payload"]["manifest"])
    assert code == 0


def test_emit_curves_edge_cases(tmp_path):
    rep = Report("robustness", {}, {}, curves={"empty": (("f", "gcc"), []), "one": (("f", "gcc"), [[0, 1]])})
    emit_curves(rep, tmp_path)
    assert (tmp_path / "robustness_empty.csv").read_text() == "f,gcc\n"
    assert (tmp_path / "robustness_one.csv").read_text() == "f,gcc\n0,1\n"
