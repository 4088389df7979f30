import json

import pytest

from whitener.cli import EXIT_BUDGET, EXIT_INVALID, main
from whitener.textio import loads


def test_gen_color_whiten_pipeline(tmp_path, capsys):
    g = tmp_path / "g.txt"
    c = tmp_path / "c.txt"
    w = tmp_path / "w.txt"
    assert main(["gen", "--n", "30", "--alpha", "1.5", "--seed", "2", "--output", str(g)]) == 0
    inst = loads(g.read_text())
    assert inst.graph.n == 30 and inst.graph.m == 45
    assert main(["color", "--input", str(g), "--q", "3", "--seed", "1", "-o", str(c)]) == 0
    assert loads(c.read_text()).coloring is not None
    assert main(["whiten", "-i", str(c), "--directional", "--emit-fingerprint", "-o", str(w)]) == 0
    text = w.read_text()
    assert text.startswith("# fingerprint ")
    assert loads(text).directional is not None
    assert main(["whiten", "-i", str(c), "--order-seed", "3"]) == 0
    assert "w 0 " in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert main(["ring-demo", "--n-values", "4"]) == EXIT_INVALID
    assert main(["sweep", "--alpha-min", "2", "--alpha-max", "1"]) == EXIT_INVALID
    assert main(["color", "--n", "40", "--alpha", "4", "--max-steps", "100"]) == EXIT_BUDGET
    with pytest.raises(SystemExit) as info:
        main(["gen", "--n", "5"])
    assert info.value.code == EXIT_INVALID
    bad = tmp_path / "bad.txt"
    bad.write_text("p 3 1 0\ne 0 1\n")
    assert main(["whiten", "-i", str(bad)]) == EXIT_INVALID
    assert main(["count", "--n", "30", "--alpha", "2.0", "--samples", "1", "--cap", "2", "--exhaustive-max-n", "40"]) == 0
    capsys.readouterr()


def test_sp_json(capsys):
    assert main(["sp", "--n", "200", "--alpha", "1.0", "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    row = doc["rows"][0]
    assert row["converged"] and row["sigma"] == pytest.approx(0, abs=1e-12)
    assert doc["seed"] == 1


def test_quasi_csv_and_ring_demo_json(capsys):
    assert main(["quasi", "--n", "40", "--sweeps", "3"]) == 0
    out = capsys.readouterr().out
    assert "sweep,violated_edges,total_l1,per_node" in out
    assert main(["ring-demo", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["n"] for r in doc["rows"]] == [3, 5, 7]


def test_theorem_commands(capsys):
    assert main(["theorem-b", "--n", "300", "--alpha", "1.8", "--samples", "2", "--L", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["rows"][0]["pairs_tested"] == 2
    assert main(["theorem-c", "--n-values", "100", "200", "--alpha", "2.0", "--samples", "3",
                 "--coloring-source", "planted", "--format", "csv"]) == 0
    assert "q_estimate" in capsys.readouterr().out
