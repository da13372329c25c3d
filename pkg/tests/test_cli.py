"""Command-line surface: exit codes, output formats, reproducibility."""

import json

import pytest

from tlg import fixtures as fx
from tlg.cli import main, parse_point, tool_hash
from tlg.core import (Edge, TimeLikeGraph, Vertex, dump_tlg, is_ncc,
                      load_tlg, validate_tlg, TLGError)


@pytest.fixture
def graphs(tmp_path):
    paths = {}
    for name, g in (("spine", fx.nonplanar_ncc()),
                    ("double", fx.double_cell_noncc()),
                    ("cell", fx.single_cell())):
        p = tmp_path / f"{name}.json"
        dump_tlg(g, p)
        paths[name] = str(p)
    return paths


# -- point syntax ----------------------------------------------------------------

def test_parse_point_forms():
    assert parse_point("v:3") == 3
    assert parse_point("e:1-2@0.5") == (Edge(1, 2, 0), 0.5)
    assert parse_point("e:1-2:1@0.25") == (Edge(1, 2, 1), 0.25)
    for bad in ("x:1", "e:1@0.5", "e:1-2", "v:a"):
        with pytest.raises(TLGError):
            parse_point(bad)


# -- check -------------------------------------------------------------------------

def test_check_ncc_graph_exits_zero(graphs, capsys):
    assert main(["check", graphs["spine"]]) == 0
    out = capsys.readouterr().out
    assert "valid strict graph" in out
    assert "NCC: yes" in out


def test_check_non_ncc_graph_exits_one_with_witness(graphs, capsys):
    assert main(["check", graphs["double"]]) == 1
    out = capsys.readouterr().out
    assert "NCC: no" in out
    assert "witness cell" in out
    assert "3/4/6 vs 3/5/6" in out or "3/5/6 vs 3/4/6" in out


def test_check_unparsable_file_exits_three(tmp_path, capsys):
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    assert main(["check", str(p)]) == 3
    assert "error:" in capsys.readouterr().err


def test_check_invalid_graph_exits_two(tmp_path, capsys):
    g = TimeLikeGraph([Vertex(0, 0.0), Vertex(1, 0.5), Vertex(2, 1.0)],
                      [Edge(0, 1), Edge(1, 2)])
    assert not validate_tlg(g).ok
    p = tmp_path / "bad.json"
    dump_tlg(g, p)
    assert main(["check", str(p)]) == 2
    assert "invalid:" in capsys.readouterr().out


# -- cov ---------------------------------------------------------------------------

def test_cov_exact_value_on_the_cell(graphs, capsys):
    rc = main(["cov", graphs["cell"], "e:1-2@0.3333333333333333",
               "e:1-2:1@0.5", "--law", "two-sided"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "exact\t0.166666666667" in out


def test_cov_mc_requires_a_seed(graphs, capsys):
    assert main(["cov", graphs["cell"], "v:1", "v:2",
                 "--mc", "1000"]) == 2
    assert "--seed" in capsys.readouterr().err


def test_cov_bad_point_syntax_exits_two(graphs, capsys):
    assert main(["cov", graphs["cell"], "w:1", "v:2"]) == 2


def test_cov_on_a_non_ncc_graph_exits_one(graphs, capsys):
    assert main(["cov", graphs["double"], "v:1", "v:2"]) == 1


def test_cov_cell_formula_reports_the_inconsistency(graphs, capsys):
    assert main(["cov", graphs["double"], "--cell-formula"]) == 0
    out = capsys.readouterr().out
    assert "11/21" in out and "1/2" in out
    assert "consistent: no (difference 1/42)" in out


def test_cov_mc_line_and_manifest_replay(graphs, tmp_path, capsys):
    man1, man2 = str(tmp_path / "m1.json"), str(tmp_path / "m2.json")
    argv = ["cov", graphs["cell"], "v:1", "v:2", "--mc", "2000",
            "--seed", "11"]
    assert main(argv + ["--manifest", man1]) == 0
    out1 = capsys.readouterr().out
    assert main(argv + ["--manifest", man2]) == 0
    out2 = capsys.readouterr().out
    assert out1 == out2
    assert "mc\t" in out1 and "stderr" in out1
    a, b = json.load(open(man1)), json.load(open(man2))
    assert a == b
    assert a["seed"] == 11 and a["n"] == 2000
    assert "tower_hash" in a and a["version"] == tool_hash()


# -- harness -----------------------------------------------------------------------

def test_harness_midpoint_weights(graphs, capsys):
    rc = main(["harness", graphs["cell"], "0,1,2,3", "e:1-2:1@0.5", "1"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("vertex,time,probability")
    assert any(l.startswith("v:1,") and l.endswith("0.5") for l in lines)
    assert any(l.startswith("v:2,") and l.endswith("0.5") for l in lines)


def test_harness_refuses_a_vertex_t_star(graphs, capsys):
    assert main(["harness", graphs["cell"], "0,1,2,3", "v:1", "1"]) == 2


# -- dubins ------------------------------------------------------------------------

@pytest.fixture
def uniform_file(tmp_path):
    p = tmp_path / "uniform.json"
    p.write_text('{"uniform": ["0", "1"]}\n')
    return str(p)


def test_dubins_levels_and_w1(uniform_file, capsys):
    assert main(["dubins", uniform_file, "2"]) == 0
    out = capsys.readouterr().out
    assert "H_1\t1/4\t3/4" in out
    assert "H_2\t1/8\t3/8\t5/8\t7/8" in out
    assert "W1\t0.0625" in out


def test_dubins_second_moment_check(uniform_file, capsys):
    assert main(["dubins", uniform_file, "8", "--verify-427", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "lhs\t0.375" in out and "rhs\t0.375" in out
    assert "diff\t0" in out


def test_dubins_embedding_graph_output(uniform_file, tmp_path, capsys):
    out_file = tmp_path / "embed.json"
    assert main(["dubins", uniform_file, "3",
                 "--embed-tlg", str(out_file)]) == 0
    g = load_tlg(out_file)
    assert validate_tlg(g).ok
    assert is_ncc(g).ncc
    obj = json.loads(out_file.read_text())
    assert obj["tStar"]["time"] == 0.5
    assert len(obj["sigmaStar"]["vertices"]) == 2 + 2 ** 3


def test_dubins_unreadable_measure_exits_three(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text("[1, 2")
    assert main(["dubins", str(p), "2"]) == 3


# -- honeycomb ---------------------------------------------------------------------

def test_honeycomb_chain_analytics(capsys):
    assert main(["honeycomb", "--chain"]) == 0
    out = capsys.readouterr().out
    assert "stationary\t1/8\t3/8\t3/8\t1/8" in out
    assert "step-variance\t3/16*rho^2" in out


def test_honeycomb_convergence_table(capsys):
    assert main(["honeycomb", "0.6", "0.6", "0.3",
                 "--rhos", "0.4,0.2"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("rho,j_star,sigma2,finite,limit")
    assert len([l for l in lines if l.startswith("0.")]) == 2
    assert any(l.startswith("offset-factor\t") for l in lines)


def test_honeycomb_pinned_axis_rows_are_zero(capsys):
    assert main(["honeycomb", "0.0", "0.6", "0.3", "--rhos", "0.4"]) == 0
    out = capsys.readouterr().out
    row = [l for l in out.strip().splitlines() if l.startswith("0.4,")][0]
    fields = row.split(",")
    assert float(fields[3]) == 0.0 and float(fields[4]) == 0.0


def test_honeycomb_mc_cross_check_line(capsys):
    assert main(["honeycomb", "0.625", "0.625", "0.09375",
                 "--rhos", "0.25", "--mc", "2000", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert "mc-check\tdp\t" in out and "engine\t" in out


def test_honeycomb_incomplete_arguments_exit_two(capsys):
    assert main(["honeycomb", "0.6"]) == 2


# -- figures and version -------------------------------------------------------------

def test_figures_are_written_alongside_the_table(graphs, uniform_file,
                                                 tmp_path, capsys):
    figs = tmp_path / "figs"
    assert main(["cov", graphs["cell"], "v:1", "v:2",
                 "--figures", str(figs)]) == 0
    assert main(["dubins", uniform_file, "2", "--figures", str(figs)]) == 0
    assert main(["honeycomb", "0.6", "0.6", "0.3", "--rhos", "0.4,0.2",
                 "--figures", str(figs)]) == 0
    out = capsys.readouterr().out
    assert (figs / "covariance.png").stat().st_size > 0
    assert (figs / "dubins_cdf.png").stat().st_size > 0
    assert (figs / "honeycomb_convergence.png").stat().st_size > 0
    assert out.count("figure\t") >= 3


def test_version_reports_the_tool_hash(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert tool_hash() in capsys.readouterr().out
