import math

import pandas as pd
import pytest

from main import EXIT_INPUT, EXIT_OK, main, parse_config
from managers.graph_file_manager import GraphFileManager
from managers.graph_manager import GraphManager


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_entropy_of_unit_rose(capsys, fixtures_dir):
    code, out = run(capsys, "entropy", fixtures_dir / "rose3_log5.graph")
    assert code == EXIT_OK
    lines = out.out.splitlines()
    assert lines[0] == "entropy 1.000000000000"
    assert lines[1] == "rank 3"


def test_entropy_of_theta(capsys, fixtures_dir):
    code, out = run(capsys, "entropy", fixtures_dir / "theta_double_log3.graph")
    assert code == EXIT_OK
    assert float(out.out.split()[1]) == pytest.approx(1.0, abs=1e-9)


def test_entropy_of_forest(capsys, fixtures_dir):
    code, out = run(capsys, "entropy", fixtures_dir / "forest.graph")
    assert code == EXIT_OK
    assert out.out.startswith("entropy 0.000000000000")
    assert "note rank ≤ 1" in out.out


def test_normalize(capsys, fixtures_dir, tmp_path):
    target = tmp_path / "unit.graph"
    code, _ = run(capsys, "normalize", fixtures_dir / "rose2_uniform1.graph", "--out", target)
    assert code == EXIT_OK
    _, lengths = GraphFileManager(GraphManager()).load(target)
    assert lengths.values == pytest.approx((math.log(3), math.log(3)), abs=1e-9)


def test_normalize_forest_fails(capsys, fixtures_dir):
    code, out = run(capsys, "normalize", fixtures_dir / "forest.graph")
    assert code == EXIT_INPUT
    assert "error" in out.err


def test_measure(capsys, fixtures_dir):
    code, out = run(capsys, "measure", fixtures_dir / "barbell.graph")
    assert code == EXIT_OK
    lines = dict(line.split(" ", 1) for line in out.out.splitlines() if line.startswith("total"))
    assert float(lines["total"]) == pytest.approx(1.0)
    assert sum(1 for line in out.out.splitlines() if line.startswith("mu ")) == 3


def test_subgraph_direct(capsys, fixtures_dir):
    code, out = run(
        capsys, "subgraph", fixtures_dir / "theta_double_log3.graph", "--edge", "b", "--method", "direct"
    )
    assert code == EXIT_OK
    assert out.out.strip() == "direct 0.630929753571"


def test_subgraph_unknown_edge(capsys, fixtures_dir):
    code, _ = run(capsys, "subgraph", fixtures_dir / "rose3_log5.graph", "--edge", "z")
    assert code == EXIT_INPUT


def test_blowup_writes_csv(capsys, fixtures_dir, tmp_path):
    target = tmp_path / "trace.csv"
    code, _ = run(
        capsys, "blowup", fixtures_dir / "rose3_log5.graph",
        "--edge", "a", "--horizon", 5, "--samples", 6, "--out", target,
    )
    assert code == EXIT_OK
    frame = pd.read_csv(target)
    assert list(frame.columns) == ["t", "j", "j_prime", "mu_e", "denom"]
    assert len(frame) == 6


def test_blowup_rejects_rank_two(capsys, fixtures_dir):
    code, _ = run(capsys, "blowup", fixtures_dir / "barbell.graph", "--edge", "a")
    assert code == EXIT_INPUT


def test_verify(capsys, tmp_path):
    target = tmp_path / "sweep.csv"
    code, out = run(capsys, "verify", "--suite", "barbell", "--n", 3, "--seed", "0x10", "--out", target)
    assert code == EXIT_OK
    assert "seed=16" in out.out
    assert len(pd.read_csv(target)) == 6


def test_missing_file(capsys, tmp_path):
    code, out = run(capsys, "entropy", tmp_path / "absent.graph")
    assert code == EXIT_INPUT


def test_unknown_tolerance(capsys, fixtures_dir):
    code, _ = run(capsys, "entropy", fixtures_dir / "rose3_log5.graph", "--tol", "spectral.bogus=1")
    assert code == EXIT_INPUT


def test_malformed_tolerance():
    with pytest.raises(SystemExit):
        parse_config(["entropy", "x.graph", "--tol", "spectral.unit_tol"])


def test_run_config(fixtures_dir):
    config = parse_config(
        ["minimize", "a.graph", "b.graph", "--restarts", "2", "--tol", "explorer.xatol=1e-5"]
    )
    assert config.command == "minimize"
    assert config.input_paths == ["a.graph", "b.graph"]
    assert config.tolerances == {"explorer.xatol": 1e-5}
    assert config.options["restarts"] == 2
    assert config.seed == 0xC0FFEE


def test_entropy_dumps_weighted_matrix(capsys, fixtures_dir, tmp_path):
    target = tmp_path / "matrix.csv"
    code, _ = run(
        capsys, "entropy", fixtures_dir / "theta_double_log3.graph", "--dump-matrix", target
    )
    assert code == EXIT_OK
    frame = pd.read_csv(target, index_col="edge")
    assert frame.shape == (8, 8)
    assert list(frame.columns[:2]) == ["a+", "a-"]
    # a+ runs v -> w and is followed by the other three edges back to v
    assert frame.loc["a+"].gt(0).sum() == 3
    assert frame.loc["a+", "b-"] == pytest.approx(1 / 3)
