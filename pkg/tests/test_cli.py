import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conespec import approx, cli
from conespec.cone import ConeSpace, FiniteSet
from conespec.operators import MaxTimesMatrix

DATA = os.path.join(os.path.dirname(__file__), "data")
A_CSV = os.path.join(DATA, "A.csv")
MULT = os.path.join(DATA, "mult.cfg")


def run_json(capsys, *argv):
    code = cli.run(list(argv))
    cap = capsys.readouterr()
    run_json.err = cap.err
    return code, (json.loads(cap.out) if cap.out else None)


def test_spectrum_example(capsys):
    code, rep = run_json(capsys, "spectrum", "--matrix", A_CSV, "--horizon", "60")
    assert code == 0
    assert rep["ap_interval"] == [3.0, 3.0]
    assert sorted(e["t"] for e in rep["point_spectrum"]) == [2.0, 3.0]


def test_approx_eig_example_and_round_trip(capsys):
    code, rep = run_json(capsys, "approx-eig", "--kernel", MULT, "--t", "1", "--eps", "0.01")
    assert code == 0
    cert = rep["certificate"]
    assert cert["residual"] <= 0.06
    op = cli.read_kernel_config(MULT)
    u = op.space.vector(cert["vector"])
    assert abs(approx.residual(op, cert["t"], u) - cert["residual"]) <= 1e-12


def test_verify_fixture_example(capsys):
    code, rep = run_json(capsys, "verify-fixture", "--name", "non-lipschitz", "--k", "50")
    assert code == 0 and rep["passed"]
    assert "PASS non-lipschitz/residual-k50" in run_json.err


def test_verify_fixture_list(capsys):
    code, rep = run_json(capsys, "verify-fixture", "--name", "x", "--list")
    assert code == 0 and "multiplication" in rep["fixtures"]


def test_radius_and_local_radius(capsys, tmp_path):
    code, rep = run_json(capsys, "radius", "--matrix", A_CSV)
    assert code == 0 and rep["radius"]["exact"] == 3.0
    vec = tmp_path / "e2.txt"
    vec.write_text("2:1\n")
    code, rep = run_json(capsys, "local-radius", "--matrix", A_CSV, "--vector", str(vec))
    assert code == 0 and rep["local_radii"][0]["exact"] == 2.0
    code, rep = run_json(capsys, "local-radius", "--shift", "linf", "--vector", str(vec), "--horizon", "8")
    assert rep["local_radii"][0]["estimate"]["value"] == 0.0


def test_witness(capsys):
    code, rep = run_json(capsys, "witness", "--matrix", A_CSV)
    assert code == 0 and len(rep["witness"]) == 2 and len(rep["picked_seed"]) == 12


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert cli.run(["radius", "--matrix", A_CSV, "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["radius"]["exact"] == 3.0


@pytest.mark.parametrize("argv", [
    ["radius", "--matrix", "/nonexistent.csv"],
    ["radius"],
    ["radius", "--matrix", A_CSV, "--horizon", "0"],
    ["approx-eig", "--matrix", A_CSV],
    ["approx-eig", "--matrix", A_CSV, "--t", "-1"],
    ["local-radius", "--matrix", A_CSV],
    ["verify-fixture", "--name", "no-such-fixture"],
])
def test_input_errors_exit_2(argv, capsys):
    assert cli.run(argv) == 2


def test_bad_files_exit_2(tmp_path):
    bad = tmp_path / "neg.csv"
    bad.write_text("1,-1\n0,1\n")
    assert cli.run(["radius", "--matrix", str(bad)]) == 2
    rect = tmp_path / "rect.csv"
    rect.write_text("1,2,3\n4,5,6\n")
    assert cli.run(["radius", "--matrix", str(rect)]) == 2
    cfg = tmp_path / "k.cfg"
    cfg.write_text("a = 1\nN = 11\nkernel = s *\nlo = s\nhi = s\n")
    assert cli.run(["radius", "--kernel", str(cfg)]) == 2
    cfg.write_text("a = 1\nN = 11\nkernel = s - 2\nlo = s\nhi = s\n")
    assert cli.run(["radius", "--kernel", str(cfg)]) == 2


def test_construction_failure_exit_3(capsys):
    assert cli.run(["approx-eig", "--matrix", A_CSV, "--t", "5", "--eps", "0.01",
                    "--approx-horizon", "2000"]) == 3
    assert "error (target-above-radius)" in capsys.readouterr().err


def test_kernel_csv_tables(tmp_path, capsys):
    s = np.linspace(0, 1, 11)
    np.savetxt(tmp_path / "k.csv", np.outer(s, np.ones(11)), delimiter=",")
    (tmp_path / "k.cfg").write_text("a = 1\nN = 11\nkernel = @k.csv\nlo = s\nhi = s\n")
    code, rep = run_json(capsys, "radius", "--kernel", str(tmp_path / "k.cfg"), "--horizon", "20")
    assert code == 0 and rep["radius"]["value"] == 1.0


def test_deterministic_bytes():
    cmd = [sys.executable, "-m", "conespec.cli", "spectrum", "--matrix", A_CSV, "--horizon", "60"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a


def test_read_vector_dense_and_sparse(tmp_path):
    space = ConeSpace(FiniteSet(3))
    p = tmp_path / "v.csv"
    p.write_text("1, 0.5, 0\n")
    assert cli.read_vector(str(p), space).values.tolist() == [1.0, 0.5, 0.0]
    p.write_text("3:2\n1:1\n")
    assert cli.read_vector(str(p), space).values.tolist() == [1.0, 0.0, 2.0]
    assert MaxTimesMatrix(np.eye(3)).space.dim == 3
