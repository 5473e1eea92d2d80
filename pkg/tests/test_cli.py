import csv
import json
import subprocess
import sys

import pytest

from killing_index.cli import AnalysisReport, bound_line, corollary_line, main
from killing_index.mesh import load_mesh


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_clifford(tmp_path, capsys):
    path = tmp_path / "c.off"
    code, out, _ = run(capsys, "generate", "clifford", "--nu", 12, "--nv", 10, "-o", path)
    assert code == 0 and "V=120" in out
    assert path.read_text().startswith("4OFF")
    assert load_mesh(path).ambient_tag == "sphere3"


def test_generate_flat_torus_declares_ambient(tmp_path, capsys):
    path = tmp_path / "t.off"
    assert run(capsys, "generate", "flat-torus", "--n", 5, "-o", path)[0] == 0
    mesh = load_mesh(path)
    assert mesh.ambient_tag == "flattorus3" and mesh.lattice is not None


@pytest.mark.parametrize("argv", [
    ["generate", "schwarz-p", "--resolution", "8"],
    ["generate", "clifford", "--subdiv", "3"],
    ["generate", "nonexistent"],
])
def test_generate_parameter_errors(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "-o", tmp_path / "x.off")
    assert code == 2 and err.startswith("error:")


def test_analyze_clifford_json(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "analyze", "--generator", "clifford", "--nu", 16, "--nv", 16,
                       "--json", path, "--no-timestamp")
    assert code == 0
    assert "Ind+Null = 9 ≥ ⌈g/3⌉ = 1: PASS" in out
    d = json.loads(path.read_text())
    assert d["schema"] == "1" and "timestamp" not in d
    assert d["topology"]["genus"] == 1
    assert (d["spectrum"]["index"], d["spectrum"]["nullity"]) == (5, 4)
    assert d["spectrum"]["tol_zero"] == 0.5
    assert d["harmonic"]["dimension"] == 2
    assert d["certificate"]["verdict"] == "bound_witnessed"
    assert d["bound"] == "Ind+Null = 9 ≥ ⌈g/3⌉ = 1: PASS"
    assert d["status"] == "PASS"
    assert set(d["lemmas"]) == {"lemma1", "lemma2"}


def test_analyze_json_stdout(capsys):
    code, out, _ = run(capsys, "analyze", "--generator", "flat-torus", "--n", 6, "--json", "-")
    d = json.loads(out)
    assert code == 0 and "timestamp" in d
    assert (d["spectrum"]["index"], d["spectrum"]["nullity"]) == (0, 1)


def test_analyze_cmc_sphere(tmp_path, capsys):
    csv_path = tmp_path / "s.csv"
    code, out, _ = run(capsys, "analyze", "--generator", "round-sphere", "--subdiv", 3, "--cmc",
                       "--csv", csv_path)
    assert code == 0
    assert "cmc index=0 nullity=3" in out
    assert "Ind = 0 ≥ ⌈g/3−1⌉ = -1: PASS" in out
    # the theorem line is not printed for a non-minimal surface
    assert "Ind+Null" not in out
    assert "bound check not applicable" in out
    rows = list(csv.reader((tmp_path / "s_cmc.csv").open()))
    assert rows[0] == ["k", "lambda", "residual"] and len(rows) == 13
    assert csv_path.exists()


def test_analyze_file_input(tmp_path, capsys):
    path = tmp_path / "c.off"
    run(capsys, "generate", "clifford", "--nu", 16, "--nv", 16, "-o", path)
    code, out, _ = run(capsys, "analyze", path, "--json", tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert code == 0
    assert d["geometry"]["source_tag"] == "estimated"
    assert "oracle" not in d["spectrum"]
    assert (d["spectrum"]["index"], d["spectrum"]["nullity"]) == (5, 4)


def test_analyze_truncated_spectrum(capsys):
    code, out, _ = run(capsys, "analyze", "--generator", "clifford", "--nu", 12, "--nv", 12, "--eigs", 3)
    assert code == 3
    assert "status: resolution_insufficient" in out


def test_analyze_schwarz_p_approximate(capsys):
    code, out, _ = run(capsys, "analyze", "--generator", "schwarz-p", "--resolution", 16)
    assert code == 0
    assert "approximate input" in out
    assert "index=1" in out


@pytest.mark.parametrize("argv,code", [
    (["analyze", "missing.off"], 4),
    (["analyze"], 2),
    (["analyze", "--generator", "clifford", "--n", "4"], 2),
    (["analyze", "--generator", "clifford", "--ambient", "euclidean3"], 4),
    (["analyze", "--generator", "clifford", "--nu", "8", "--nv", "8", "--tol-zero", "0"], 4),
])
def test_error_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_certify_clifford(capsys):
    code, out, _ = run(capsys, "certify", "--generator", "clifford", "--nu", 16, "--nv", 16)
    assert code == 0
    assert "verdict: bound_witnessed" in out and "constraints=0x2" in out


def test_certify_forced_full_rank(capsys):
    code, out, _ = run(capsys, "certify", "--generator", "schwarz-p", "--resolution", 16, "--force-k", 2)
    assert code == 0
    assert "constraints=6x6" in out and "constraints_full_rank" in out


def test_certify_genus_zero(capsys):
    code, out, _ = run(capsys, "certify", "--generator", "equatorial-sphere", "--subdiv", 2)
    assert code == 0
    assert "empty harmonic basis, bound trivial" in out


def test_certify_json(tmp_path, capsys):
    path = tmp_path / "c.json"
    run(capsys, "certify", "--generator", "clifford", "--nu", 12, "--nv", 12, "--cmc", "--force-k", 1,
        "--json", path)
    d = json.loads(path.read_text())
    assert d["schema"] == "1"
    assert d["certificate"]["kind"] == "cmc"
    assert d["certificate"]["verdict"] == "constraints_full_rank"


@pytest.mark.parametrize("index,nullity,genus,expect", [
    (5, 4, 1, "Ind+Null = 9 ≥ ⌈g/3⌉ = 1: PASS"),
    (0, 0, 1, "Ind+Null = 0 ≥ ⌈g/3⌉ = 1: FAIL"),
    (1, 0, 4, "Ind+Null = 1 ≥ ⌈g/3⌉ = 2: FAIL"),
    (0, 0, 0, "Ind+Null = 0 ≥ ⌈g/3⌉ = 0: PASS"),
])
def test_bound_line(index, nullity, genus, expect):
    assert bound_line(index, nullity, genus) == expect


def test_corollary_line():
    assert corollary_line(0, 3) == "Ind = 0 ≥ ⌈g/3−1⌉ = 0: PASS"
    assert corollary_line(0, 4) == "Ind = 0 ≥ ⌈g/3−1⌉ = 1: FAIL"


def _report(index, nullity, verdict="bound_witnessed", truncated=False):
    spec = {"index": index, "nullity": nullity, "truncated": truncated}
    cert = {"verdict": verdict, "k": 1, "forced": False}
    return AnalysisReport({}, {"genus": 1}, spectrum=spec, certificate=cert)


def test_report_status_precedence():
    assert _report(1, 0).status() == "PASS"
    assert _report(0, 0).exit_code() == 1
    assert _report(1, 0, truncated=True).exit_code() == 3
    # a failing check outranks an under-resolved one
    assert _report(0, 0, truncated=True).status() == "FAIL"
    assert _report(1, 0, "constraints_full_rank").status() == "FAIL"
    assert _report(1, 0, "resolution_insufficient").exit_code() == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "killing_index", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
