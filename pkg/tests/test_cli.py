import json
import subprocess
import sys

import pytest

from ultrahypo.cli import run

FLOOR = 'floor={"kind":"envelope","L":1.0,"power":2}'
BASE = ["--model", "builtin:torus1", "--weights", "gevrey:2"]


def report(tmp_path, argv, name="r"):
    out = tmp_path / name
    code = run(argv + ["--out", str(out), "--format", "both"])
    return code, json.loads((out / "report.json").read_text()), out


def test_hypotest_identity(tmp_path):
    code, rep, out = report(tmp_path, ["hypotest", "--condition", "roumieu", *BASE, "--family", "poly_decay", "--param", "N=0"])
    assert code == 0 and rep["decision"] == "holds"
    assert rep["version"] and rep["config_hash"] and rep["l_max"] == 512
    assert (out / "curve.csv").read_text().splitlines()[0] == "ell,lambda,m,E"


def test_classify_envelope(tmp_path):
    code, rep, _ = report(tmp_path, ["classify", "--class", "roumieu", *BASE, "--family", "envelope", "--param", "L=2"])
    assert code == 0
    assert rep["result"]["fitted"]["L_star"] == pytest.approx(2.0, rel=1e-6)


def test_synth_identity_is_error(tmp_path, capsys):
    code = run(["synth", "--flavor", "roumieu", "--eps0", "1.0", *BASE, "--family", "poly_decay", "--param", "N=0"])
    assert code == 1
    assert "does not show the condition holds" in capsys.readouterr().err


@pytest.mark.parametrize("argv,code", [
    (["hypotest", "--condition", "roumieu", *BASE, "--family", "exp_decay", "--param", "c=1", "--param", "theta=0.5"], 2),
    (["hypotest", "--condition", "beurling", *BASE, "--family", "envelope", "--param", "L=5"], 0),
    (["hypotest", "--condition", "beurling", *BASE, "--family", "beurling_planted"], 2),
    (["hypotest", "--condition", "smooth", "--model", "builtin:torus1", "--family", "poly_decay", "--param", "N=3"], 0),
    (["hypotest", "--condition", "implication", *BASE, "--family", "poly_decay", "--param", "N=3"], 0),
    (["classify", "--class", "beurling", *BASE, "--family", "envelope", "--param", "L=2"], 2),
    (["classify", "--class", "dual_roumieu", *BASE, "--family", "poly_decay", "--param", "N=0"], 0),
    (["weights-check", "--weights", "gevrey:2"], 0),
    (["assoc-eval", "--weights", "gevrey:1.5", "--nu", "2", "--r-grid", "1e-3:1e6:60"], 0),
    (["model-gen", "--model", "builtin:torus2", "--lmax", "32"], 0),
    (["symbol-gen", *BASE, "--family", "envelope", "--param", "L=1", "--lmax", "64"], 0),
])
def test_exit_codes(tmp_path, argv, code):
    assert run(argv + ["--out", str(tmp_path / "o")]) == code


def test_inconclusive_exit(tmp_path):
    # too few lower-envelope rungs on a short ladder
    argv = ["hypotest", "--condition", "smooth", "--model", "builtin:sphere", "--lmax", "20",
            "--family", "poly_decay", "--param", "N=3"]
    assert run(argv + ["--out", str(tmp_path / "o")]) == 3


def test_errors_name_input(tmp_path, capsys):
    assert run(["hypotest", "--condition", "roumieu", "--model", str(tmp_path / "none.json"),
                "--weights", "gevrey:2", "--family", "poly_decay", "--param", "N=0"]) == 1
    assert "none.json" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "nu": 2, "ladder": [{"lambda": 0, "mult": 1}, {"lambda": 1.0, "mult": 2}, {"lambda": 1.0, "mult": 2}]}')
    assert run(["model-gen", "--model", str(bad)]) == 1
    assert "bad.json" in capsys.readouterr().err
    assert run(["hypotest", "--condition", "roumieu", "--model", "builtin:torus1", "--lmax", "8",
                "--weights", "gevrey:2", "--family", "poly_decay", "--param", "N=0"]) == 1
    w = tmp_path / "w.json"
    w.write_text('{"kind": "gevrey", "s": 2.0, "nu": 1}')
    assert run(["hypotest", "--condition", "roumieu", "--model", "builtin:torus1",
                "--weights", str(w), "--family", "poly_decay", "--param", "N=0"]) == 1
    assert "nu=1" in capsys.readouterr().err


def test_kbudget_env(monkeypatch, capsys):
    monkeypatch.setenv("ULTRAHYPO_KBUDGET", "5")
    assert run(["assoc-eval", "--weights", "gevrey:1", "--r-grid", "1e3:1e4:2"]) == 1
    assert "k-budget 5" in capsys.readouterr().err


def test_deterministic_reports(tmp_path):
    argv = ["hypotest", "--condition", "beurling", *BASE, "--family", "envelope", "--param", "L=5"]
    _, _, a = report(tmp_path, argv, "a")
    _, _, b = report(tmp_path, argv, "b")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "curve.csv").read_bytes() == (b / "curve.csv").read_bytes()


def test_synth_and_verify_bundle(tmp_path):
    gen = ["--family", "sparse_drop", "--param", FLOOR]
    code, rep, out = report(tmp_path, ["synth", "--flavor", "roumieu", "--eps0", "1.0", *BASE, *gen])
    assert code == 0 and rep["result"]["contract_passed"]
    assert run(["verify-bundle", "--bundle", str(out), *BASE, *gen, "--out", str(tmp_path / "v")]) == 0
    code, rep, out = report(tmp_path, ["synth", "--flavor", "beurling", *BASE, "--family", "beurling_planted"], "bb")
    assert code == 0
    assert run(["verify-bundle", "--bundle", str(out), *BASE, "--out", str(tmp_path / "v2")]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ultrahypo", "hypotest", "--condition", "roumieu", *BASE,
         "--family", "poly_decay", "--param", "N=0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["decision"] == "holds"


@pytest.mark.parametrize("param,needle", [
    ("bogus=1", "unexpected ['bogus']"),
    ('weights="gevrey:2"', "--param weights"),
])
def test_bad_family_params(param, needle, capsys):
    code = run(["hypotest", "--condition", "beurling", *BASE, "--family", "envelope", "--param", "L=5", "--param", param])
    assert code == 1
    assert needle in capsys.readouterr().err
