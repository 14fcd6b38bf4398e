import io
import json

import jsonschema
import numpy as np
import pytest

from nicert.cli import REPORT_SCHEMA, RunReport, run
from nicert.io import (SystemFormatError, load_system, save_system, system_from_dict,
                       system_to_dict)
from nicert.lti import minimal_realization
from nicert.stability import Status, oracle_stability

from conftest import SNI_NEG, mat, siso


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def sysfile(tmp_path, name, G):
    p = tmp_path / name
    save_system(G, p)
    return str(p)


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code, rep = run(list(argv), stdout=out, stderr=err)
    return code, rep, out.getvalue(), err.getvalue()


# --- system I/O ------------------------------------------------------------------------------------

def test_system_round_trip(tmp_path):
    G = mat([[([1], [1, 1]), ([0.5], [2, 3, 1])],
             [([0.5], [2, 3, 1]), ([0, 1], [4, 0, 1])]])
    H = load_system(sysfile(tmp_path, "g.json", G))
    for s in (0.3j, 1.0 + 2j, 7j):
        np.testing.assert_allclose(H(s), G(s), rtol=1e-15)


def test_realization_file_is_accepted():
    G = siso([1, 2], [2, 3, 1])
    d = minimal_realization(G).to_dict()
    H = system_from_dict(d)
    for s in (0.5j, 2.0, 1 + 1j):
        np.testing.assert_allclose(H(s), G(s), rtol=1e-12)


def test_missing_den_defaults_to_one():
    G = system_from_dict({"entries": [[{"num": [3.0]}]]})
    assert G(5j)[0, 0] == 3.0


@pytest.mark.parametrize("d", [
    [],
    {"n": 1},
    {"entries": [[{"num": [1], "den": [0, 0]}]]},
    {"entries": [[{"num": ["a"], "den": [1]}]]},
    {"n": 2, "entries": [[{"num": [1]}]]},
    {"entries": [[{"den": [1]}]]},
    {"entries": [[{"num": [1], "den": [1, float("inf")]}]]},
])
def test_malformed_systems(d):
    with pytest.raises(SystemFormatError):
        system_from_dict(d)


# --- CLI verbs ------------------------------------------------------------------------------------

@pytest.mark.parametrize("G, code, verdict", [
    (siso([1], [1, 1]), 0, "SNI"),
    (siso([1], [0, 1]), 0, "NI"),
    (siso([0, 1], [1, 1]), 1, "NotNI"),
])
def test_classify_exit_codes(tmp_path, G, code, verdict):
    c, rep, out, _ = cli("classify", sysfile(tmp_path, "g.json", G))
    assert c == code
    assert rep.verdicts["verdict"] == verdict
    assert f"verdict: {verdict}" in out


@pytest.mark.parametrize("method", ["oracle", "lemma2", "lemma3", "lemma4", "thm1", "thm2"])
def test_certify_methods_agree_on_stable_pair(tmp_path, method):
    P = sysfile(tmp_path, "p.json", siso([1], [1, 1]))
    C = sysfile(tmp_path, "c.json", SNI_NEG)
    code, rep, _, _ = cli("certify", P, C, "--method", method, "--tau-points", "11")
    assert code == 0
    assert rep.verdicts["status"] == "Stable"


def test_certify_unstable_pair(tmp_path):
    P = sysfile(tmp_path, "p.json", siso([2], [1, 1]))
    C = sysfile(tmp_path, "c.json", siso([1], [1, 1]))
    assert cli("certify", P, C, "--method", "oracle")[0] == 1
    assert cli("certify", P, C, "--method", "lemma2")[0] == 1


def test_certify_explicit_psi(tmp_path):
    P = sysfile(tmp_path, "p.json", siso([1], [0, 1]))
    C = sysfile(tmp_path, "c.json", SNI_NEG)
    code, rep, _, _ = cli("certify", P, C, "--method", "lemma4", "--psi", "[[-1.0]]")
    assert code == 0
    assert rep.verdicts["psi"] == [[-1.0]]
    code, rep, _, err = cli("certify", P, C, "--method", "lemma4", "--psi", "[[1.0]]")
    assert code == 2
    assert "PsiInvalid" in err


def test_robust_check_and_attack_then_certify(tmp_path):
    C = write(tmp_path, "c.json", {"entries": [[{"num": [2.0]}]]})
    out = str(tmp_path / "plant.json")
    assert cli("robust-check", "--class", "sni-inst-nonneg", C)[0] == 1
    code, rep, _, _ = cli("attack", "--class", "sni-inst-nonneg", C, "-o", out)
    assert code == 0
    assert rep.verdicts["recipe_kind"] == "SchurFirstOrder"
    recipe = json.loads(open(out).read())
    assert recipe["verification"]["verified"]
    # the attack output is itself a valid plant file
    assert cli("certify", out, C, "--method", "oracle")[0] == 1
    assert oracle_stability(load_system(out), load_system(C)).status is not Status.STABLE


def test_attack_on_robust_controller(tmp_path):
    C = sysfile(tmp_path, "c.json", siso([-0.5]))
    assert cli("robust-check", "--class", "sni-inst-nonneg", C)[0] == 0
    code, rep, _, _ = cli("attack", "--class", "SNI_instNonneg", C)
    assert code == 1
    assert "no destabilizing plant" in rep.error


def test_prove_sufficiency(tmp_path, monkeypatch):
    C = sysfile(tmp_path, "c.json", SNI_NEG)
    code, rep, _, _ = cli("prove-sufficiency", "--class", "strictly-proper-ni", C,
                          "--samples", "12", "--seed", "3")
    assert code == 0
    assert rep.verdicts["status"] == "AllStable"
    monkeypatch.setenv("NI_CERTIFY_THREADS", "3")
    code, rep2, _, _ = cli("prove-sufficiency", "--class", "strictly-proper-ni", C,
                           "--samples", "12", "--seed", "3")
    assert code == 0 and rep2.threads == 3
    assert rep2.verdicts["worst_real_part"] == rep.verdicts["worst_real_part"]


def test_sample_writes_plant(tmp_path):
    out = str(tmp_path / "s.json")
    code, rep, _, _ = cli("sample", "--class", "n0-dc-bounded", "--gamma", "2", "-n", "2",
                          "--modes", "3", "--seed", "9", "-o", out)
    assert code == 0
    assert load_system(out).n == 2
    again = cli("sample", "--class", "n0-dc-bounded", "--gamma", "2", "-n", "2",
                "--modes", "3", "--seed", "9")[1]
    assert again.verdicts["plant"] == rep.verdicts["plant"]


# --- usage errors -------------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    [],
    ["classify"],
    ["frobnicate", "x"],
    ["robust-check", "--class", "no-such-class", "x.json"],
    ["certify", "a.json", "b.json", "--method", "lemma9"],
    ["classify", "x.json", "--stable-re", "0.1"],
])
def test_argument_errors(argv):
    assert cli(*argv)[0] == 2


def test_bad_inputs(tmp_path, monkeypatch):
    bad = write(tmp_path, "bad.json", "{not json")
    zero = write(tmp_path, "zero.json", {"entries": [[{"num": [1], "den": [0]}]]})
    ok = sysfile(tmp_path, "ok.json", siso([1], [1, 1]))
    two = sysfile(tmp_path, "two.json", mat([[1, 0], [0, 1]]))
    for argv in (["classify", bad], ["classify", zero], ["classify", str(tmp_path / "none")],
                 ["certify", ok, two], ["robust-check", "--class", "n0-dc-bounded", ok],
                 ["robust-check", "--class", "sni-inst-nonneg",
                  sysfile(tmp_path, "u.json", siso([1], [-1, 1]))],
                 ["sample", "--class", "sni-inst-nonneg", "-n", "9"]):
        code, rep, _, err = cli(*argv)
        assert code == 2, argv
        assert rep.error and "error" in err
    monkeypatch.setenv("NI_CERTIFY_THREADS", "zero")
    assert cli("classify", ok)[0] == 2


# --- reports ---------------------------------------------------------------------------------------

def test_json_report_schema_and_round_trip(tmp_path):
    P = sysfile(tmp_path, "p.json", siso([1], [1, 1]))
    C = sysfile(tmp_path, "c.json", SNI_NEG)
    path = str(tmp_path / "r.json")
    for argv in (["classify", P], ["certify", P, C, "--method", "thm2"],
                 ["robust-check", "--class", "strictly-proper-ni", C]):
        code, rep, out, _ = cli(*argv, "--json")
        d = json.loads(out)
        jsonschema.validate(d, REPORT_SCHEMA)
        assert d["exit_code"] == code
        assert RunReport.from_dict(d).to_dict() == d
        assert d["inputs"][0]["path"] == argv[1] if argv[0] != "robust-check" else True
        cli(*argv, "--json", path)
        jsonschema.validate(json.load(open(path)), REPORT_SCHEMA)


def test_report_is_deterministic_apart_from_timing(tmp_path):
    P = sysfile(tmp_path, "p.json", siso([1], [1, 1]))
    a = cli("classify", P, "--json")[1].to_dict()
    b = cli("classify", P, "--json")[1].to_dict()
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_tolerance_flags_are_recorded_and_restored(tmp_path):
    import nicert.classify as cl
    before = cl.TOL
    P = sysfile(tmp_path, "p.json", siso([1], [1, 1]))
    rep = cli("classify", P, "--tol", "1e-6", "--grid-points", "50")[1]
    assert rep.tolerances["tol"] == 1e-6
    assert rep.grid["points"] == 50
    assert cl.TOL == before
