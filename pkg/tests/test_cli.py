import json
import re

from ainfmf import cli


WORKED = {
    "variables": ["x"],
    "potential": "1/5*x^5",
    "objects": [
        {"label": "X", "pairs": [["x^2", "1/5*x^3"]]},
        {"label": "Y", "pairs": [["x^3", "1/5*x^2"]]},
    ],
    "cap": 2,
    "commands": [
        "basis",
        "groebner",
        {"command": "gamma", "cap": 2},
        {"command": "expand", "polynomial": "x^2 + x^5"},
        {"command": "vertices", "source": "X", "target": "Y"},
        {"command": "rho", "k": 2, "path": ["X", "Y", "X"]},
        {"command": "verify-ainf", "level": 1},
    ],
}

KSTAB = {
    "variables": ["x"],
    "potential": "x^3",
    "t_sequence": ["x"],
    "objects": [{"label": "k", "pairs": [["x", "x^2"]]}],
    "homotopies": {"k": {"lam": [[[1, 0, "1"]]], "F": [["0"]], "G": [["1"]]}},
    "cap": 3,
    "commands": [
        {"command": "kstab", "object": "k", "decomposition": ["x^2"],
         "level": 3},
        {"command": "feynman", "k": 2},
        "e1",
        "clifford",
    ],
}


def test_run_worked_spec():
    report, code = cli.run(WORKED)
    assert code == cli.EXIT_OK
    assert report["ok"] and report["cap_ok"]
    by_name = {r["command"]: r for r in report["results"]}
    assert by_name["basis"]["result"]["dimension"] == 4
    labels = [row["label"] for row in by_name["basis"]["result"]["monomials"]]
    assert labels == ["z1", "z2", "z3", "z4"]
    # x * x = z3 with no t emission
    assert [1, 1, 2, [0], "1/1"] in by_name["gamma"]["result"]["entries"]
    # x^2 + x^5 = z3 + z2 t
    assert by_name["expand"]["result"]["coefficients"] == [
        [1, [1], "1/1"], [2, [0], "1/1"]]
    rows = by_name["vertices"]["result"]["pairs"][0]["rows"]
    coeffs = {r["vertex"]: r["coefficient"] for r in rows}
    assert coeffs["C.1"] == "3/1"
    assert coeffs["A.3"] == "-1/1"
    assert by_name["rho"]["result"]["entries"]
    assert by_name["verify-ainf"]["result"]["failures"] == 0


def test_report_has_no_floats():
    report, code = cli.run(WORKED)
    assert code == cli.EXIT_OK
    text = json.dumps(report)
    assert not re.search(r"\d\.\d", text)


def test_run_kstab_spec():
    report, code = cli.run(KSTAB)
    assert code == cli.EXIT_OK
    by_name = {r["command"]: r for r in report["results"]}
    assert by_name["kstab"]["result"]["rho1_zero"]
    assert by_name["kstab"]["result"]["closed"]
    assert len(by_name["kstab"]["result"]["kernel"]) == 2
    assert by_name["feynman"]["result"]["mismatches"] == 0
    assert all(p["idempotent"] for p in by_name["e1"]["result"]["pairs"])
    cl = by_name["clifford"]["result"]["pairs"][0]
    assert cl["gamma_equals_At"] and cl["E1_equals_gamma_product"]


def test_determinism_across_threads():
    r1, _ = cli.run(KSTAB, threads=1)
    r2, _ = cli.run(KSTAB, threads=3)
    assert cli.canonical(r1) == cli.canonical(r2)


def test_input_errors():
    bad_poly = {"variables": ["x"], "potential": "x^^2"}
    report, code = cli.run(bad_poly, commands=["basis"])
    assert code == cli.EXIT_INPUT
    assert "error" in report

    unknown_cmd, code = cli.run(WORKED, commands=["frobnicate"])
    assert code == cli.EXIT_INPUT

    bad_label, code = cli.run(
        WORKED, commands=[{"command": "rho", "k": 2, "path": ["X", "Z", "X"]}])
    assert code == cli.EXIT_INPUT


def test_cap_insufficiency_exit():
    spec = {
        "variables": ["x"], "potential": "1/5*x^5", "cap": 1,
        "commands": [{"command": "expand", "polynomial": "x^12", "cap": 1}],
    }
    report, code = cli.run(spec)
    assert code == cli.EXIT_CAP
    assert not report["cap_ok"]
    # feynman on a tree needing more cap than provided
    spec2 = dict(KSTAB, cap=0, commands=[{"command": "feynman", "k": 3}])
    report2, code2 = cli.run(spec2)
    assert code2 == cli.EXIT_CAP


def test_cap_and_presentation_overrides():
    report, code = cli.run(
        dict(WORKED, commands=[{"command": "verify-ainf", "level": 1}]),
        cap=3, presentation="nu")
    assert code == cli.EXIT_OK
    assert report["spec"]["cap"] == 3


def test_pin_roundtrip(tmp_path):
    report, _ = cli.run(KSTAB)
    golden = tmp_path / "golden.json"
    assert cli.pin(report, str(golden), create=True) == []
    assert cli.pin(report, str(golden)) == []
    # a changed coefficient is located by path
    mutated = json.loads(cli.canonical(report).decode())
    mutated["results"][0]["result"]["level"] = 99
    diffs = cli.pin(mutated, str(golden))
    assert diffs and any("level" in d for d in diffs)
    # timing differences never matter
    with_timing = json.loads(cli.canonical(report).decode())
    with_timing["timing"] = {"kstab": 123456}
    assert cli.pin(with_timing, str(golden)) == []


def test_pin_missing_golden(tmp_path):
    report, _ = cli.run(KSTAB)
    try:
        cli.pin(report, str(tmp_path / "absent.json"))
    except cli.InputError:
        pass
    else:
        raise AssertionError("expected InputError")


def test_main_entry(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(WORKED))
    out_path = tmp_path / "report.json"
    code = cli.main(["run", str(spec_path), "--out", str(out_path)])
    assert code == cli.EXIT_OK
    report = json.loads(out_path.read_text())
    assert report["ok"]
    # single-command mode picks the matching entry from the spec
    code = cli.main(["basis", str(spec_path), "--out", str(out_path)])
    assert code == cli.EXIT_OK
    report = json.loads(out_path.read_text())
    assert [r["command"] for r in report["results"]] == ["basis"]
