import json
import subprocess
import sys

import pytest

from kamforge.cli import main, run_scenario, selftest, validate_scenario
from kamforge.errors import SchemaError


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


KNF = {
    "kind": "kolmogorov-nf",
    "context": {"mode": "rational"},
    "trunc": {"n": 1, "Dp": 3, "Dt": 3, "Nq": 3},
    "H": [[[0], [1], 0, "3"], [[0], [2], 0, "1/2"]],
    "Q": [[[0], [1], 0, "1"]],
}


def test_kolmogorov_scenario(tmp_path):
    out = tmp_path / "report.json"
    assert run_scenario(write(tmp_path, "s.json", KNF), str(out)) == 0
    report = json.loads(out.read_text())
    assert report["results"]["casimir"]["terms"] == [
        [[0], [0], 1, "-3"],
        [[0], [0], 2, "-1/2"],
    ]
    gens = report["results"]["generators"]
    assert gens == [{"kind": "translation", "order": 1, "d": ["-1"]}]
    assert report["results"]["remainder"]["terms"] == []


def test_resonances_scenario(tmp_path):
    scen = {
        "kind": "resonances",
        "context": {"mode": "rational"},
        "omega": ["1", "-2"],
        "N": 3,
    }
    out = tmp_path / "r.json"
    assert run_scenario(write(tmp_path, "s.json", scen), str(out)) == 0
    report = json.loads(out.read_text())
    assert [2, 1] in report["results"]["resonances"]


def test_malformed_scenario(tmp_path):
    out = tmp_path / "r.json"
    rc = run_scenario(write(tmp_path, "bad.json", {"kind": "resonances"}), str(out))
    assert rc != 0
    assert json.loads(out.read_text())["error"]["type"] == "SchemaError"
    with pytest.raises(SchemaError):
        validate_scenario({"kind": "no-such-kind"})
    with pytest.raises(SchemaError):
        validate_scenario([1, 2, 3])


def test_resonant_failure_is_report_not_crash(tmp_path):
    scen = {
        "kind": "formal-nf",
        "context": {"mode": "rational"},
        "trunc": {"n": 2, "Dp": 2, "Dt": 2, "Nq": 3},
        "H": [[[0, 0], [1, 0], 0, "1"], [[0, 0], [0, 1], 0, "-2"]],
        "Q": [[[2, 1], [0, 0], 0, "1"]],
    }
    out = tmp_path / "r.json"
    rc = run_scenario(write(tmp_path, "s.json", scen), str(out))
    assert rc == 1
    err = json.loads(out.read_text())["error"]
    assert err["type"] == "ResonantDenominator"
    assert err["vector"] == [2, 1] and err["t_order"] == 1


def test_report_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    scen = write(tmp_path, "s.json", KNF)
    run_scenario(scen, str(a))
    run_scenario(scen, str(b))
    assert a.read_bytes() == b.read_bytes()


def test_selftest_properties_and_determinism(tmp_path):
    r = selftest(7)
    assert r["all_pass"]
    assert set(r["properties"]) == {
        "jacobi",
        "flow_morphism",
        "eigen_relation",
        "commutant_orthogonality",
        "oracle_equivalence",
    }
    assert selftest(7) == r


def test_selftest_mutation_fixture():
    r = selftest(3, bracket_sign=-1)
    assert r["properties"]["jacobi"]["pass"]
    assert not r["properties"]["eigen_relation"]["pass"]
    assert "sign" in r["properties"]["eigen_relation"]["detail"]


def test_main_selftest_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["selftest", "--seed", "7", "--out", str(a)]) == 0
    assert main(["selftest", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "kamforge.cli"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode != 0  # requires a subcommand
    proc = subprocess.run(
        ["kamforge", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "kamforge" in proc.stdout


def test_measure_scenario_runs(tmp_path):
    scen = {
        "kind": "measure",
        "n": 2,
        "R": 1.0,
        "C_values": [0.1],
        "nu": "1",
        "N": 10,
        "samples": 500,
        "seed": 5,
    }
    out = tmp_path / "m.json"
    assert run_scenario(write(tmp_path, "s.json", scen), str(out)) == 0
    rep = json.loads(out.read_text())
    row = rep["results"]["per_C"][0]
    assert 0.0 <= row["fraction_bad"] <= 1.0 and row["seed"] == 5


def test_lie_scenarios(tmp_path):
    h = {
        "kind": "lie-homogeneous",
        "a": [1.0],
        "b": [0.1],
    }
    out = tmp_path / "h.json"
    assert run_scenario(write(tmp_path, "h_s.json", h), str(out)) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["residual"] < 1e-12
    p = {
        "kind": "lie-parametric",
        "a": [[1.0, 0.0], [0.0, 2.0]],
        "b": [[0.01, -0.008], [0.006, 0.011]],
    }
    out2 = tmp_path / "p.json"
    assert run_scenario(write(tmp_path, "p_s.json", p), str(out2)) == 0
    rep2 = json.loads(out2.read_text())
    ein = rep2["results"]["eigenvalues_input"]
    enf = rep2["results"]["eigenvalues_normal"]
    assert max(abs(x - y) for x, y in zip(ein, enf)) < 1e-9
