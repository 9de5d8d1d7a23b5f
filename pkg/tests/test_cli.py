import json

import pytest

from forcedosc import casefile as cf
from forcedosc.cli import main

NOLOSS = str(cf.fixture_path("ieee39_noloss"))
LOSSY = str(cf.fixture_path("ieee39_lossy"))
THREE = str(cf.fixture_path("three_bus"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_assemble_summary(capsys):
    code, out, _ = run(capsys, "assemble", NOLOSS, "--hz", "2")
    rep = json.loads(out)
    assert code == 0
    assert rep["Y_B_shape"] == [78, 78]
    assert rep["construction_residual"] < 1e-12
    for key in ("version", "case_hash", "omega_d", "transform", "seed"):
        assert key in rep


def test_assemble_hash_depends_on_frequency(capsys):
    a = json.loads(run(capsys, "assemble", THREE, "--hz", "2")[1])
    b = json.loads(run(capsys, "assemble", THREE, "--hz", "0.5")[1])
    assert a["Y_B_hash"] != b["Y_B_hash"]
    assert a["case_hash"] == b["case_hash"]


def test_reports_are_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        assert main(["flows", LOSSY, "--source-bus", "31", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_dwe_report(capsys):
    code, out, _ = run(capsys, "dwe", LOSSY, "--bus", "31")
    rep = json.loads(out)
    assert code == 0
    assert rep["verdict"]["verdict"] == "Unreliable"
    assert rep["eigenvalues"][0] < 0 < rep["eigenvalues"][1]


def test_sweep_exit_codes(capsys, tmp_path):
    assert run(capsys, "sweep", NOLOSS, "--hz-grid", "2")[0] == 0
    csv = tmp_path / "grid.csv"
    assert run(capsys, "sweep", LOSSY, "--hz-grid", "2", "--csv", str(csv))[0] == 2
    rows = dict(line.split(",", 1) for line in csv.read_text().splitlines())
    assert rows["31"] == "Unreliable"


def test_sweep_empty_buses_defaults_to_shunt_buses(capsys):
    rep = json.loads(run(capsys, "sweep", THREE, "--buses", "", "--hz-grid", "1,2")[1])
    assert rep["sweep"]["buses"] == cf.load_fixture("three_bus").shunt_buses()
    assert rep["sweep"]["frequencies_hz"] == [1.0, 2.0]


def test_sweep_range_grid(capsys):
    rep = json.loads(run(capsys, "sweep", THREE, "--hz-grid", "0.5:1.5:3")[1])
    assert rep["sweep"]["frequencies_hz"] == [0.5, 1.0, 1.5]


def test_flows_balance_and_dot(capsys, tmp_path):
    dot = tmp_path / "g.dot"
    code, out, _ = run(capsys, "flows", NOLOSS, "--source-bus", "31", "--dot", str(dot))
    rep = json.loads(out)
    assert code == 0
    assert rep["max_abs_balance"] <= 1e-9
    term = {int(k): v for k, v in rep["terminal_p_star"].items()}
    assert min(term, key=term.get) == 31
    assert dot.read_text().startswith("digraph")


def test_flows_witness_source_absorbs(capsys):
    rep = json.loads(run(capsys, "flows", LOSSY, "--source-bus", "31", "--witness")[1])
    assert rep["terminal_p_star"]["31"] > 0


def test_flows_witness_unavailable_on_passive_case(capsys):
    code, _, err = run(capsys, "flows", NOLOSS, "--source-bus", "31", "--witness")
    assert code == 1 and "witness" in err


def _synth(capsys, tmp_path, noise="0", seed="0"):
    d = tmp_path / "pmu"
    code, out, _ = run(capsys, "synth", LOSSY, str(d), "--source-bus", "31", "--noise", noise, "--seed", seed)
    assert code == 0
    return d, json.loads(out)


def test_synth_then_infer_finds_source(capsys, tmp_path):
    d, rep = _synth(capsys, tmp_path)
    assert len(rep["files"]) == 39
    inf = json.loads(run(capsys, "infer", LOSSY, str(d))[1])
    assert inf["top_bus"] == 31


def test_infer_with_measurement_noise(capsys, tmp_path):
    d, _ = _synth(capsys, tmp_path, noise="1e-4", seed="11")
    inf = json.loads(run(capsys, "infer", LOSSY, str(d))[1])
    assert inf["top_bus"] == 31


def test_infer_names_mismatched_bus_ids(capsys, tmp_path):
    d, _ = _synth(capsys, tmp_path)
    (d / "bus_5.csv").rename(d / "bus_500.csv")
    code, _, err = run(capsys, "infer", LOSSY, str(d))
    assert code == 1
    assert "[5]" in err and "[500]" in err


def test_infer_missing_channel(capsys, tmp_path):
    d, _ = _synth(capsys, tmp_path)
    (d / "bus_1.csv").write_text("t,Vmag\n0,1\n0.01,1\n")
    code, _, err = run(capsys, "infer", LOSSY, str(d))
    assert code == 1 and "Vang" in err


def test_infer_insufficient_cycles(capsys, tmp_path):
    d = tmp_path / "short"
    run(capsys, "synth", THREE, str(d), "--source-bus", "1", "--cycles", "2", "--samples-per-cycle", "16")
    p = d / "bus_2.csv"
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:10]) + "\n")
    code, _, err = run(capsys, "infer", THREE, str(d))
    assert code == 1 and "cycles" in err


def test_malformed_case_exits_with_field_message(capsys, tmp_path):
    doc = cf.read_case_doc(cf.fixture_path("three_bus"))
    doc["branches"][0]["to"] = 42
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "assemble", str(path))
    assert code == 1
    assert "branches[0].to" in err and "42" in err


def test_selfcheck_passes(capsys):
    code, out, _ = run(capsys, "selfcheck")
    assert code == 0
    assert "FAIL" not in out


def test_selfcheck_names_mutated_check(monkeypatch):
    from forcedosc import algebra as al
    from forcedosc import selfcheck

    monkeypatch.setattr(al, "hermitian_part", lambda a: 0.5 * (a + a.conj().T))
    results = {r.name: r.ok for r in selfcheck.run_selfcheck()}
    assert not results["hermitian_convention"]


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "forcedosc" in capsys.readouterr().out
