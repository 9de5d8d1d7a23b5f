import copy
import json

import pytest

from forcedosc import casefile as cf
from forcedosc import network as nw


@pytest.fixture
def doc():
    return cf.read_case_doc(cf.fixture_path("three_bus"))


@pytest.mark.parametrize("name", cf.FIXTURES)
def test_fixtures_load(name):
    case = cf.load_fixture(name)
    assert case.n_buses >= 3


def test_unknown_fixture():
    with pytest.raises(KeyError, match="unknown fixture"):
        cf.fixture_path("nope")


def test_dict_round_trip_preserves_hash(doc):
    case = cf.case_from_dict(doc)
    again = cf.case_from_dict(cf.case_to_dict(case))
    assert cf.case_hash(again) == cf.case_hash(case)


def test_hash_ignores_key_order(doc):
    shuffled = json.loads(json.dumps(doc, sort_keys=True))
    assert cf.case_hash(shuffled) == cf.case_hash(doc)


def test_dump_and_load(tmp_path, doc):
    path = tmp_path / "c.json"
    cf.dump_case(doc, path)
    assert cf.case_hash(cf.load_case(path)) == cf.case_hash(cf.case_from_dict(doc))


def _mutate(doc, fn):
    d = copy.deepcopy(doc)
    fn(d)
    return d


MALFORMED = [
    (lambda d: d.pop("buses"), "buses"),
    (lambda d: d["buses"][0].update(v=-1.0), "buses[0].v"),
    (lambda d: d["branches"][0].update(to=99), "references unknown bus 99"),
    (lambda d: d["branches"][0].update(to=d["branches"][0]["from"]), "self-loop"),
    (lambda d: d["branches"][0].update(r=0.0, x=0.0), "zero series impedance"),
    (lambda d: d["buses"].append(dict(d["buses"][0])), "duplicate bus id"),
    (lambda d: d["shunts"][0].update(kind="flux_capacitor"), "shunts[0].kind"),
    (lambda d: d["shunts"][0]["params"].pop("M"), "'M' is a required property"),
    (lambda d: d["shunts"][0]["params"].update(Xdp=0.0), "params.Xdp"),
    (lambda d: d["shunts"][0].update(bus=77), "shunts[0].bus"),
    (lambda d: d["branches"][0].update(tap=0), "tap"),
    (lambda d: d.update(extra=1), "extra"),
]


@pytest.mark.parametrize("mutation,message", MALFORMED)
def test_malformed_cases_are_rejected_with_field(doc, mutation, message):
    with pytest.raises(cf.CaseFileError) as err:
        cf.case_from_dict(_mutate(doc, mutation))
    assert message in str(err.value)


def test_dangling_branch_names_the_branch(doc):
    d = _mutate(doc, lambda d: d["branches"][1].update(name="tx23", to=50))
    with pytest.raises(cf.CaseFileError, match="branch tx23"):
        cf.case_from_dict(d)


def test_gen_avr_needs_xd_above_xdp():
    d = cf.read_case_doc(cf.fixture_path("ieee39_lossy"))
    sh = next(s for s in d["shunts"] if s["kind"] == "gen_avr")
    sh["params"]["Xd"] = sh["params"]["Xdp"] / 2
    with pytest.raises(cf.CaseFileError, match="Xd"):
        cf.case_from_dict(d)


@pytest.mark.parametrize("text,message", [("{", "line 1 column 2"), ('{"a": NaN}', "non-finite"), ('{"a": Infinity}', "non-finite")])
def test_bad_json_text(tmp_path, text, message):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(cf.CaseFileError, match=message):
        cf.load_case(path)


def test_missing_file(tmp_path):
    with pytest.raises(cf.CaseFileError, match="cannot read"):
        cf.load_case(tmp_path / "absent.json")


def test_power_mismatch_warns(doc, caplog):
    d = _mutate(doc, lambda d: d["shunts"][0]["params"].update(p=d["shunts"][0]["params"]["p"] + 0.5))
    with caplog.at_level("WARNING"):
        cf.case_from_dict(d)
    assert "mismatch" in caplog.text


def test_droop_allows_zero_gains(doc):
    d = _mutate(doc, lambda d: d["shunts"].append(
        {"bus": 2, "kind": "droop_inverter", "params": {"Rc": 0.0, "Lc": 0.01, "Xc": 1.0, "kp": 0.0, "kq": 0.0, "tau": 1.0}}
    ))
    case = cf.case_from_dict(d)
    assert any(s.kind == "droop_inverter" for s in case.shunts)
    nw.assemble(case, 2.0)
