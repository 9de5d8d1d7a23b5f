"""Case-file JSON: schema validation, loading and canonical serialisation."""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from . import components as comp
from . import network as nw

__all__ = [
    "CaseFileError",
    "CASE_SCHEMA",
    "validate_case_dict",
    "case_from_dict",
    "case_to_dict",
    "load_case",
    "dump_case",
    "case_hash",
    "fixture_path",
    "load_fixture",
    "FIXTURES",
    "read_case_doc",
]

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_WEIGHTS = {"type": "array", "items": _NONNEG, "minItems": 3, "maxItems": 3}


def _params(required: dict[str, dict], optional: dict[str, dict] | None = None) -> dict:
    props = dict(required)
    props.update(optional or {})
    return {
        "type": "object",
        "required": sorted(required),
        "properties": props,
        "additionalProperties": False,
    }


_KIND_PARAMS = {
    "classical_gen": _params({"M": _POS, "D": _NUM, "Xdp": _POS, "p": _NUM, "q": _NUM}),
    "gen_avr": _params(
        {
            "M": _POS, "D": _NUM, "Xd": _POS, "Xdp": _POS, "Xq": _POS,
            "Td0p": _POS, "Ta": _POS, "Ka": _NONNEG, "p": _NUM, "q": _NUM,
        }
    ),
    "zip_load": _params(
        {"p": _NUM, "q": _NUM}, {"p_weights": _WEIGHTS, "q_weights": _WEIGHTS}
    ),
    "freq_dep_load": _params(
        {"p": _NUM, "q": _NUM},
        {"alpha_p": _NUM, "alpha_q": _NUM, "beta_p": _NUM, "beta_q": _NUM},
    ),
    "droop_inverter": _params(
        {"Rc": _NONNEG, "Lc": _NONNEG, "Xc": _NUM, "kp": _NONNEG, "kq": _NONNEG, "tau": _POS},
        {"p": _NUM, "q": _NUM},
    ),
    "impedance": _params({"g": _NONNEG, "b": _NUM}),
}

CASE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "base_frequency_hz", "buses", "branches", "shunts"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "base_frequency_hz": _POS,
        "description": {"type": "string"},
        "buses": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "v", "theta"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer"},
                    "v": _POS,
                    "theta": _NUM,
                    "i_mag": _NONNEG,
                    "i_ang": _NUM,
                },
            },
        },
        "branches": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "r", "x"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "integer"},
                    "to": {"type": "integer"},
                    "r": _NONNEG,
                    "x": _NUM,
                    "b": _NUM,
                    "tap": {"type": "number", "not": {"const": 0}},
                    "name": {"type": "string"},
                },
            },
        },
        "shunts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["bus", "kind", "params"],
                "additionalProperties": False,
                "properties": {
                    "bus": {"type": "integer"},
                    "kind": {"enum": list(nw.SHUNT_KINDS)},
                    "params": {"type": "object"},
                    "name": {"type": "string"},
                },
                "allOf": [
                    {
                        "if": {"properties": {"kind": {"const": k}}, "required": ["kind"]},
                        "then": {"properties": {"params": schema}},
                    }
                    for k, schema in _KIND_PARAMS.items()
                ],
            },
        },
    },
}

FIXTURES = (
    "ieee39_noloss",
    "ieee39_lossy",
    "ieee39_avr_strong",
    "ieee39_rscale_0",
    "ieee39_rscale_0.5",
    "ieee39_rscale_1",
    "ieee39_rscale_2",
    "ieee39_rscale_4",
    "three_bus",
)


class CaseFileError(ValueError):
    """Invalid case file; the message names the offending field."""


def _path(err: jsonschema.ValidationError) -> str:
    out = ""
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _reject_constant(name: str):
    raise CaseFileError(f"non-finite number {name} is not allowed")


def validate_case_dict(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        # The deepest error is the most specific one.
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise CaseFileError(f"{_path(err)}: {err.message}")
    _check_finite(doc, "")
    ids = [b["id"] for b in doc["buses"]]
    seen: set[int] = set()
    for k, i in enumerate(ids):
        if i in seen:
            raise CaseFileError(f"buses[{k}].id: duplicate bus id {i}")
        seen.add(i)
    for k, br in enumerate(doc["branches"]):
        for end in ("from", "to"):
            if br[end] not in seen:
                label = br.get("name") or f"{br['from']}-{br['to']}"
                raise CaseFileError(
                    f"branches[{k}].{end}: branch {label} references unknown bus {br[end]}"
                )
        if br["from"] == br["to"]:
            raise CaseFileError(f"branches[{k}]: self-loop at bus {br['from']}")
        if br["r"] == 0 and br["x"] == 0:
            raise CaseFileError(f"branches[{k}]: zero series impedance")
    for k, sh in enumerate(doc["shunts"]):
        if sh["bus"] not in seen:
            raise CaseFileError(f"shunts[{k}].bus: references unknown bus {sh['bus']}")
        if sh["kind"] == "gen_avr" and not sh["params"]["Xd"] > sh["params"]["Xdp"]:
            raise CaseFileError(f"shunts[{k}].params.Xd: must exceed Xdp")


def _check_finite(node: Any, where: str) -> None:
    if isinstance(node, float) and not math.isfinite(node):
        raise CaseFileError(f"{where or '<root>'}: non-finite number")
    if isinstance(node, dict):
        for k, v in node.items():
            _check_finite(v, f"{where}.{k}" if where else k)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _check_finite(v, f"{where}[{i}]")


def case_from_dict(doc: dict) -> nw.NetworkCase:
    validate_case_dict(doc)
    buses = [
        nw.Bus(b["id"], float(b["v"]), float(b["theta"]), float(b.get("i_mag", 0.0)), float(b.get("i_ang", 0.0)))
        for b in doc["buses"]
    ]
    branches = [
        comp.BranchParams(
            br["from"], br["to"], 1.0 / complex(br["r"], br["x"]),
            float(br.get("tap", 1.0)), float(br.get("b", 0.0)), br.get("name", ""),
        )
        for br in doc["branches"]
    ]
    shunts = [nw.ShuntSpec(s["bus"], s["kind"], dict(s["params"]), s.get("name", "")) for s in doc["shunts"]]
    case = nw.NetworkCase(doc["name"], float(doc["base_frequency_hz"]), buses, branches, shunts)
    try:
        case.devices  # noqa: B018 - force device construction for early errors
    except nw.NetworkError as exc:
        raise CaseFileError(str(exc)) from exc
    case.check_power_balance()
    return case


def case_to_dict(case: nw.NetworkCase) -> dict:
    out_br = []
    for br in case.branches:
        z = 1.0 / complex(br.y)
        rec = {"from": br.from_bus, "to": br.to_bus, "r": z.real, "x": z.imag}
        if br.b_charging:
            rec["b"] = br.b_charging
        if br.tap != 1.0:
            rec["tap"] = br.tap
        if br.name:
            rec["name"] = br.name
        out_br.append(rec)
    return {
        "name": case.name,
        "base_frequency_hz": case.base_frequency_hz,
        "buses": [
            {"id": b.id, "v": b.V, "theta": b.theta, "i_mag": b.i_mag, "i_ang": b.i_ang}
            for b in case.buses
        ],
        "branches": out_br,
        "shunts": [
            {"bus": s.bus, "kind": s.kind, "params": dict(s.params), **({"name": s.name} if s.name else {})}
            for s in case.shunts
        ],
    }


def _canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def case_hash(doc_or_case) -> str:
    doc = case_to_dict(doc_or_case) if isinstance(doc_or_case, nw.NetworkCase) else doc_or_case
    return hashlib.sha256(_canonical(doc).encode()).hexdigest()


def read_case_doc(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFileError(f"cannot read case file {p}: {exc}") from exc
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise CaseFileError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_case(path: str | Path) -> nw.NetworkCase:
    return case_from_dict(read_case_doc(path))


def dump_case(case_or_doc, path: str | Path) -> None:
    doc = case_to_dict(case_or_doc) if isinstance(case_or_doc, nw.NetworkCase) else case_or_doc
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")


def fixture_path(name: str) -> Path:
    """Path of a bundled case file, e.g. ``fixture_path("ieee39_noloss")``."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return Path(str(resources.files("forcedosc") / "data" / f"{name}.json"))


def load_fixture(name: str) -> nw.NetworkCase:
    return load_case(fixture_path(name))

