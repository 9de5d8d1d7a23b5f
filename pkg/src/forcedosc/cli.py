"""Command-line interface: ``forcedosc <subcommand> ...``.

Every JSON report carries the tool version, the case hash, the forcing
frequency, the transform parameters and the seed, and is written with
sorted keys so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import casefile as cf
from . import components as comp
from . import energyflow as ef
from . import network as nw
from . import scenarios as sc
from . import signal as sg
from .algebra import def_transform

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCREEN_FAIL = 2

_BUS_FILE = re.compile(r"^bus_(-?\d+)\.csv$")


class CliError(Exception):
    pass


def _cplx(z) -> Any:
    a = np.asarray(z)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_cplx(x) for x in a]


def _header(doc: dict, hz: float | None, seed: int | None) -> dict:
    out: dict[str, Any] = {
        "tool": "forcedosc",
        "version": __version__,
        "case_hash": cf.case_hash(doc),
        "seed": seed,
    }
    if hz is not None:
        omega = 2 * math.pi * hz
        out["omega_d"] = omega
        out["transform"] = def_transform(omega).as_dict()
    else:
        out["omega_d"] = None
        out["transform"] = None
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(report: dict, out: Path | None) -> None:
    text = dumps(report)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _load(path: Path) -> tuple[dict, nw.NetworkCase]:
    doc = cf.read_case_doc(path)
    return doc, cf.case_from_dict(doc)


def _matrix_hash(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(np.round(a, 12)).tobytes()).hexdigest()


def _parse_buses(text: str | None) -> list[int] | None:
    if text is None or not text.strip():
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(f"--buses: expected comma-separated integers, got {text!r}") from exc


def _parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(f"--hz-grid: cannot parse {text!r}") from exc


def _source_current(amplitude: float) -> np.ndarray:
    return amplitude * np.array([1.0, 1j]) / math.sqrt(2)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_assemble(args) -> int:
    doc, case = _load(args.case)
    net = nw.assemble(case, 2 * math.pi * args.hz)
    series_cond = [float(np.linalg.cond(b)) for b in net.series_blocks]
    shunt_cond = {
        str(b.id): float(np.linalg.cond(net.shunt_block(b.id)))
        for b in case.buses
        if np.any(net.shunt_block(b.id) != 0)
    }
    rep = _header(doc, args.hz, None)
    rep.update(
        {
            "command": "assemble",
            "case": case.name,
            "n_buses": case.n_buses,
            "n_branches": case.n_branches,
            "n_shunts": len(case.shunts),
            "Y_B_shape": list(net.Y_B.shape),
            "Y_B_hash": _matrix_hash(net.Y_B),
            "Y_B_condition": float(np.linalg.cond(net.Y_B)),
            "construction_residual": net.construction_residual(),
            "series_block_condition_max": max(series_cond) if series_cond else None,
            "shunt_block_condition": shunt_cond,
            "power_balance_residual": case.power_balance_residual(),
        }
    )
    _emit(rep, args.out)
    return EXIT_OK


def cmd_dwe(args) -> int:
    doc, case = _load(args.case)
    omega = 2 * math.pi * args.hz
    net = nw.assemble(case, omega)
    d = nw.dwe(net, args.bus)
    v = ef.verdict(d.eig, args.tol, bus=args.bus, Omega=omega)
    rep = _header(doc, args.hz, None)
    rep.update(
        {
            "command": "dwe",
            "bus": args.bus,
            "Y_N": _cplx(d.Y_N),
            "eigenvalues": list(d.eig.as_tuple()),
            "eigenvalues_mg": list(d.eig_mg.as_tuple()),
            "verdict": v.as_dict(),
            "interior_rcond": d.rcond,
        }
    )
    _emit(rep, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc, case = _load(args.case)
    freqs = _parse_grid(args.hz_grid)
    res = ef.sweep(case, _parse_buses(args.buses), freqs, args.tol)
    rep = _header(doc, None, None)
    rep.update({"command": "sweep", "tol": args.tol, "all_succeed": res.all_succeed(), "sweep": res.as_dict()})
    _emit(rep, args.out)
    if args.csv is not None:
        args.csv.write_text(res.to_csv(), encoding="utf-8")
    return EXIT_OK if res.all_succeed() else EXIT_SCREEN_FAIL


def _flows_solution(case: nw.NetworkCase, hz: float, source: int, amplitude: float, witness: bool):
    net = nw.assemble(case, 2 * math.pi * hz)
    if source not in net.index_map:
        raise CliError(f"--source-bus {source} is not a bus of case {case.name}")
    if witness:
        d = nw.dwe(net, source)
        w = ef.source_sink_witness(d, net)
        if w is None:
            raise CliError(f"no source-as-sink witness exists at bus {source}: the equivalent is passive")
        j = w.J * (amplitude / np.linalg.norm(w.J[net.slot(source)]))
    else:
        j = nw.source_injection(net, source, _source_current(amplitude))
    return net, nw.solve_injection(net, j)


def cmd_flows(args) -> int:
    doc, case = _load(args.case)
    net, sol = _flows_solution(case, args.hz, args.source_bus, args.amplitude, args.witness)
    fm = ef.line_flow_pstar(sol, net)
    rep = _header(doc, args.hz, None)
    rep.update(
        {
            "command": "flows",
            "source_bus": args.source_bus,
            "amplitude": args.amplitude,
            "witness": bool(args.witness),
            "line_ends": [
                {"branch": e.branch, "label": e.label, "bus": e.bus, "other": e.other, "p_star": e.p_star}
                for e in fm.ends
            ],
            "terminal_p_star": {str(b.id): fm.terminal_pstar(b.id) for b in case.buses},
            "balance": {str(k): v for k, v in fm.balance.items()},
            "max_abs_balance": max(abs(v) for v in fm.balance.values()),
            "tellegen_residual": sol.tellegen_residual(net),
        }
    )
    _emit(rep, args.out)
    if args.dot is not None:
        args.dot.write_text(fm.to_dot(), encoding="utf-8")
    return EXIT_OK


def cmd_synth(args) -> int:
    doc, case = _load(args.case)
    net, sol = _flows_solution(case, args.hz, args.source_bus, args.amplitude, False)
    series = sc.bus_voltage_series(
        net, sol, cycles=args.cycles, samples_per_cycle=args.samples_per_cycle,
        noise_std=args.noise, seed=args.seed,
    )
    args.dir.mkdir(parents=True, exist_ok=True)
    for bus_id, chans in series.items():
        sg.write_csv(chans, args.dir / f"bus_{bus_id}.csv")
    rep = _header(doc, args.hz, args.seed)
    rep.update(
        {
            "command": "synth",
            "source_bus": args.source_bus,
            "amplitude": args.amplitude,
            "cycles": args.cycles,
            "samples_per_cycle": args.samples_per_cycle,
            "noise_std": args.noise,
            "files": sorted(f"bus_{b}.csv" for b in series),
        }
    )
    _emit(rep, args.out)
    return EXIT_OK


def _read_bus_dir(directory: Path, case: nw.NetworkCase) -> dict[int, dict[str, sg.TimeSeries]]:
    if not directory.is_dir():
        raise CliError(f"{directory} is not a directory")
    found = {}
    for p in sorted(directory.iterdir()):
        m = _BUS_FILE.match(p.name)
        if m:
            found[int(m.group(1))] = p
    want = {b.id for b in case.buses}
    extra, missing = sorted(set(found) - want), sorted(want - set(found))
    if extra or missing:
        parts = []
        if missing:
            parts.append(f"no file for bus ids {missing}")
        if extra:
            parts.append(f"files for unknown bus ids {extra}")
        raise CliError(f"bus files do not match case {case.name}: " + "; ".join(parts))
    return {b: sg.read_csv(found[b], required=("Vmag", "Vang")) for b in sorted(found)}


def cmd_infer(args) -> int:
    doc, case = _load(args.case)
    omega = 2 * math.pi * args.hz
    data = _read_bus_dir(args.dir, case)
    net = nw.assemble(case, omega)
    v = np.zeros(2 * net.n, dtype=complex)
    for bus_id, chans in data.items():
        try:
            vp = np.array([sg.fft_extract(chans["Vmag"], omega), sg.fft_extract(chans["Vang"], omega)])
            vmag = sg.steady_value(chans["Vmag"], omega)
            vang = sg.steady_value(chans["Vang"], omega)
        except sg.SignalError as exc:
            raise CliError(f"bus {bus_id}: {exc}") from exc
        v[net.slot(bus_id)] = comp.polar_to_rect_T1(vmag, vang) @ vp
    j, jbar = nw.infer_injections(net, v)
    ids = [b.id for b in case.buses]
    order = sorted(range(len(ids)), key=lambda k: (-jbar[k], ids[k]))
    rep = _header(doc, args.hz, None)
    rep.update(
        {
            "command": "infer",
            "ranking": [{"bus": ids[k], "jbar": float(jbar[k])} for k in order],
            "top_bus": ids[order[0]],
            "J": {str(ids[k]): _cplx(j[2 * k: 2 * k + 2]) for k in range(len(ids))},
        }
    )
    _emit(rep, args.out)
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck

    results = run_selfcheck()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.3f} s)")
    failed = [r.name for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_ERROR


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _positive(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forcedosc",
        description="Forced-oscillation source location: reliability screening and energy-flow maps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, *, case=True, hz=True):
        p = sub.add_parser(name, help=help_text)
        if case:
            p.add_argument("case", type=Path, help="Case JSON file.")
        if hz:
            p.add_argument("--hz", type=_positive, default=2.0, help="Forcing frequency in Hz (default: 2).")
        p.add_argument("--out", type=Path, help="Write the JSON report here instead of stdout.")
        p.set_defaults(func=fn)
        return p

    add("assemble", cmd_assemble, "Assemble the dynamic nodal admittance and summarize it.")

    p = add("dwe", cmd_dwe, "Equivalent admittance and verdict at one bus.")
    p.add_argument("--bus", type=int, required=True, help="Candidate source bus id.")
    p.add_argument("--tol", type=float, help="Eigenvalue sign tolerance (default: relative).")

    p = add("sweep", cmd_sweep, "Verdict grid over buses and frequencies.", hz=False)
    p.add_argument("--buses", default="", help="Comma-separated bus ids; empty means every bus with a device.")
    p.add_argument("--hz-grid", default="0.1:3:30", help="Comma list or start:stop:count (default: 0.1:3:30).")
    p.add_argument("--tol", type=float, help="Eigenvalue sign tolerance (default: relative).")
    p.add_argument("--csv", type=Path, help="Also write the verdict matrix as CSV.")

    p = add("flows", cmd_flows, "Dissipating-power flow map for an injection at one bus.")
    p.add_argument("--source-bus", type=int, required=True)
    p.add_argument("--amplitude", type=_positive, default=1.0, help="Injection current magnitude.")
    p.add_argument("--witness", action="store_true", help="Use the source-as-sink witness injection.")
    p.add_argument("--dot", type=Path, help="Write the flow graph in DOT format.")

    p = add("synth", cmd_synth, "Write synthetic bus voltage CSVs for an injection at one bus.")
    p.add_argument("dir", type=Path, help="Output directory for bus_<id>.csv files.")
    p.add_argument("--source-bus", type=int, required=True)
    p.add_argument("--amplitude", type=_positive, default=1.0)
    p.add_argument("--cycles", type=int, default=20)
    p.add_argument("--samples-per-cycle", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.0, help="White-noise standard deviation per channel.")
    p.add_argument("--seed", type=int, default=0)

    p = add("infer", cmd_infer, "Infer nodal injections from bus voltage CSVs and rank buses.")
    p.add_argument("dir", type=Path, help="Directory of bus_<id>.csv files with t,Vmag,Vang.")

    add("selfcheck", cmd_selfcheck, "Run the fast invariant suite.", case=False, hz=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, cf.CaseFileError, nw.NetworkError, comp.ComponentError, sg.SignalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
