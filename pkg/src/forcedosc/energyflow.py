"""Dissipating-energy-flow analysis: reliability verdicts, flow maps and
the resistive/damping split of a device's quadratic power."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import network as nw
from .algebra import (
    T1,
    T2,
    T3,
    T4,
    EigPair,
    Frf2,
    herm_eigs,
    PassivityTransform,
    Role,
    decompose,
    def_transform,
    hermitian_part,
)

__all__ = [
    "Verdict",
    "DefVerdict",
    "VerdictSweep",
    "SweepCell",
    "PowerDecomposition",
    "LineEndFlow",
    "FlowMap",
    "Witness",
    "default_tol",
    "verdict",
    "sweep",
    "line_flow_pstar",
    "flow_map",
    "power_decomposition",
    "source_sink_witness",
    "k_transform_eigs",
]


class Verdict(str, enum.Enum):
    SUCCEED = "Succeed"
    FAIL = "Fail"
    UNRELIABLE = "Unreliable"


@dataclass(frozen=True)
class DefVerdict:
    verdict: Verdict
    lambda1: float
    lambda2: float
    bus: int | None = None
    Omega: float | None = None
    tol: float = 0.0

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "bus": self.bus,
            "omega": self.Omega,
            "tol": self.tol,
        }


def default_tol(lam2: float) -> float:
    return 1e-6 * max(1.0, abs(lam2))


def verdict(
    eig: EigPair | tuple[float, float],
    tol: float | None = None,
    *,
    bus: int | None = None,
    Omega: float | None = None,
) -> DefVerdict:
    lam1, lam2 = eig.as_tuple() if isinstance(eig, EigPair) else (float(eig[0]), float(eig[1]))
    lam1, lam2 = min(lam1, lam2), max(lam1, lam2)
    t = default_tol(lam2) if tol is None else float(tol)
    if t < 0:
        raise ValueError("tol must be non-negative")
    if lam1 >= -t and lam2 >= -t:
        v = Verdict.SUCCEED
    elif lam1 <= t and lam2 <= t:
        v = Verdict.FAIL
    else:
        v = Verdict.UNRELIABLE
    return DefVerdict(v, lam1, lam2, bus, Omega, t)


@dataclass(frozen=True)
class SweepCell:
    bus: int
    hz: float
    result: DefVerdict | None
    diagnostic: EigPair | None = None
    error: str | None = None

    def as_dict(self) -> dict:
        out = {"bus": self.bus, "hz": self.hz}
        if self.result is not None:
            out.update(self.result.as_dict())
            out["lambda_mg"] = list(self.diagnostic.as_tuple()) if self.diagnostic else None
        else:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class VerdictSweep:
    frequencies: tuple[float, ...]
    buses: tuple[int, ...]
    cells: tuple[tuple[SweepCell, ...], ...]

    def cell(self, bus: int, hz: float) -> SweepCell:
        return self.cells[self.buses.index(bus)][self.frequencies.index(hz)]

    def all_succeed(self) -> bool:
        return all(
            c.result is not None and c.result.verdict is Verdict.SUCCEED
            for row in self.cells
            for c in row
        )

    def as_dict(self) -> dict:
        return {
            "frequencies_hz": list(self.frequencies),
            "buses": list(self.buses),
            "cells": [[c.as_dict() for c in row] for row in self.cells],
        }

    def to_csv(self) -> str:
        lines = ["bus," + ",".join(f"{f:g}" for f in self.frequencies)]
        for b, row in zip(self.buses, self.cells):
            vals = [c.result.verdict.value if c.result else "Error" for c in row]
            lines.append(f"{b}," + ",".join(vals))
        return "\n".join(lines) + "\n"


def sweep(
    case: nw.NetworkCase,
    buses: list[int] | None,
    freqs_hz: list[float],
    tol: float | None = None,
) -> VerdictSweep:
    """Reliability grid over buses and candidate forcing frequencies.

    Each cell fails independently; errors are recorded rather than raised.
    """
    bus_list = tuple(buses) if buses else tuple(case.shunt_buses())
    freqs = tuple(float(f) for f in freqs_hz)
    grid: list[list[SweepCell]] = [[None] * len(freqs) for _ in bus_list]  # type: ignore[list-item]
    for fi, hz in enumerate(freqs):
        omega = 2 * math.pi * hz
        try:
            net = nw.assemble(case, omega)
        except (nw.NetworkError, ValueError, np.linalg.LinAlgError) as exc:
            for bi, b in enumerate(bus_list):
                grid[bi][fi] = SweepCell(b, hz, None, error=f"assembly: {exc}")
            continue
        t = def_transform(omega)
        for bi, b in enumerate(bus_list):
            try:
                d = nw.dwe(net, b, t)
                grid[bi][fi] = SweepCell(b, hz, verdict(d.eig, tol, bus=b, Omega=omega), d.eig_mg)
            except (nw.NetworkError, ValueError, np.linalg.LinAlgError) as exc:
                grid[bi][fi] = SweepCell(b, hz, None, error=str(exc))
    return VerdictSweep(freqs, bus_list, tuple(tuple(r) for r in grid))


@dataclass(frozen=True)
class PowerDecomposition:
    p_star: float
    p_r_star: float
    p_d_star: float


def power_decomposition(Y, u, T: PassivityTransform) -> PowerDecomposition:
    """Total, resistive (T1) and damping (imaginary T2..T4) quadratic power."""
    if isinstance(Y, Frf2):
        if Y.role is not Role.ADMITTANCE:
            raise ValueError("power decomposition needs an admittance FRF")
        Y = Y.entries
    y = np.asarray(Y, dtype=complex)
    u = np.asarray(u, dtype=complex)
    d = decompose(y)
    a, b = d.a, d.b
    resist = a[0] * T1
    damp = 1j * (b[1] * T2 + b[2] * T3 + b[3] * T4)

    def q(mat):
        return float(np.real(u.conj() @ T.M @ mat @ T.gamma @ u))

    return PowerDecomposition(q(y), q(resist), q(damp))


@dataclass(frozen=True)
class LineEndFlow:
    branch: int
    label: str
    bus: int
    other: int
    p_star: float


@dataclass(frozen=True)
class FlowMap:
    ends: tuple[LineEndFlow, ...]
    shunt_pstar: dict[int, float]
    source_pstar: dict[int, float]
    balance: dict[int, float]

    def terminal_pstar(self, bus: int) -> float:
        """Quadratic power absorbed at a bus by its devices and injection."""
        return self.shunt_pstar.get(bus, 0.0) + self.source_pstar.get(bus, 0.0)

    def to_dot(self, name: str = "pstar") -> str:
        """Directed graph with edges pointing along positive flow."""
        lines = [f"digraph {name} {{"]
        by_branch: dict[int, list[LineEndFlow]] = {}
        for e in self.ends:
            by_branch.setdefault(e.branch, []).append(e)
        for _, pair in sorted(by_branch.items()):
            for e in pair:
                if e.p_star > 0:
                    lines.append(
                        f'  "{e.bus}" -> "{e.label}" [weight={e.p_star:.6g}, label="{e.p_star:.3g}"];'
                    )
                else:
                    lines.append(
                        f'  "{e.label}" -> "{e.bus}" [weight={-e.p_star:.6g}, label="{-e.p_star:.3g}"];'
                    )
        for b, p in sorted(self.source_pstar.items()):
            if p != 0.0:
                lines.append(f'  "{b}" [shape=doublecircle, xlabel="{p:.3g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def line_flow_pstar(
    sol: nw.SolveResult, net: nw.AssembledNetwork, T: PassivityTransform | None = None
) -> FlowMap:
    """Per-line-end ``Re{V^H M I}`` with each end's current leaving its bus.

    Branch shunt content (charging, tap split) belongs to the line ends.
    """
    m = (T or def_transform(net.Omega)).M
    case = net.case
    v = sol.V_b.reshape(-1, 2)
    ends: list[LineEndFlow] = []
    bal = {b.id: 0.0 for b in case.buses}
    for l, br in enumerate(case.branches):
        i, j = net.index_map[br.from_bus], net.index_map[br.to_bus]
        ys = net.series_blocks[l]
        i_from = ys @ (v[i] - v[j]) + net.branch_shunt_blocks[l, 0] @ v[i]
        i_to = ys @ (v[j] - v[i]) + net.branch_shunt_blocks[l, 1] @ v[j]
        for bus, other, vv, ii in ((br.from_bus, br.to_bus, v[i], i_from), (br.to_bus, br.from_bus, v[j], i_to)):
            p = float(np.real(vv.conj() @ m @ ii))
            ends.append(LineEndFlow(l, br.label, bus, other, p))
            bal[bus] += p
    shunt_p: dict[int, float] = {}
    for sh, blk in zip(case.shunts, net.device_blocks):
        k = net.index_map[sh.bus]
        shunt_p[sh.bus] = shunt_p.get(sh.bus, 0.0) + float(np.real(v[k].conj() @ m @ blk @ v[k]))
    src_p: dict[int, float] = {}
    jj = sol.J.reshape(-1, 2)
    for b in case.buses:
        k = net.index_map[b.id]
        if np.any(jj[k] != 0):
            src_p[b.id] = float(np.real(v[k].conj() @ m @ jj[k]))
    scale = max([abs(e.p_star) for e in ends] + [1e-300])
    for b in case.buses:
        bal[b.id] = (bal[b.id] + shunt_p.get(b.id, 0.0) + src_p.get(b.id, 0.0)) / scale
    return FlowMap(tuple(ends), shunt_p, src_p, bal)


flow_map = line_flow_pstar


@dataclass(frozen=True)
class Witness:
    V_s: np.ndarray
    I_prime: np.ndarray
    J: np.ndarray
    source_term: float
    lambda1: float


def source_sink_witness(
    d: nw.DweResult, net: nw.AssembledNetwork | None = None, tol: float | None = None
) -> Witness | None:
    """Source voltage along the negative eigenvector, if one exists.

    With ``net`` supplied the returned ``J`` is the full nodal injection that
    realises the witness (the primed current minus the source's own shunt).
    """
    lam1, lam2 = d.eig.as_tuple()
    t = default_tol(lam2) if tol is None else tol
    if lam1 >= -t:
        return None
    t_def = def_transform(d.Omega)
    h = hermitian_part(t_def.M @ d.Y_N)
    w, vecs = np.linalg.eigh(h)
    vs = vecs[:, 0]
    ip = -d.Y_N @ vs
    u = np.linalg.solve(t_def.gamma, vs)
    src = float(np.real(u.conj() @ t_def.M @ ip))
    if net is not None:
        s = net.slot(d.source_bus)
        j = np.zeros(2 * net.n, dtype=complex)
        j[s] = ip - net.Y_S[s, s] @ vs
    else:
        j = ip
    return Witness(vs, ip, j, src, float(w[0]))



def k_transform_eigs(H: Frf2, V0: float) -> EigPair:
    """Eigenvalues of ``K^H H + h.c.`` for a polar-power FRF, ``K = diag(j, j/V0)``.

    Non-negative eigenvalues mean the time-domain dissipating energy is
    non-negative for every forcing of the device.
    """
    if H.role is not Role.POLAR_POWER:
        raise ValueError(f"expected a polar-power FRF, got role {H.role.value}")
    if not V0 > 0:
        raise ValueError("V0 must be positive")
    k = np.diag([1j, 1j / V0])
    return herm_eigs(hermitian_part(k.conj().T @ H.entries))
