"""Reusable experiment builders on the bundled cases: droop-inverter
penetration, seeded injection-localization trials and PMU-style voltage
and current series synthesized from a network solve."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from . import components as comp
from . import network as nw
from . import signal as sg
from .components import polar_to_rect_T1

__all__ = [
    "DROOP_BUSES",
    "DROOP_XC",
    "DROOP_TAU",
    "DROOP_KP_UNIT",
    "DROOP_KQ_UNIT",
    "with_droop_inverters",
    "LocalizationTrial",
    "localization_trial",
    "bus_voltage_series",
    "line_end_series",
    "steady_line_currents",
]

DROOP_BUSES = (4, 8, 16)
DROOP_XC = 5.0
DROOP_TAU = 1.0
DROOP_KP_UNIT = 1.3e-3
DROOP_KQ_UNIT = 7.5e-3


def with_droop_inverters(
    doc: dict,
    alpha: float,
    *,
    buses=DROOP_BUSES,
    Rc: float = 0.0,
    Xc: float = DROOP_XC,
    tau: float = DROOP_TAU,
) -> dict:
    """Copy of a case document with droop inverters whose gains scale with ``alpha``.

    ``alpha = 0`` keeps the coupling reactances with droop disabled, so the
    network is identical across the sweep except for the controller gains.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    out = copy.deepcopy(doc)
    f0 = float(doc["base_frequency_hz"])
    for b in buses:
        out["shunts"].append(
            {
                "bus": b,
                "kind": "droop_inverter",
                "name": f"inv{b}",
                "params": {
                    "Rc": Rc,
                    "Lc": Xc / (2 * math.pi * f0),
                    "Xc": Xc,
                    "kp": DROOP_KP_UNIT * alpha,
                    "kq": DROOP_KQ_UNIT * alpha,
                    "tau": tau,
                },
            }
        )
    out["name"] = f"{doc['name']}_droop_{alpha:g}"
    return out


@dataclass(frozen=True)
class LocalizationTrial:
    source_bus: int
    located_bus: int
    jbar: dict[int, float]

    @property
    def hit(self) -> bool:
        return self.located_bus == self.source_bus


def localization_trial(
    net: nw.AssembledNetwork,
    source_bus: int,
    rng: np.random.Generator,
    *,
    extraneous: float = 0.01,
    source_amplitude: float = 1.0,
) -> LocalizationTrial:
    """Unit source injection plus random extraneous injections at every other bus.

    Extraneous currents are complex Gaussian scaled to ``extraneous`` of the
    source amplitude; the located bus is the argmax of ``|J_r| + |J_i|``.
    """
    n = net.n
    j = extraneous * source_amplitude * (rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)) / math.sqrt(2)
    phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
    j[net.slot(source_bus)] = source_amplitude * phase * np.array([1.0, 1j]) / math.sqrt(2)
    sol = nw.solve_injection(net, j)
    _, jbar = nw.infer_injections(net, sol.V_b)
    ids = [b.id for b in net.case.buses]
    located = ids[int(np.argmax(jbar))]
    return LocalizationTrial(source_bus, located, dict(zip(ids, map(float, jbar))))


def _polar_series(steady_mag, steady_ang, polar_ph, Omega, duration, dt, names, noise, rng):
    ps = sg.PhasorSet({names[0]: polar_ph[0], names[1]: polar_ph[1]}, Omega, {names[0]: steady_mag, names[1]: steady_ang})
    seed = None if rng is None else int(rng.integers(2**31))
    return sg.synthesize(ps, duration, dt, noise, seed)


def bus_voltage_series(
    net: nw.AssembledNetwork,
    sol: nw.SolveResult,
    *,
    cycles: int = 20,
    samples_per_cycle: int = 64,
    noise_std: float = 0.0,
    seed: int | None = None,
) -> dict[int, dict[str, sg.TimeSeries]]:
    """Linearized ``Vmag``/``Vang`` channels per bus around the case's operating point."""
    Omega = net.Omega
    period = 2 * math.pi / Omega
    dt = period / samples_per_cycle
    rng = np.random.default_rng(seed)
    v = sol.V_b.reshape(-1, 2)
    out = {}
    for b in net.case.buses:
        t1 = polar_to_rect_T1(b.V, b.theta)
        vp = np.linalg.solve(t1, v[net.index_map[b.id]])
        out[b.id] = _polar_series(b.V, b.theta, vp, Omega, cycles * period, dt, ("Vmag", "Vang"), noise_std, rng)
    return out


def steady_line_currents(case: nw.NetworkCase) -> list[tuple[complex, complex]]:
    """Static current leaving each end of every branch at the operating point."""
    out = []
    for br in case.branches:
        vi, vj = case.bus(br.from_bus).v_complex, case.bus(br.to_bus).v_complex
        tp = comp.two_port_matrix(br)
        i_from = tp[0, 0] * vi + tp[0, 1] * vj + 0.5j * br.b_charging * vi
        i_to = tp[1, 0] * vi + tp[1, 1] * vj + 0.5j * br.b_charging * vj
        out.append((complex(i_from), complex(i_to)))
    return out


def line_end_series(
    net: nw.AssembledNetwork,
    sol: nw.SolveResult,
    branch: int,
    end: str = "from",
    *,
    cycles: int = 20,
    samples_per_cycle: int = 64,
) -> tuple[dict[str, sg.TimeSeries], sg.PolarRectTransform]:
    """Polar voltage and current channels at one line end, plus the exact transform.

    The current phasor is the perturbation leaving the bus into the branch.
    """
    case = net.case
    br = case.branches[branch]
    bus_id = br.from_bus if end == "from" else br.to_bus
    other = br.to_bus if end == "from" else br.from_bus
    v = sol.V_b.reshape(-1, 2)
    k, m = net.index_map[bus_id], net.index_map[other]
    side = 0 if end == "from" else 1
    i_ph = net.series_blocks[branch] @ (v[k] - v[m]) + net.branch_shunt_blocks[branch, side] @ v[k]
    i0 = steady_line_currents(case)[branch][side]
    b = case.bus(bus_id)
    T = sg.PolarRectTransform(b.V, b.theta, abs(i0), float(np.angle(i0)))
    vp = np.linalg.solve(T.T1, v[k])
    ip = np.linalg.solve(T.T1i, i_ph)
    period = 2 * math.pi / net.Omega
    dt = period / samples_per_cycle
    chans = {}
    chans.update(_polar_series(T.V, T.theta, vp, net.Omega, cycles * period, dt, ("Vmag", "Vang"), 0.0, None))
    chans.update(_polar_series(T.I, T.phi, ip, net.Omega, cycles * period, dt, ("Imag", "Iang"), 0.0, None))
    return chans, T
