"""Perturbative network model: assembly, dynamic Ward equivalents and solves.

Bus ``k`` (in case order) occupies rows ``2k`` and ``2k+1`` of every nodal
vector, ordered (real, imaginary).  Line currents are oriented from the
branch's ``from`` bus to its ``to`` bus; nodal injections ``J`` follow the
shunt convention (positive when leaving the bus), so ``-J = Y_B V_b``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np
import scipy.linalg as sla

from . import components as comp
from .algebra import (
    EigPair,
    Frf2,
    PassivityTransform,
    Role,
    T1,
    complex_to_block,
    def_transform,
    hermitian_part,
    transformed_hermitian,
)

log = logging.getLogger(__name__)

__all__ = [
    "NetworkError",
    "SingularInteriorError",
    "Bus",
    "ShuntSpec",
    "NetworkCase",
    "AssembledNetwork",
    "DweResult",
    "SolveResult",
    "EnergyReport",
    "SHUNT_KINDS",
    "build_device",
    "device_frf",
    "augment_incidence",
    "assemble",
    "dwe",
    "solve_injection",
    "source_injection",
    "infer_injections",
    "energy_decomposition",
    "damping_condition",
    "network_resistive_power",
    "block_diag",
    "dwe_eigs_for",
    "complex_to_block_re",
]

RCOND_MIN = 1e-12
SHUNT_KINDS = ("classical_gen", "zip_load", "freq_dep_load", "droop_inverter", "gen_avr", "impedance")


class NetworkError(ValueError):
    pass


class SingularInteriorError(NetworkError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    V: float
    theta: float
    i_mag: float = 0.0
    i_ang: float = 0.0

    @property
    def v_complex(self) -> complex:
        return self.V * complex(math.cos(self.theta), math.sin(self.theta))

    @property
    def i_complex(self) -> complex:
        return self.i_mag * complex(math.cos(self.i_ang), math.sin(self.i_ang))


@dataclass(frozen=True)
class ShuntSpec:
    """A device attached to a bus; ``params`` follows the case-file schema."""

    bus: int
    kind: str
    params: Mapping[str, Any]
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}@{self.bus}"


def build_device(spec: ShuntSpec, bus: Bus):
    """Instantiate the parameter record of a shunt at its bus operating point."""
    p = dict(spec.params)
    k = spec.kind
    if k == "classical_gen":
        return comp.ClassicalGenParams.from_terminal(
            p["M"], p["D"], p["Xdp"], bus.V, bus.theta, p["p"], p["q"]
        )
    if k == "gen_avr":
        return comp.GenAvrParams.from_terminal(
            M=p["M"], D=p["D"], Xd=p["Xd"], Xdp=p["Xdp"], Xq=p["Xq"], Td0p=p["Td0p"],
            Ta=p["Ta"], Ka=p["Ka"], V=bus.V, theta=bus.theta, P=p["p"], Q=p["q"],
        )
    if k == "freq_dep_load":
        return comp.FreqDepLoadParams.at_voltage(
            p["p"], p["q"], bus.V, bus.theta,
            p.get("alpha_p", 0.0), p.get("alpha_q", 0.0),
            p.get("beta_p", 0.0), p.get("beta_q", 0.0),
        )
    if k == "zip_load":
        op = comp.OperatingPoint.from_power(bus.V, bus.theta, p["p"], p["q"])
        qw = p.get("q_weights")
        return comp.ZipLoadParams(
            p["p"], p["q"], op, tuple(p.get("p_weights", (0.0, 0.0, 1.0))),
            tuple(qw) if qw is not None else None,
        )
    if k == "droop_inverter":
        return comp.DroopInverterParams(p["Rc"], p["Lc"], p["Xc"], p["kp"], p["kq"], p["tau"])
    if k == "impedance":
        return comp.ImpedanceParams(p["g"], p["b"])
    raise NetworkError(f"unknown shunt kind {k!r}")


def device_frf(device, Omega: float) -> Frf2:
    if isinstance(device, comp.ClassicalGenParams):
        return comp.classical_generator_frf(device, Omega)
    if isinstance(device, comp.GenAvrParams):
        return comp.gen_avr_frf(device, Omega)
    if isinstance(device, comp.FreqDepLoadParams):
        return comp.freq_dep_load_frf(device, Omega)
    if isinstance(device, comp.ZipLoadParams):
        return comp.zip_load_frf(device, Omega)
    if isinstance(device, comp.DroopInverterParams):
        return comp.droop_inverter_admittance(device, Omega)
    if isinstance(device, comp.ImpedanceParams):
        return comp.impedance_frf(device, Omega)
    raise NetworkError(f"no FRF builder for {type(device).__name__}")


def device_power(spec: ShuntSpec, bus: Bus) -> complex:
    """Steady consumed power of a shunt."""
    p = spec.params
    if spec.kind == "impedance":
        return bus.V**2 * complex(p["g"], -p["b"])
    return complex(p.get("p", 0.0), p.get("q", 0.0))


@dataclass(frozen=True)
class NetworkCase:
    name: str
    base_frequency_hz: float
    buses: tuple[Bus, ...]
    branches: tuple[comp.BranchParams, ...]
    shunts: tuple[ShuntSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "shunts", tuple(self.shunts))
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise NetworkError(f"duplicate bus ids: {dup}")
        known = set(ids)
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in known:
                    raise NetworkError(f"branch {br.label} references unknown bus {end}")
            if br.from_bus == br.to_bus:
                raise NetworkError(f"branch {br.label} is a self-loop")
        for sh in self.shunts:
            if sh.bus not in known:
                raise NetworkError(f"shunt {sh.label} references unknown bus {sh.bus}")
            if sh.kind not in SHUNT_KINDS:
                raise NetworkError(f"shunt {sh.label} has unknown kind {sh.kind!r}")

    @cached_property
    def index_map(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def bus(self, bus_id: int) -> Bus:
        try:
            return self.buses[self.index_map[bus_id]]
        except KeyError:
            raise NetworkError(f"unknown bus {bus_id}") from None

    @cached_property
    def devices(self) -> tuple:
        out = []
        for sh in self.shunts:
            try:
                out.append(build_device(sh, self.bus(sh.bus)))
            except (KeyError, comp.ComponentError) as exc:
                raise NetworkError(f"shunt {sh.label} at bus {sh.bus}: {exc}") from exc
        return tuple(out)

    @cached_property
    def incidence(self) -> np.ndarray:
        e = np.zeros((self.n_branches, self.n_buses))
        for l, br in enumerate(self.branches):
            e[l, self.index_map[br.from_bus]] = 1.0
            e[l, self.index_map[br.to_bus]] = -1.0
        return e

    def static_ybus(self) -> np.ndarray:
        """Scalar complex bus admittance of the branch network (π model with taps)."""
        n = self.n_buses
        y = np.zeros((n, n), dtype=complex)
        for br in self.branches:
            i, j = self.index_map[br.from_bus], self.index_map[br.to_bus]
            tp = comp.two_port_matrix(br)
            y[np.ix_([i, j], [i, j])] += tp
            y[i, i] += 0.5j * br.b_charging
            y[j, j] += 0.5j * br.b_charging
        return y

    def power_balance_residual(self) -> float:
        """Largest per-bus mismatch of the stored operating point (p.u.)."""
        v = np.array([b.v_complex for b in self.buses])
        i_net = self.static_ybus() @ v
        s_dev = np.zeros(self.n_buses, dtype=complex)
        for sh in self.shunts:
            s_dev[self.index_map[sh.bus]] += device_power(sh, self.bus(sh.bus))
        mismatch = v * np.conj(i_net) + s_dev
        return float(np.max(np.abs(mismatch))) if mismatch.size else 0.0

    def check_power_balance(self, tol: float = 1e-6) -> float:
        r = self.power_balance_residual()
        if r > tol:
            log.warning("case %s: operating point power mismatch %.3e exceeds %.1e", self.name, r, tol)
        return r

    def shunt_buses(self) -> list[int]:
        seen: list[int] = []
        for sh in self.shunts:
            if sh.bus not in seen:
                seen.append(sh.bus)
        return [b.id for b in self.buses if b.id in seen]

    def scaled_resistance(self, factor: float, name: str | None = None) -> "NetworkCase":
        """Copy with every series resistance scaled, keeping the reactances."""
        if factor < 0:
            raise NetworkError("resistance scale must be non-negative")
        branches = []
        for br in self.branches:
            z = 1.0 / complex(br.y)
            branches.append(
                comp.BranchParams(
                    br.from_bus, br.to_bus, 1.0 / complex(z.real * factor, z.imag),
                    br.tap, br.b_charging, br.name,
                )
            )
        return NetworkCase(
            name or f"{self.name}-Rx{factor:g}", self.base_frequency_hz,
            self.buses, tuple(branches), self.shunts,
        )


def augment_incidence(E) -> np.ndarray:
    e = np.asarray(E, dtype=float)
    if e.ndim != 2:
        raise NetworkError("incidence must be a 2-D matrix")
    for r, row in enumerate(e):
        vals = sorted(row[row != 0].tolist())
        if vals != [-1.0, 1.0] or not np.all(np.isin(row, (-1.0, 0.0, 1.0))):
            raise NetworkError(f"incidence row {r} must hold exactly one +1 and one -1")
    return np.kron(e, np.eye(2))


def block_diag(blocks) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=complex)
    k = blocks.shape[0]
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    for i in range(k):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = blocks[i]
    return out


@dataclass(frozen=True, eq=False)
class AssembledNetwork:
    case: NetworkCase
    Omega: float
    E_a: np.ndarray
    Y_L: np.ndarray
    Y_S: np.ndarray
    Y_B: np.ndarray
    series_blocks: np.ndarray
    device_blocks: tuple[np.ndarray, ...]
    branch_shunt_blocks: np.ndarray
    index_map: Mapping[int, int] = field(repr=False)

    @property
    def n(self) -> int:
        return self.case.n_buses

    def slot(self, bus_id: int) -> slice:
        k = self.index_map[bus_id]
        return slice(2 * k, 2 * k + 2)

    def shunt_block(self, bus_id: int) -> np.ndarray:
        s = self.slot(bus_id)
        return self.Y_S[s, s]

    def construction_residual(self) -> float:
        ref = self.E_a.T @ self.Y_L @ self.E_a + self.Y_S
        return float(np.max(np.abs(self.Y_B - ref)) / max(1.0, np.max(np.abs(self.Y_B))))

    @cached_property
    def lu(self):
        return sla.lu_factor(self.Y_B, check_finite=False)


def assemble(case: NetworkCase, Omega: float) -> AssembledNetwork:
    if not Omega > 0:
        raise NetworkError("Omega must be positive")
    n, m = case.n_buses, case.n_branches
    im = case.index_map
    series = np.zeros((m, 2, 2), dtype=complex)
    # Per-branch shunt content at (from, to) ends: tap split plus half charging.
    bshunt = np.zeros((m, 2, 2, 2), dtype=complex)
    ys = np.zeros((n, 2, 2), dtype=complex)
    for l, br in enumerate(case.branches):
        s, sf, st = comp.tap_transformer_split(br)
        half = 0.5j * br.b_charging
        series[l] = complex_to_block(s)
        bshunt[l, 0] = complex_to_block(sf + half)
        bshunt[l, 1] = complex_to_block(st + half)
        ys[im[br.from_bus]] += bshunt[l, 0]
        ys[im[br.to_bus]] += bshunt[l, 1]
    dev_blocks = []
    for sh, dev in zip(case.shunts, case.devices):
        try:
            y = device_frf(dev, Omega).entries
        except (comp.ComponentError, np.linalg.LinAlgError) as exc:
            raise NetworkError(f"shunt {sh.label} at bus {sh.bus}: {exc}") from exc
        dev_blocks.append(y)
        ys[im[sh.bus]] += y
    E_a = augment_incidence(case.incidence) if m else np.zeros((0, 2 * n))
    Y_L = block_diag(series) if m else np.zeros((0, 0), dtype=complex)
    Y_S = block_diag(ys)
    Y_B = E_a.T @ Y_L @ E_a + Y_S
    for a in (E_a, Y_L, Y_S, Y_B, series, bshunt):
        a.setflags(write=False)
    return AssembledNetwork(
        case, float(Omega), E_a, Y_L, Y_S, Y_B, series, tuple(dev_blocks), bshunt, dict(im)
    )


@dataclass(frozen=True)
class DweResult:
    Y_N: np.ndarray
    Z_N: np.ndarray | None
    eig: EigPair
    eig_mg: EigPair
    source_bus: int
    Omega: float
    rcond: float

    def frf(self) -> Frf2:
        return Frf2(self.Y_N, self.Omega, Role.ADMITTANCE)


def _rcond(lu_piv, anorm: float) -> float:
    gecon = sla.lapack.get_lapack_funcs("gecon", (lu_piv[0],))
    rc, info = gecon(lu_piv[0], anorm)
    if info != 0:
        raise NetworkError(f"condition estimate failed (info={info})")
    return float(rc)


def _partition(net: AssembledNetwork, source_bus: int):
    if source_bus not in net.index_map:
        raise NetworkError(f"unknown source bus {source_bus}")
    k = net.index_map[source_bus]
    s_idx = np.array([2 * k, 2 * k + 1])
    r_idx = np.array([i for i in range(2 * net.n) if i not in (2 * k, 2 * k + 1)])
    return s_idx, r_idx


def dwe(net: AssembledNetwork, source_bus: int, T: PassivityTransform | None = None) -> DweResult:
    """Kron-reduce onto ``source_bus`` after removing its shunt admittance."""
    s_idx, r_idx = _partition(net, source_bus)
    yb = net.Y_B
    b1 = yb[np.ix_(s_idx, s_idx)] - net.Y_S[np.ix_(s_idx, s_idx)]
    if r_idx.size:
        b2 = yb[np.ix_(s_idx, r_idx)]
        b3 = yb[np.ix_(r_idx, s_idx)]
        b4 = yb[np.ix_(r_idx, r_idx)]
        with warnings.catch_warnings():
            # singularity is reported through the condition estimate below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu_piv = sla.lu_factor(b4, check_finite=False)
        rc = _rcond(lu_piv, float(np.linalg.norm(b4, 1)))
        if rc < RCOND_MIN:
            raise SingularInteriorError(
                f"interior block singular for source bus {source_bus} (rcond={rc:.2e})"
            )
        y_n = b1 - b2 @ sla.lu_solve(lu_piv, b3, check_finite=False)
    else:
        y_n, rc = b1, 1.0
    try:
        z_n = np.linalg.inv(y_n) if np.linalg.cond(y_n) < 1e12 else None
    except np.linalg.LinAlgError:
        z_n = None
    t = T or def_transform(net.Omega)
    return DweResult(
        y_n, z_n, transformed_hermitian(t, y_n, "M"), transformed_hermitian(t, y_n, "MG"),
        source_bus, net.Omega, rc,
    )


@dataclass(frozen=True)
class SolveResult:
    V_b: np.ndarray
    I_l: np.ndarray
    I_s: np.ndarray
    I_I: np.ndarray
    J: np.ndarray
    kcl_residual: float

    def tellegen_residual(self, net: AssembledNetwork) -> float:
        """Relative residual of ``(E_a V)^H I_l + V^H (I_s + J) = 0``."""
        a = (net.E_a @ self.V_b).conj() @ self.I_l
        b = self.V_b.conj() @ (self.I_s + self.J)
        scale = max(abs(a), abs(b), 1e-300)
        return float(abs(a + b) / scale)


def solve_injection(net: AssembledNetwork, J) -> SolveResult:
    j = np.asarray(J, dtype=complex).reshape(-1)
    if j.shape != (2 * net.n,):
        raise NetworkError(f"J must have length {2 * net.n}")
    lu, piv = net.lu
    if np.min(np.abs(np.diag(lu))) == 0 or _rcond(net.lu, float(np.linalg.norm(net.Y_B, 1))) < 1e-15:
        raise NetworkError("Y_B is singular")
    v = -sla.lu_solve(net.lu, j, check_finite=False)
    i_l = net.Y_L @ (net.E_a @ v)
    i_s = net.Y_S @ v
    i_i = net.E_a.T @ i_l
    kcl = float(np.linalg.norm(j + i_s + i_i))
    return SolveResult(v, i_l, i_s, i_i, j, kcl)


def source_injection(net: AssembledNetwork, bus_id: int, current) -> np.ndarray:
    """Nodal injection vector with a 2-vector ``current`` at one bus."""
    j = np.zeros(2 * net.n, dtype=complex)
    j[net.slot(bus_id)] = np.asarray(current, dtype=complex)
    return j


def infer_injections(net: AssembledNetwork, V_b) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(V_b, dtype=complex).reshape(-1)
    if v.shape != (2 * net.n,):
        raise NetworkError(f"V_b must have length {2 * net.n}")
    j = -net.Y_B @ v
    jbar = np.abs(j[0::2]) + np.abs(j[1::2])
    return j, jbar


@dataclass(frozen=True)
class EnergyReport:
    source: float
    shunts: dict[int, float]
    branches: list[float]
    source_bus: int

    @property
    def shunt_total(self) -> float:
        return float(sum(self.shunts.values()))

    @property
    def branch_total(self) -> float:
        return float(sum(self.branches))

    @property
    def residual(self) -> float:
        tot = self.source + self.shunt_total + self.branch_total
        scale = max(abs(self.source), abs(self.shunt_total), abs(self.branch_total), 1e-300)
        return float(abs(tot) / scale)


def _apply_blocks(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return (vec.reshape(-1, 2) @ mat.T).reshape(-1)


def energy_decomposition(
    net: AssembledNetwork, sol: SolveResult, T: PassivityTransform, source_bus: int
) -> EnergyReport:
    """Split the quadratic energy balance into source, shunt and branch groups.

    The source group is the whole primed injection ``J + Y_s,k V_k`` at
    ``source_bus`` together with any other non-zero injections.
    """
    g = T.gamma
    if abs(np.linalg.det(g)) < 1e-14:
        raise NetworkError("transform Gamma is singular")
    ginv = np.linalg.inv(g)
    m = T.M
    u = _apply_blocks(ginv, sol.V_b)
    s = net.slot(source_bus)
    jp = sol.J.copy()
    jp[s] += net.Y_S[s, s] @ sol.V_b[s]
    source = float(np.real(u.conj() @ _apply_blocks(m, jp)))
    shunts: dict[int, float] = {}
    for bus in net.case.buses:
        if bus.id == source_bus:
            continue
        bs = net.slot(bus.id)
        ub = u[bs]
        shunts[bus.id] = float(np.real(ub.conj() @ m @ net.Y_S[bs, bs] @ g @ ub))
    ul = (net.E_a @ u).reshape(-1, 2)
    branches = [
        float(np.real(ul[l].conj() @ m @ net.series_blocks[l] @ g @ ul[l]))
        for l in range(net.case.n_branches)
    ]
    return EnergyReport(source, shunts, branches, source_bus)


def _block_transform(net: AssembledNetwork, T: PassivityTransform, A: np.ndarray) -> np.ndarray:
    n = A.shape[0] // 2
    return T.block_M(n) @ A @ T.block_gamma(n)


def damping_condition(
    net: AssembledNetwork, T: PassivityTransform, source_bus: int
) -> tuple[bool, float]:
    """Positive semidefiniteness of the transformed network without the source shunt."""
    s = net.slot(source_bus)
    ys = np.array(net.Y_S)
    ys[s, s] = 0.0
    h = hermitian_part(_block_transform(net, T, ys + net.E_a.T @ net.Y_L @ net.E_a))
    lam = np.linalg.eigvalsh(h)
    tol = 1e-8 * max(1.0, float(np.linalg.norm(h)))
    return bool(lam[0] >= -tol), float(lam[0])


def network_resistive_power(net: AssembledNetwork, U, T: PassivityTransform) -> float:
    """Quadratic power of the series conductances alone for node vector ``U``."""
    u = np.asarray(U, dtype=complex).reshape(-1)
    ul = (net.E_a @ u).reshape(-1, 2)
    total = 0.0
    for l in range(net.case.n_branches):
        g = complex_to_block_re(net.series_blocks[l])
        total += float(np.real(ul[l].conj() @ T.M @ g @ T.gamma @ ul[l]))
    return total


def complex_to_block_re(block: np.ndarray) -> np.ndarray:
    """Keep only the conductance (T1) content of a series block."""
    return 0.5 * np.trace(block).real * T1


def dwe_eigs_for(case: NetworkCase, bus: int, hz: float) -> EigPair:
    """Convenience: DWE eigenvalues at one bus and frequency in Hz."""
    return dwe(assemble(case, 2 * math.pi * hz), bus).eig

