"""Fast invariant suite used by ``forcedosc selfcheck``.

Each check returns a short detail string and raises ``AssertionError`` on
failure, so a mutated constant shows up under the name of the check it
breaks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra as al
from . import casefile as cf
from . import components as comp
from . import energyflow as ef
from . import network as nw

__all__ = ["CheckResult", "CHECKS", "run_selfcheck"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _require(cond, message: str) -> None:
    if not cond:
        raise AssertionError(message)


def _basis_orthogonality() -> str:
    gram = np.array([[np.sum(a * b) for b in (al.T1, al.T2, al.T3, al.T4)] for a in (al.T1, al.T2, al.T3, al.T4)])
    _require(np.array_equal(gram, 2 * np.eye(4)), "basis Gram matrix is not 2I")
    rng = np.random.default_rng(1)
    y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    err = np.abs(al.reconstruct(al.decompose(y)) - y).max()
    _require(err < 1e-14, f"decompose/reconstruct error {err:.2e}")
    return f"round-trip error {err:.1e}"


def _hermitian_convention() -> str:
    h = al.hermitian_part(al.DEF_M)
    _require(np.allclose(h, 2 * al.DEF_M), "Hermitian part must be A + A^H")
    t = al.def_transform(3.0)
    _require(np.allclose(t.gamma, np.eye(2) / 3.0), "Gamma must equal I / Omega")
    # real T2..T4 and imaginary T1 carry no quadratic power under M
    for y in (al.T2, al.T3, al.T4, 1j * al.T1):
        _require(np.abs(al.hermitian_part(al.DEF_M @ y)).max() < 1e-15, "lossless basis content leaks power")
    return "M Hermitian, Gamma = I/Omega"


def _lossless_ray() -> str:
    rep = al.lossless_ray_search(2000, seed=3)
    _require(rep.holds, f"lossless-ray search failed: {rep}")
    return f"min residual {rep.min_residual:.3f} over {rep.samples} draws"


def _conservation() -> str:
    case = cf.load_fixture("three_bus")
    omega = 2 * math.pi * 1.3
    net = nw.assemble(case, omega)
    t = al.def_transform(omega)
    worst = 0.0
    for b in case.buses:
        sol = nw.solve_injection(net, nw.source_injection(net, b.id, [1.0, 0.4j]))
        tel = sol.tellegen_residual(net)
        rep = nw.energy_decomposition(net, sol, t, b.id)
        worst = max(worst, tel, rep.residual, net.construction_residual())
    _require(worst <= 1e-9, f"conservation residual {worst:.2e}")
    return f"worst residual {worst:.1e}"


def _inverse_definiteness() -> str:
    rng = np.random.default_rng(5)
    t = al.def_transform(2.0)
    for _ in range(300):
        y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = al.transformed_hermitian(t, y).definiteness
        b = al.transformed_hermitian(t, np.linalg.inv(y)).definiteness
        _require(a == b, f"inverse changed the definiteness class: {a.value} vs {b.value}")
    return "300 random admittances"


def _k_transform_equivalence() -> str:
    p = comp.GenAvrParams.from_terminal(
        M=0.1, D=0.2, Xd=1.8, Xdp=0.3, Xq=1.7, Td0p=6.0, Ta=0.1, Ka=30.0, V=1.0, theta=0.0, P=0.0, Q=0.0
    )
    op = comp.OperatingPoint(1.0, 0.0, 0.0, 0.0)
    for hz in np.linspace(0.05, 3.0, 20):
        w = 2 * math.pi * hz
        h = comp.gen_avr_polar_frf(p, w)
        k = ef.k_transform_eigs(h, 1.0)
        d = al.transformed_hermitian(al.def_transform(w), comp.polar_power_to_current_frf(h, op))
        _require(k.definiteness == d.definiteness, f"verdicts differ at {hz:.2f} Hz")
    return "20 frequencies agree"


def _load_closed_form() -> str:
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        op = comp.OperatingPoint.from_power(rng.uniform(0.9, 1.1), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 2), rng.uniform(-0.5, 0.5))
        p = comp.FreqDepLoadParams(op.power.real, op.power.imag, op.V, 0.0, 0.0, rng.uniform(0, 2), rng.uniform(0, 2), op)
        w = 2 * math.pi * rng.uniform(0.1, 3)
        y = comp.freq_dep_load_frf(p, w)
        got = np.array(al.transformed_hermitian(al.def_transform(w), y).as_tuple())
        ref = np.sort(comp.freq_load_eigs_closed_form(p.beta_p, p.beta_q, op.V, op.I, op.theta - op.phi))
        worst = max(worst, float(np.abs(got - ref).max() / max(1.0, np.abs(ref).max())))
    _require(worst < 1e-10, f"closed-form load eigenvalues off by {worst:.2e}")
    return f"max relative error {worst:.1e}"


CHECKS: dict[str, Callable[[], str]] = {
    "basis_orthogonality": _basis_orthogonality,
    "hermitian_convention": _hermitian_convention,
    "lossless_ray": _lossless_ray,
    "conservation_three_bus": _conservation,
    "inverse_definiteness": _inverse_definiteness,
    "k_transform_equivalence": _k_transform_equivalence,
    "load_closed_form": _load_closed_form,
}


def run_selfcheck(checks: dict[str, Callable[[], str]] | None = None) -> list[CheckResult]:
    out = []
    for name, fn in (checks or CHECKS).items():
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except AssertionError as exc:
            detail, ok = str(exc), False
        except Exception as exc:  # noqa: BLE001 - report, never crash the suite
            detail, ok = f"{type(exc).__name__}: {exc}", False
        out.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return out
