"""Frequency-response builders for the device models.

All admittances returned here map rectangular voltage perturbation phasors
``(V_r, V_i)`` to the perturbation of the current flowing *from the network
into the device* (equivalently, shunt current to ground).  Polar-power
FRFs map ``(theta, V)`` perturbations to the consumed ``(P, Q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import T4, Frf2, Role, complex_to_block

__all__ = [
    "ComponentError",
    "ResonanceError",
    "UnstableModelError",
    "EquilibriumError",
    "OperatingPoint",
    "StateSpaceModel",
    "ClassicalGenParams",
    "ZipLoadParams",
    "FreqDepLoadParams",
    "DroopInverterParams",
    "GenAvrParams",
    "ImpedanceParams",
    "BranchParams",
    "frf_from_state_space",
    "classical_generator_ss",
    "classical_generator_frf",
    "t_delta",
    "zip_load_frf",
    "freq_dep_load_frf",
    "freq_load_eigs_closed_form",
    "droop_inverter_impedance",
    "droop_inverter_admittance",
    "droop_hermitian_closed_form",
    "gen_avr_state_space",
    "gen_avr_frf",
    "gen_avr_polar_frf",
    "avr_gain_bound",
    "q_channel_indicator",
    "impedance_frf",
    "tap_transformer_split",
    "two_port_matrix",
    "polar_power_to_current_frf",
    "polar_to_rect_T1",
    "current_polar_to_rect_T1",
    "A_I",
    "A_V",
    "I_J",
    "POLAR_SWAP",
]

#: Swaps (V, theta) ordering to (theta, V) and back.
POLAR_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
#: Frequency-channel rotation; the ``j`` converts a phase perturbation into
#: a per-unit frequency perturbation.
I_J = np.diag([1.0, 1j])


class ComponentError(ValueError):
    """Raised when a device FRF cannot be evaluated."""


class ResonanceError(ComponentError):
    pass


class UnstableModelError(ComponentError):
    pass


class EquilibriumError(ComponentError):
    pass


@dataclass(frozen=True)
class OperatingPoint:
    """Steady-state terminal voltage and device current (network into device)."""

    V: float
    theta: float
    I: float
    phi: float

    def __post_init__(self) -> None:
        if not self.V > 0:
            raise ComponentError(f"steady-state voltage must be positive, got {self.V!r}")
        if self.I < 0:
            raise ComponentError("current magnitude must be non-negative")

    @classmethod
    def from_power(cls, V: float, theta: float, P: float, Q: float) -> "OperatingPoint":
        """Build from consumed power ``P + jQ = V conj(I)``."""
        if not V > 0:
            raise ComponentError(f"steady-state voltage must be positive, got {V!r}")
        i = np.conj((P + 1j * Q) / (V * np.exp(1j * theta)))
        return cls(float(V), float(theta), float(abs(i)), float(np.angle(i)) if abs(i) > 0 else 0.0)

    @property
    def v_complex(self) -> complex:
        return self.V * complex(math.cos(self.theta), math.sin(self.theta))

    @property
    def i_complex(self) -> complex:
        return self.I * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def power(self) -> complex:
        return self.v_complex * self.i_complex.conjugate()


def A_I(op: OperatingPoint) -> np.ndarray:
    i = op.i_complex
    return np.array([[i.real, i.imag], [-i.imag, i.real]])


def A_V(op: OperatingPoint) -> np.ndarray:
    v = op.v_complex
    return np.array([[v.real, v.imag], [v.imag, -v.real]])


def polar_to_rect_T1(V: float, theta: float) -> np.ndarray:
    """Map ``(dV, dtheta)`` to ``(dV_r, dV_i)``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -V * s], [s, V * c]])


def current_polar_to_rect_T1(I: float, phi: float) -> np.ndarray:
    """Map ``(dI, dphi)`` to ``(dI_r, dI_i)``."""
    return polar_to_rect_T1(I, phi)


# ---------------------------------------------------------------------------
# State space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.A, dtype=float)) if np.size(self.A) else np.zeros((0, 0))
        n = a.shape[0]
        b = np.asarray(self.B, dtype=float).reshape(n, 2)
        c = np.asarray(self.C, dtype=float).reshape(2, n)
        d = np.asarray(self.D, dtype=float).reshape(2, 2)
        if a.shape != (n, n):
            raise ComponentError(f"A must be square, got {a.shape}")
        for name, m in (("A", a), ("B", b), ("C", c), ("D", d)):
            if not np.all(np.isfinite(m)):
                raise ComponentError(f"{name} has non-finite entries")
            m.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "D", d)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def is_hurwitz(self) -> bool:
        if self.n_states == 0:
            return True
        return bool(np.max(np.linalg.eigvals(self.A).real) < 0)


def frf_from_state_space(
    ss: StateSpaceModel, Omega: float, *, require_stable: bool = True
) -> Frf2:
    """``C (jΩI - A)^{-1} B + D`` as an admittance FRF."""
    if Omega < 0:
        raise ComponentError("Omega must be non-negative")
    if require_stable and not ss.is_hurwitz():
        raise UnstableModelError("state matrix is not Hurwitz")
    n = ss.n_states
    if n == 0:
        return Frf2(ss.D.astype(complex), Omega)
    lhs = 1j * Omega * np.eye(n) - ss.A
    if np.linalg.cond(lhs) > 1e13:
        raise ResonanceError(f"jΩI - A is singular at Omega={Omega:.6g} rad/s")
    return Frf2(ss.C @ np.linalg.solve(lhs, ss.B) + ss.D, Omega)


# ---------------------------------------------------------------------------
# Classical generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalGenParams:
    """Swing-equation machine behind a transient reactance.

    ``phi`` defaults to ``delta - theta`` when a terminal angle is given.
    """

    M: float
    D: float
    Xdp: float
    Ep: float
    Vt: float
    delta: float
    phi: float

    def __post_init__(self) -> None:
        if not (self.M > 0 and self.Xdp > 0 and self.Ep > 0 and self.Vt > 0):
            raise ComponentError("classical generator needs M, Xdp, Ep, Vt > 0")

    @classmethod
    def from_terminal(
        cls, M: float, D: float, Xdp: float, V: float, theta: float, P: float, Q: float
    ) -> "ClassicalGenParams":
        """Equilibrium from terminal voltage and consumed power (negative for generation)."""
        i_out = -np.conj((P + 1j * Q) / (V * np.exp(1j * theta)))
        e = V * np.exp(1j * theta) + 1j * Xdp * i_out
        delta = float(np.angle(e))
        return cls(M, D, Xdp, float(abs(e)), V, delta, delta - theta)

    @property
    def K(self) -> float:
        return self.Ep * self.Vt * math.cos(self.phi) / self.Xdp

    @property
    def resonance(self) -> float:
        """Electromechanical resonance (rad/s); nan if the synchronising torque is non-positive."""
        return math.sqrt(self.K / self.M) if self.K > 0 else float("nan")

    def gamma(self, Omega: float) -> complex:
        den = self.K - self.M * Omega**2 + 1j * Omega * self.D
        if abs(den) < 1e-14 * max(1.0, abs(self.K)):
            raise ResonanceError(f"undamped resonance at Omega={Omega:.6g} rad/s")
        return (self.Ep**2 / self.Xdp**2) / den


def t_delta(delta: float) -> np.ndarray:
    c, s = math.cos(delta), math.sin(delta)
    return np.array([[c * s, -c * c], [s * s, -s * c]])


def classical_generator_frf(p: ClassicalGenParams, Omega: float) -> Frf2:
    if not Omega > 0:
        raise ComponentError("Omega must be positive")
    tx = -(1.0 / p.Xdp) * T4
    return Frf2(p.gamma(Omega) * t_delta(p.delta) + tx, Omega)


def classical_generator_ss(p: ClassicalGenParams) -> StateSpaceModel:
    """States ``(delta, omega)``; inputs ``(V_r, V_i)``; current into the machine."""
    c, s = math.cos(p.delta), math.sin(p.delta)
    g = p.Ep / p.Xdp
    A = np.array([[0.0, 1.0], [-p.K / p.M, -p.D / p.M]])
    B = np.array([[0.0, 0.0], [-g * s / p.M, g * c / p.M]])
    C = np.array([[-g * c, 0.0], [-g * s, 0.0]])
    return StateSpaceModel(A, B, C, -(1.0 / p.Xdp) * T4)


# ---------------------------------------------------------------------------
# Loads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreqDepLoadParams:
    """Exponential voltage/frequency load ``P0 (V/V0)^ap (w/w0)^bp``."""

    P0: float
    Q0: float
    V0: float
    alpha_p: float
    alpha_q: float
    beta_p: float
    beta_q: float
    op: OperatingPoint

    def __post_init__(self) -> None:
        if not self.V0 > 0:
            raise ComponentError("V0 must be positive")
        r = self.op.V / self.V0
        expect = self.P0 * r**self.alpha_p + 1j * self.Q0 * r**self.alpha_q
        got = self.op.power
        if abs(got - expect) > 1e-6 * max(1.0, abs(expect)):
            raise ComponentError(
                f"operating point power {got:.6g} inconsistent with load law {expect:.6g}"
            )

    @classmethod
    def at_voltage(
        cls, P0, Q0, V, theta, alpha_p=0.0, alpha_q=0.0, beta_p=0.0, beta_q=0.0
    ) -> "FreqDepLoadParams":
        op = OperatingPoint.from_power(V, theta, P0, Q0)
        return cls(P0, Q0, V, alpha_p, alpha_q, beta_p, beta_q, op)

    @property
    def Y_a(self) -> np.ndarray:
        """Maps ``(dV, d(omega))`` to ``(dP, dQ)``."""
        r = self.op.V / self.V0
        p = self.P0 * r**self.alpha_p
        q = self.Q0 * r**self.alpha_q
        return np.array(
            [
                [self.alpha_p * p / self.op.V, self.beta_p * p],
                [self.alpha_q * q / self.op.V, self.beta_q * q],
            ]
        )

    def polar_frf(self, Omega: float) -> Frf2:
        """Consumed ``(P, Q)`` response to ``(theta, V)``."""
        return Frf2(self.Y_a @ I_J @ POLAR_SWAP, Omega, Role.POLAR_POWER)


def _av_inverse(op: OperatingPoint) -> np.ndarray:
    av = A_V(op)
    if abs(np.linalg.det(av)) < 1e-14:
        raise ComponentError("A_V is singular (zero steady-state voltage)")
    return np.linalg.inv(av)


def freq_dep_load_frf(p: FreqDepLoadParams, Omega: float) -> Frf2:
    op = p.op
    t1_inv = np.linalg.inv(polar_to_rect_T1(op.V, op.theta))
    y = _av_inverse(op) @ (p.Y_a @ I_J @ t1_inv - A_I(op))
    return Frf2(y, Omega)


def freq_load_eigs_closed_form(
    beta_p: float, beta_q: float, V: float, I: float, varphi: float
) -> tuple[float, float]:
    """Transformed eigenvalues of a frequency-only load (voltage exponents zero).

    ``varphi`` is the voltage angle minus the current angle.
    """
    c, s = math.cos(varphi), math.sin(varphi)
    root = math.sqrt((beta_p * c) ** 2 + (beta_q * s) ** 2)
    k = I / V
    return (k * (beta_p * c - root), k * (beta_p * c + root))


@dataclass(frozen=True)
class ZipLoadParams:
    """ZIP mixture; weights are fractions of nominal power for (Z, I, P) parts."""

    P0: float
    Q0: float
    op: OperatingPoint
    p_weights: tuple[float, float, float] = (0.0, 0.0, 1.0)
    q_weights: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        for w in (self.p_weights, self.q_weights):
            if w is None:
                continue
            if len(w) != 3 or abs(sum(w) - 1.0) > 1e-9:
                raise ComponentError(f"ZIP weights must be three fractions summing to 1, got {w}")

    @property
    def alpha_p(self) -> float:
        wz, wi, _ = self.p_weights
        return 2.0 * wz + wi

    @property
    def alpha_q(self) -> float:
        wz, wi, _ = self.q_weights or self.p_weights
        return 2.0 * wz + wi

    def as_freq_dep(self) -> FreqDepLoadParams:
        # Exponential equivalent of the ZIP sensitivity at the operating voltage.
        return FreqDepLoadParams(
            self.P0, self.Q0, self.op.V, self.alpha_p, self.alpha_q, 0.0, 0.0, self.op
        )


def zip_load_frf(p: ZipLoadParams, Omega: float) -> Frf2:
    return freq_dep_load_frf(p.as_freq_dep(), Omega)


@dataclass(frozen=True)
class ImpedanceParams:
    """Constant shunt admittance ``g + jb``."""

    g: float
    b: float


def impedance_frf(p: ImpedanceParams, Omega: float) -> Frf2:
    return Frf2(complex_to_block(complex(p.g, p.b)), Omega)


# ---------------------------------------------------------------------------
# Droop inverter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DroopInverterParams:
    Rc: float
    Lc: float
    Xc: float
    kp: float
    kq: float
    tau: float

    def __post_init__(self) -> None:
        # Zero gains are allowed: the coupling circuit alone, droop disabled.
        if not (self.tau > 0 and self.kp >= 0 and self.kq >= 0 and self.Rc >= 0):
            raise ComponentError("droop inverter needs tau > 0 and kp, kq, Rc >= 0")


def droop_inverter_impedance(p: DroopInverterParams, Omega: float) -> Frf2:
    if not Omega > 0:
        raise ComponentError("Omega must be positive")
    w = Omega
    diag = p.Rc + 1j * w * p.Lc
    z12 = -p.Xc - p.kq / (1 + 1j * p.tau * w)
    z21 = p.Xc - p.kp / (p.tau * w**2 - 1j * w)
    return Frf2(np.array([[diag, z12], [z21, diag]]), Omega, Role.IMPEDANCE)


def droop_inverter_admittance(p: DroopInverterParams, Omega: float) -> Frf2:
    z = droop_inverter_impedance(p, Omega)
    det = np.linalg.det(z.entries)
    if abs(det) < 1e-14:
        raise ComponentError(f"droop impedance singular (det={det:.3e})")
    return z.inverse()


def droop_hermitian_closed_form(p: DroopInverterParams, Omega: float) -> np.ndarray:
    """Closed form of ``MZ + (MZ)^H`` under the DEF weighting."""
    tw = p.tau * Omega
    return 2.0 * np.array(
        [
            [p.kp / (Omega * (tw**2 + 1)), 1j * p.Rc],
            [-1j * p.Rc, p.kq * tw / (tw**2 + 1)],
        ]
    )


# ---------------------------------------------------------------------------
# Third-order generator with first-order AVR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenAvrParams:
    """Third-order machine with a first-order voltage regulator.

    The operating point fields describe an equilibrium; build them with
    :meth:`from_terminal` unless they are already known.
    """

    M: float
    D: float
    Xd: float
    Xdp: float
    Xq: float
    Td0p: float
    Ta: float
    Ka: float
    Vref: float
    V: float
    theta: float
    delta: float
    eqp: float
    Ef: float
    Pm: float

    def __post_init__(self) -> None:
        if not (self.Xd > self.Xdp > 0):
            raise ComponentError("need Xd > Xdp > 0")
        if not (self.Td0p > 0 and self.Ta > 0 and self.Ka >= 0 and self.Xq > 0 and self.M > 0):
            raise ComponentError("need Td0p, Ta, Xq, M > 0 and Ka >= 0")

    @classmethod
    def from_terminal(
        cls,
        *,
        M: float,
        D: float,
        Xd: float,
        Xdp: float,
        Xq: float,
        Td0p: float,
        Ta: float,
        Ka: float,
        V: float,
        theta: float,
        P: float,
        Q: float,
    ) -> "GenAvrParams":
        """Equilibrium from terminal voltage and consumed power (negative when generating)."""
        v = V * np.exp(1j * theta)
        i_out = -np.conj((P + 1j * Q) / v)
        delta = float(np.angle(v + 1j * Xq * i_out))
        s, c = math.sin(delta), math.cos(delta)
        vd = v.real * s - v.imag * c
        vq = v.real * c + v.imag * s
        i_d = i_out.real * s - i_out.imag * c
        i_q = i_out.real * c + i_out.imag * s
        eqp = vq + Xdp * i_d
        ef = eqp + (Xd - Xdp) * i_d
        vref = V + ef / Ka if Ka > 0 else V
        pm = vd * i_d + vq * i_q
        return cls(M, D, Xd, Xdp, Xq, Td0p, Ta, Ka, vref, V, theta, delta, eqp, ef, pm)

    def with_changes(self, **kw) -> "GenAvrParams":
        """Re-solve the equilibrium after changing machine parameters."""
        base = dict(
            M=self.M, D=self.D, Xd=self.Xd, Xdp=self.Xdp, Xq=self.Xq, Td0p=self.Td0p,
            Ta=self.Ta, Ka=self.Ka, V=self.V, theta=self.theta,
        )
        p, q = self.consumed_power()
        base.update(P=p, Q=q)
        base.update(kw)
        return GenAvrParams.from_terminal(**base)

    def _terminal(self, delta, eqp, vr, vi):
        s, c = math.sin(delta), math.cos(delta)
        vd = vr * s - vi * c
        vq = vr * c + vi * s
        i_d = (eqp - vq) / self.Xdp
        i_q = vd / self.Xq
        return s, c, vd, vq, i_d, i_q

    def consumed_power(self) -> tuple[float, float]:
        v = self.V * np.exp(1j * self.theta)
        i_in = self.current_in(self.delta, self.eqp, v.real, v.imag)
        s = v * np.conj(i_in)
        return float(s.real), float(s.imag)

    def current_in(self, delta, eqp, vr, vi) -> complex:
        s, c, _, _, i_d, i_q = self._terminal(delta, eqp, vr, vi)
        return -complex(i_q * c + i_d * s, i_q * s - i_d * c)

    def rhs(self, x, u) -> np.ndarray:
        """Nonlinear state derivatives for states ``(delta, w, eqp, Ef)``."""
        delta, w, eqp, ef = x
        vr, vi = u
        _, _, vd, vq, i_d, i_q = self._terminal(delta, eqp, vr, vi)
        pe = vd * i_d + vq * i_q
        vmag = math.hypot(vr, vi)
        return np.array(
            [
                w,
                (self.Pm - pe - self.D * w) / self.M,
                (ef - (self.Xd - self.Xdp) * i_d - eqp) / self.Td0p,
                (self.Ka * (self.Vref - vmag) - ef) / self.Ta,
            ]
        )

    def output(self, x, u) -> np.ndarray:
        ii = self.current_in(x[0], x[2], u[0], u[1])
        return np.array([ii.real, ii.imag])

    @property
    def x0(self) -> np.ndarray:
        return np.array([self.delta, 0.0, self.eqp, self.Ef])

    @property
    def u0(self) -> np.ndarray:
        return np.array([self.V * math.cos(self.theta), self.V * math.sin(self.theta)])

    def equilibrium_residual(self) -> float:
        r = self.rhs(self.x0, self.u0)
        if self.Ka == 0:
            # Field voltage is frozen when the regulator is switched off.
            r = r[:3]
        return float(np.max(np.abs(r)))


def gen_avr_state_space(p: GenAvrParams) -> StateSpaceModel:
    """Hand-derived linearisation; current output is network-into-machine."""
    vr, vi = p.u0
    s, c, vd, vq, i_d, i_q = p._terminal(p.delta, p.eqp, vr, vi)
    xdp, xq = p.Xdp, p.Xq
    dxd = p.Xd - p.Xdp
    vmag = math.hypot(vr, vi)

    # Partials of (vd, vq) with respect to (delta, Vr, Vi).
    vd_x = np.array([vq, s, -c])
    vq_x = np.array([-vd, c, s])
    id_x = -vq_x / xdp
    iq_x = vd_x / xq
    id_e = 1.0 / xdp
    pe_x = vd_x * i_d + vd * id_x + vq_x * i_q + vq * iq_x
    pe_e = vd * id_e

    # Output current (out of the machine) partials.
    ir_x = iq_x * c + id_x * s
    ii_x = iq_x * s - id_x * c
    ir_x[0] += -i_q * s + i_d * c
    ii_x[0] += i_q * c + i_d * s
    ir_e = id_e * s
    ii_e = -id_e * c

    A = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-pe_x[0] / p.M, -p.D / p.M, -pe_e / p.M, 0.0],
            [-dxd * id_x[0] / p.Td0p, 0.0, (-dxd * id_e - 1.0) / p.Td0p, 1.0 / p.Td0p],
            [0.0, 0.0, 0.0, -1.0 / p.Ta],
        ]
    )
    B = np.array(
        [
            [0.0, 0.0],
            -pe_x[1:] / p.M,
            -dxd * id_x[1:] / p.Td0p,
            -p.Ka * np.array([vr, vi]) / (vmag * p.Ta),
        ]
    )
    C = -np.array([[ir_x[0], 0.0, ir_e, 0.0], [ii_x[0], 0.0, ii_e, 0.0]])
    D = -np.array([ir_x[1:], ii_x[1:]])
    return StateSpaceModel(A, B, C, D)


def gen_avr_frf(p: GenAvrParams, Omega: float, *, require_stable: bool = True) -> Frf2:
    res = p.equilibrium_residual()
    if res > 1e-8:
        raise EquilibriumError(f"operating point is not an equilibrium (residual {res:.3e})")
    return frf_from_state_space(gen_avr_state_space(p), Omega, require_stable=require_stable)


def gen_avr_polar_frf(p: GenAvrParams, Omega: float) -> Frf2:
    """Diagonal polar-power FRF at the unloaded equilibrium (unit terminal voltage)."""
    w = Omega
    h11 = w * (1j * p.M * w + p.D) / (p.D * p.Xq * w + 1j * (p.M * p.Xq * w**2 - 1))
    num = p.Ka + 1 - w**2 * p.Ta * p.Td0p + 1j * w * (p.Ta + p.Td0p)
    den = (w * p.Ta - 1j) * (1j * p.Xd - w * p.Td0p * p.Xdp)
    return Frf2(np.diag([h11, num / den]), Omega, Role.POLAR_POWER)


def q_channel_indicator(p: GenAvrParams, Omega: float) -> float:
    """Non-negative exactly when the unloaded Q-V channel is passive at ``Omega``."""
    return (p.Td0p * Omega**2 * p.Ta**2 + p.Td0p) * (p.Xd - p.Xdp) - p.Ka * (
        p.Td0p * p.Xdp + p.Xd * p.Ta
    )


def avr_gain_bound(p: GenAvrParams) -> float:
    den = p.Td0p * p.Xdp + p.Xd * p.Ta
    if not den > 0:
        raise ComponentError("gain bound denominator must be positive")
    return p.Td0p * (p.Xd - p.Xdp) / den


# ---------------------------------------------------------------------------
# Branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchParams:
    from_bus: int
    to_bus: int
    y: complex
    tap: float = 1.0
    b_charging: float = 0.0
    name: str = field(default="")

    def __post_init__(self) -> None:
        if self.tap == 0:
            raise ComponentError(f"branch {self.label}: zero tap ratio")
        if complex(self.y).real < 0:
            raise ComponentError(f"branch {self.label}: negative series conductance")

    @property
    def label(self) -> str:
        return self.name or f"{self.from_bus}-{self.to_bus}"


def tap_transformer_split(b: BranchParams) -> tuple[complex, complex, complex]:
    """Series, from-side shunt and to-side shunt of an off-nominal tap (tap on the from side)."""
    if b.tap == 0:
        raise ComponentError("zero tap ratio")
    y, c = complex(b.y), float(b.tap)
    return y / c, y * (1 - c) / c**2, y * (c - 1) / c


def two_port_matrix(b: BranchParams) -> np.ndarray:
    """Scalar two-port admittance ``[[y/c², -y/c], [-y/c, y]]``."""
    y, c = complex(b.y), float(b.tap)
    return np.array([[y / c**2, -y / c], [-y / c, y]])


def polar_power_to_current_frf(H: Frf2, op: OperatingPoint) -> Frf2:
    """Convert a consumed-power response to ``(theta, V)`` into a current admittance."""
    if H.role is not Role.POLAR_POWER:
        raise ValueError(f"expected a polar-power FRF, got role {H.role.value}")
    t1_inv = np.linalg.inv(polar_to_rect_T1(op.V, op.theta))
    y = _av_inverse(op) @ (H.entries @ POLAR_SWAP @ t1_inv - A_I(op))
    return Frf2(y, H.omega)

