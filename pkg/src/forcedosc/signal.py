"""Measurement-side pipeline: synthetic PMU channels, phasor extraction,
polar to effective-rectangular transforms, the time-domain dissipating
energy integral, and classical-generator inference from one phasor pair.

Phasors use the peak-amplitude convention ``x(t) = dc + Re{x e^{jΩt}}``
with ``t`` measured from the first sample of the series.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares

from .components import OperatingPoint
from .algebra import T1 as T_1, T2, T3, T4, Frf2, PassivityTransform, def_transform

__all__ = [
    "CHANNELS",
    "SignalError",
    "InferenceError",
    "UnderdeterminedError",
    "TimeSeries",
    "PhasorSet",
    "PolarRectTransform",
    "synthesize",
    "fft_extract",
    "extract_phasors",
    "steady_value",
    "effective_rect_phasors",
    "dissipating_power",
    "wde_time_integral",
    "wde_frequency_domain",
    "ClassicalGenFit",
    "infer_classical_gen",
    "infer_admittance",
    "classical_coefficients_to_frf",
    "write_csv",
    "read_csv",
]

CHANNELS = ("Vr", "Vi", "Ir", "Ii", "Vmag", "Vang", "Imag", "Iang", "P", "Q", "freq")


class SignalError(ValueError):
    pass


class InferenceError(ValueError):
    pass


class UnderdeterminedError(InferenceError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    dt: float
    t0: float
    samples: np.ndarray
    channel: str

    def __post_init__(self) -> None:
        x = np.asarray(self.samples, dtype=float).reshape(-1)
        if not self.dt > 0:
            raise SignalError("dt must be positive")
        if x.size < 2:
            raise SignalError("a time series needs at least two samples")
        if self.channel not in CHANNELS:
            raise SignalError(f"unknown channel {self.channel!r}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class PhasorSet:
    phasors: Mapping[str, complex]
    Omega_d: float
    dc: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.Omega_d > 0:
            raise SignalError("Omega_d must be positive")
        for ch in self.phasors:
            if ch not in CHANNELS:
                raise SignalError(f"unknown channel {ch!r}")

    def __getitem__(self, ch: str) -> complex:
        return self.phasors[ch]


def synthesize(
    phasors: PhasorSet,
    duration: float,
    dt: float,
    noise_std: float = 0.0,
    seed: int | None = None,
    *,
    t0: float = 0.0,
) -> dict[str, TimeSeries]:
    """Sample every channel of ``phasors`` with optional white Gaussian noise."""
    if not (dt > 0 and duration > 0):
        raise SignalError("dt and duration must be positive")
    w = phasors.Omega_d
    if duration * w / (2 * math.pi) < 2 - 1e-9:
        raise SignalError("duration must cover at least two forcing cycles")
    n = int(round(duration / dt))
    t = t0 + dt * np.arange(n)
    rng = np.random.default_rng(seed)
    e = np.exp(1j * w * t)
    out = {}
    for ch, x in phasors.phasors.items():
        sig = phasors.dc.get(ch, 0.0) + np.real(complex(x) * e)
        if noise_std:
            sig = sig + rng.normal(0.0, noise_std, n)
        out[ch] = TimeSeries(dt, t0, sig, ch)
    return out


def _window(ts: TimeSeries, Omega_d: float) -> int:
    period = 2 * math.pi / Omega_d
    cycles = math.floor(len(ts) * ts.dt / period + 1e-9)
    if cycles < 2:
        raise SignalError(
            f"{ts.channel}: only {len(ts) * ts.dt / period:.2f} cycles available, need at least 2"
        )
    return int(round(cycles * period / ts.dt))


def _tone_fit(ts: TimeSeries, Omega_d: float) -> tuple[float, float, complex]:
    """Joint least-squares offset, ramp and tone over the whole-cycle window."""
    n = _window(ts, Omega_d)
    tt = ts.dt * np.arange(n)
    basis = np.column_stack([np.ones(n), tt, np.cos(Omega_d * tt), np.sin(Omega_d * tt)])
    coef, *_ = np.linalg.lstsq(basis, ts.samples[:n], rcond=None)
    return float(coef[0]), float(coef[1]), complex(coef[2], -coef[3])


def fft_extract(ts: TimeSeries, Omega_d: float, *, detrend: str = "mean") -> complex:
    """Peak-amplitude phasor at ``Omega_d`` over the largest whole-cycle window.

    ``detrend="mean"`` removes the window mean before projecting.
    ``detrend="linear"`` fits an offset, a ramp and the tone jointly, which
    keeps a slow angle drift out of the phasor.
    """
    if not Omega_d > 0:
        raise SignalError("Omega_d must be positive")
    if detrend == "linear":
        return _tone_fit(ts, Omega_d)[2]
    if detrend != "mean":
        raise SignalError(f"unknown detrend mode {detrend!r}")
    n = _window(ts, Omega_d)
    x = ts.samples[:n] - ts.samples[:n].mean()
    tt = ts.dt * np.arange(n)
    return complex(2.0 / n * np.sum(x * np.exp(-1j * Omega_d * tt)))


def steady_value(ts: TimeSeries, Omega_d: float) -> float:
    """Operating-point value of a channel: the fitted offset at the window start."""
    return _tone_fit(ts, Omega_d)[0]


def extract_phasors(
    channels: Mapping[str, TimeSeries], Omega_d: float, *, detrend: Mapping[str, str] | None = None
) -> PhasorSet:
    detrend = detrend or {}
    ph = {ch: fft_extract(ts, Omega_d, detrend=detrend.get(ch, "mean")) for ch, ts in channels.items()}
    dc = {ch: steady_value(ts, Omega_d) for ch, ts in channels.items()}
    return PhasorSet(ph, Omega_d, dc)


@dataclass(frozen=True)
class PolarRectTransform:
    """Steady magnitudes and reference angles of a voltage/current pair."""

    V: float
    theta: float
    I: float
    phi: float

    def __post_init__(self) -> None:
        if not self.V > 0:
            raise SignalError("zero steady-state voltage magnitude")
        if not self.I > 0:
            raise SignalError("zero steady-state current magnitude")

    @classmethod
    def from_series(cls, vmag: TimeSeries, vang: TimeSeries, imag: TimeSeries, iang: TimeSeries, Omega_d: float):
        """Steady values from the fitted channel offsets."""
        return cls(*(steady_value(ts, Omega_d) for ts in (vmag, vang, imag, iang)))

    @property
    def T1(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -self.V * s], [s, self.V * c]])

    @property
    def T1i(self) -> np.ndarray:
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([[c, -self.I * s], [s, self.I * c]])


def effective_rect_phasors(Vp, Ip, T: PolarRectTransform) -> tuple[np.ndarray, np.ndarray]:
    """Map ``(mag, angle)`` phasor pairs to effective rectangular phasors."""
    return T.T1 @ np.asarray(Vp, dtype=complex), T.T1i @ np.asarray(Ip, dtype=complex)


def dissipating_power(V, I, T: PassivityTransform | None = None, Omega_d: float | None = None) -> float:
    """``Re{V^H M I}`` for rectangular voltage and current phasors."""
    if T is None:
        if Omega_d is None:
            raise ValueError("pass a transform or Omega_d")
        T = def_transform(Omega_d)
    v = np.asarray(V, dtype=complex)
    i = np.asarray(I, dtype=complex)
    return float(np.real(v.conj() @ T.M @ i))


def wde_time_integral(P: TimeSeries, Q: TimeSeries, theta: TimeSeries, V: TimeSeries, V0: float) -> float:
    """Trapezoidal ``∫ (P dθ/dt + Q dV/dt / V0) dt`` with centred differences."""
    series = (P, Q, theta, V)
    n = len(P)
    for s in series:
        if len(s) != n or abs(s.dt - P.dt) > 1e-12 * P.dt or abs(s.t0 - P.t0) > 1e-12 * max(1.0, P.dt):
            raise SignalError("channels are not aligned")
    if not V0 > 0:
        raise SignalError("V0 must be positive")
    dth = np.gradient(theta.samples, P.dt)
    dv = np.gradient(V.samples, P.dt)
    return float(np.trapezoid(P.samples * dth + Q.samples * dv / V0, dx=P.dt))


def wde_frequency_domain(theta_ph: complex, v_ph: complex, p_ph: complex, q_ph: complex, V0: float, Omega_d: float, cycles: float) -> float:
    """Energy over ``cycles`` periods predicted from peak-amplitude phasors.

    The per-second rate is ``(Ω/2) Re{Vp^H K^H S}`` with ``K = diag(j, j/V0)``,
    ``Vp = (θ, V)`` and ``S = (P, Q)``.
    """
    vp = np.array([theta_ph, v_ph])
    k = np.diag([1j, 1j / V0])
    s = np.array([p_ph, q_ph])
    rate = 0.5 * Omega_d * float(np.real(vp.conj() @ k.conj().T @ s))
    return rate * cycles * 2 * math.pi / Omega_d


# ---------------------------------------------------------------------------
# Classical generator inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalGenFit:
    """Coefficients of ``sum (a_i + j b_i) T_i`` over i = 2..4 under the chosen convention."""

    a2: float
    a3: float
    a4: float
    b2: float
    b3: float
    b4: float
    frf: Frf2
    residual: float
    condition: float
    damping_sign_consistent: bool
    ambiguous: bool
    convention: str
    xdp: float
    delta: float
    gamma: complex

    @property
    def coefficients(self) -> dict[str, float]:
        return {"a3": self.a3, "a4": self.a4, "b2": self.b2, "b3": self.b3}

    @property
    def b4_residue(self) -> float:
        """``|b4 - sign*sqrt(b2^2 + b3^2)|`` for the positive-damping sign."""
        sign = 1.0 if self.convention == "injection" else -1.0
        return abs(self.b4 - sign * math.hypot(self.b2, self.b3))


def classical_coefficients_to_frf(a3, a4, b2, b3, *, convention: str = "injection", Omega: float = 1.0) -> Frf2:
    if abs(b3) < 1e-14:
        raise InferenceError("b3 is zero: the a2 = b2*a3/b3 constraint is singular")
    sign = 1.0 if convention == "injection" else -1.0
    a2 = b2 * a3 / b3
    b4 = sign * math.hypot(b2, b3)
    y = (a2 + 1j * b2) * T2 + (a3 + 1j * b3) * T3 + (a4 + 1j * b4) * T4
    return Frf2(y, Omega)


def _candidate(y_abs, u, x):
    z = y_abs + x * (T4 @ u)
    k = int(np.argmax(np.abs(z)))
    ph = np.angle(z[k])
    d = np.real(z * np.exp(-1j * ph))
    d = d / np.linalg.norm(d)
    c, s = d
    proj = s * u[0] - c * u[1]
    if abs(proj) < 1e-14:
        return None
    gamma = complex(c * z[0] + s * z[1]) / proj
    return gamma, math.atan2(s, c)


def infer_classical_gen(
    u, y, *, convention: str = "injection", Omega: float = 1.0, op: OperatingPoint | None = None
) -> ClassicalGenFit:
    """Recover the four free coefficients of a classical-generator FRF from one pair.

    ``convention="injection"`` treats ``y`` as current leaving the machine,
    so positive damping gives ``b4 = +sqrt(b2^2 + b3^2)``.  With
    ``"absorption"`` the current flows into the machine and the sign flips.

    A single pair can admit two reactance roots that both fit exactly.  When
    the steady terminal state ``op`` (current into the machine) is known, the
    root whose rotor angle agrees with ``V - jX' I`` is kept; otherwise the
    first root is returned and ``ambiguous`` is set.
    """
    if convention not in ("injection", "absorption"):
        raise ValueError("convention must be 'injection' or 'absorption'")
    u = np.asarray(u, dtype=complex).reshape(2)
    y = np.asarray(y, dtype=complex).reshape(2)
    y_abs = -y if convention == "injection" else y
    scale = max(np.linalg.norm(u), 1e-300)
    # y_abs + x T4 u must be parallel to a real vector: Im(z1 conj z2) = 0.
    q2 = np.imag(-u[1] * np.conj(u[0]))
    q1 = np.imag(y_abs[0] * np.conj(u[0])) - np.imag(u[1] * np.conj(y_abs[1]))
    q0 = np.imag(y_abs[0] * np.conj(y_abs[1]))
    if abs(q2) < 1e-14 * scale**2:
        if abs(q1) < 1e-14 * scale * np.linalg.norm(y_abs):
            raise InferenceError("input lies on a degenerate ray (real-collinear phasors)")
        roots = np.array([-q0 / q1])
    else:
        roots = np.roots([q2, q1, q0])
    cands = []
    for x in roots:
        if abs(np.imag(x)) > 1e-9 * max(1.0, abs(x)):
            continue
        x = float(np.real(x))
        if not x > 0:
            continue
        got = _candidate(y_abs, u, x)
        if got is None:
            continue
        gamma, delta = got
        cands.append((x, gamma, delta))
    if not cands:
        raise InferenceError("no physically admissible transient reactance found")
    sign_ok = [c for c in cands if c[1].imag < 0]  # positive damping
    pool = sign_ok or cands
    if len(pool) > 1 and op is not None:
        pool = sorted(pool, key=lambda c: _angle_mismatch(c, op))
        ambiguous = _angle_mismatch(pool[1], op) < 1e-6
    else:
        ambiguous = len(pool) > 1
    x, gamma, delta = pool[0]
    sgn = -1.0 if convention == "injection" else 1.0
    gr, gi = gamma.real, gamma.imag
    s2, c2 = math.sin(2 * delta), math.cos(2 * delta)
    a3 = -sgn * gr * c2 / 2
    a4 = sgn * (gr / 2 - x)
    b2 = sgn * gi * s2 / 2
    b3 = -sgn * gi * c2 / 2
    if abs(b3) < 1e-12 * max(1.0, abs(gamma)):
        raise InferenceError("b3 is numerically zero: the a2 = b2*a3/b3 constraint is singular")

    def resid(p):
        f = classical_coefficients_to_frf(*p, convention=convention, Omega=Omega).entries
        r = f @ u - y
        return np.concatenate([r.real, r.imag])

    p0 = np.array([a3, a4, b2, b3])
    if sign_ok:
        sol = least_squares(resid, p0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        p = sol.x if np.linalg.norm(sol.fun) <= np.linalg.norm(resid(p0)) else p0
        jac = sol.jac
    else:
        p = p0
        jac = None
    if jac is None:
        eps = 1e-7
        jac = np.column_stack([(resid(p + eps * e) - resid(p - eps * e)) / (2 * eps) for e in np.eye(4)])
    cond = float(np.linalg.cond(jac))
    frf = classical_coefficients_to_frf(*p, convention=convention, Omega=Omega) if sign_ok else Frf2(
        sgn * (gamma * np.array([[math.cos(delta) * math.sin(delta), -math.cos(delta) ** 2],
                                 [math.sin(delta) ** 2, -math.sin(delta) * math.cos(delta)]]) - x * T4), Omega
    )
    d = _decomp(frf.entries)
    res = float(np.linalg.norm(frf.entries @ u - y) / max(np.linalg.norm(y), 1e-300))
    return ClassicalGenFit(
        d[1].real, d[2].real, d[3].real, d[1].imag, d[2].imag, d[3].imag,
        frf, res, cond, bool(sign_ok), ambiguous, convention, 1.0 / x, delta, gamma,
    )


def _angle_mismatch(cand, op: OperatingPoint) -> float:
    x, _, delta = cand
    e = op.v_complex - 1j * op.i_complex / x
    d = (math.atan2(e.imag, e.real) - delta) % math.pi
    return min(d, math.pi - d)


def _decomp(y: np.ndarray) -> list[complex]:
    return [np.sum(t * y) / 2.0 for t in (T_1, T2, T3, T4)]


def infer_admittance(pairs, *, Omega: float = 1.0) -> Frf2:
    """Least-squares general 2x2 admittance from several (u, y) phasor pairs.

    One pair gives four real equations for eight unknowns and is rejected.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise UnderdeterminedError(
            f"{4 * len(pairs)} real equations for 8 unknown coefficients; supply at least two independent pairs"
        )
    U = np.column_stack([np.asarray(u, dtype=complex) for u, _ in pairs])
    Yo = np.column_stack([np.asarray(y, dtype=complex) for _, y in pairs])
    if np.linalg.matrix_rank(U, tol=1e-10 * max(1.0, np.abs(U).max())) < 2:
        raise UnderdeterminedError("input phasors are linearly dependent")
    sol, *_ = np.linalg.lstsq(U.T, Yo.T, rcond=None)
    return Frf2(sol.T, Omega)


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def write_csv(series: Mapping[str, TimeSeries] | TimeSeries, path: str | Path | None = None) -> str:
    """Write ``t,<channel>...`` CSV (UTF-8, LF); returns the text."""
    if isinstance(series, TimeSeries):
        series = {series.channel: series}
    chans = list(series)
    first = series[chans[0]]
    for ch in chans[1:]:
        if len(series[ch]) != len(first) or series[ch].dt != first.dt:
            raise SignalError("channels written together must share a time base")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *chans])
    cols = [series[c].samples for c in chans]
    for k, t in enumerate(first.t):
        w.writerow([repr(float(t)), *(repr(float(c[k])) for c in cols)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text


def read_csv(path: str | Path, required: tuple[str, ...] = ()) -> dict[str, TimeSeries]:
    p = Path(path)
    with p.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise SignalError(f"{p.name}: header must start with 't'")
    header = rows[0][1:]
    missing = [c for c in required if c not in header]
    if missing:
        raise SignalError(f"{p.name}: missing channels {', '.join(missing)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise SignalError(f"{p.name}: non-numeric value ({exc})") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header) + 1:
        raise SignalError(f"{p.name}: malformed table")
    t = data[:, 0]
    dt = float(np.mean(np.diff(t)))
    if not dt > 0 or np.max(np.abs(np.diff(t) - dt)) > 1e-6 * dt:
        raise SignalError(f"{p.name}: time column must be uniformly increasing")
    return {ch: TimeSeries(dt, float(t[0]), data[:, k + 1], ch) for k, ch in enumerate(header)}
