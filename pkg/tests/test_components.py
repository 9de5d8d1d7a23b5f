import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forcedosc import algebra as al
from forcedosc import components as comp

GEN_KW = dict(M=0.1, D=0.2, Xd=1.8, Xdp=0.3, Xq=1.7, Td0p=6.0, Ta=0.1, Ka=30.0)


def _jacobian(f, x0, eps=1e-6):
    cols = []
    for k in range(len(x0)):
        e = np.zeros(len(x0))
        e[k] = eps
        cols.append((f(x0 + e) - f(x0 - e)) / (2 * eps))
    return np.column_stack(cols)


def _classical(rng, D=None):
    return comp.ClassicalGenParams.from_terminal(
        M=rng.uniform(0.02, 0.2),
        D=rng.uniform(0.01, 0.3) if D is None else D,
        Xdp=rng.uniform(0.05, 0.5),
        V=rng.uniform(0.95, 1.05),
        theta=rng.uniform(-0.6, 0.6),
        P=-rng.uniform(0.2, 4.0),
        Q=-rng.uniform(-0.5, 1.5),
    )


# --- operating point -------------------------------------------------------


def test_operating_point_power_round_trip():
    op = comp.OperatingPoint.from_power(1.02, 0.3, 1.5, -0.4)
    assert op.power == pytest.approx(complex(1.5, -0.4))


def test_operating_point_rejects_zero_voltage():
    with pytest.raises(comp.ComponentError):
        comp.OperatingPoint.from_power(0.0, 0.0, 1.0, 0.0)


# --- classical generator ---------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_classical_frf_matches_state_space(seed):
    rng = np.random.default_rng(seed)
    p = _classical(rng)
    w = 2 * math.pi * rng.uniform(0.1, 3.0)
    if abs(p.K - p.M * w**2) < 1e-3:
        pytest.skip("too close to the rotor resonance")
    closed = comp.classical_generator_frf(p, w).entries
    ss = comp.frf_from_state_space(comp.classical_generator_ss(p), w).entries
    assert np.allclose(closed, ss, rtol=1e-10, atol=1e-10)


def test_classical_jacobian_by_finite_differences():
    p = _classical(np.random.default_rng(3))

    def current(x):
        delta, vr, vi = x
        e = p.Ep * complex(math.cos(delta), math.sin(delta))
        i = (complex(vr, vi) - e) / complex(0, p.Xdp)
        return np.array([i.real, i.imag])

    v = p.Vt * np.exp(1j * (p.delta - p.phi))
    jac = _jacobian(current, np.array([p.delta, v.real, v.imag]))
    ss = comp.classical_generator_ss(p)
    assert np.allclose(jac[:, 0], ss.C[:, 0], atol=1e-7)
    assert np.allclose(jac[:, 1:], ss.D, atol=1e-7)


@settings(max_examples=50)
@given(st.integers(0, 10_000))
def test_classical_coefficient_constraints(seed):
    rng = np.random.default_rng(seed)
    p = _classical(rng)
    w = 2 * math.pi * rng.uniform(0.1, 3.0)
    try:
        y = comp.classical_generator_frf(p, w).entries
    except comp.ResonanceError:
        return
    d = al.decompose(y)
    a, b = d.a, d.b
    scale = max(1.0, np.abs(y).max())
    assert a[1] * b[2] == pytest.approx(b[1] * a[2], abs=1e-9 * scale**2)
    # current into the machine: positive damping gives a negative b4
    assert b[3] == pytest.approx(-math.hypot(b[1], b[2]), abs=1e-9 * scale)
    assert abs(a[0]) < 1e-12 * scale and abs(b[0]) < 1e-12 * scale


def test_classical_resonance_raises():
    p = _classical(np.random.default_rng(0), D=0.0)
    with pytest.raises(comp.ResonanceError):
        comp.classical_generator_frf(p, math.sqrt(p.K / p.M))


def test_classical_frf_rejects_non_positive_frequency():
    with pytest.raises(comp.ComponentError):
        comp.classical_generator_frf(_classical(np.random.default_rng(0)), 0.0)


# --- loads -----------------------------------------------------------------


def _freq_load(rng, alpha=(0.0, 0.0)):
    op = comp.OperatingPoint.from_power(
        rng.uniform(0.9, 1.1), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 3.0), rng.uniform(-1.0, 1.0)
    )
    return comp.FreqDepLoadParams(
        op.power.real, op.power.imag, op.V, alpha[0], alpha[1], rng.uniform(0, 2), rng.uniform(0, 2), op
    )


def test_freq_load_closed_form_eigenvalues():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        p = _freq_load(rng)
        w = 2 * math.pi * rng.uniform(0.05, 3.0)
        h = al.hermitian_part(al.DEF_M @ comp.freq_dep_load_frf(p, w).entries)
        ref = np.linalg.eigvalsh(h)
        got = np.sort(comp.freq_load_eigs_closed_form(p.beta_p, p.beta_q, p.op.V, p.op.I, p.op.theta - p.op.phi))
        worst = max(worst, np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))
    assert worst < 1e-10


def test_voltage_only_load_is_purely_real():
    p = comp.FreqDepLoadParams.at_voltage(1.0, 0.1, 1.2, 0.3, alpha_p=1.3, alpha_q=0.4)
    y = comp.freq_dep_load_frf(p, 3.0).entries
    assert np.allclose(y.imag, 0.0)


def test_freq_load_rejects_inconsistent_operating_point():
    op = comp.OperatingPoint.from_power(1.0, 0.0, 1.0, 0.2)
    with pytest.raises(comp.ComponentError):
        comp.FreqDepLoadParams(2.0, 0.2, 1.0, 0.0, 0.0, 1.0, 1.0, op)


@pytest.mark.parametrize(
    "weights,alpha",
    [((1.0, 0.0, 0.0), 2.0), ((0.0, 1.0, 0.0), 1.0), ((0.0, 0.0, 1.0), 0.0), ((0.5, 0.3, 0.2), 1.3)],
)
def test_zip_weights_map_to_voltage_exponent(weights, alpha):
    op = comp.OperatingPoint.from_power(1.0, 0.2, 1.0, 0.3)
    z = comp.ZipLoadParams(1.0, 0.3, op, weights)
    assert z.alpha_p == pytest.approx(alpha)
    assert np.allclose(comp.zip_load_frf(z, 2.0).entries.imag, 0.0)


def test_constant_impedance_zip_equals_shunt_admittance():
    v, th, P, Q = 1.05, 0.2, 1.2, 0.4
    op = comp.OperatingPoint.from_power(v, th, P, Q)
    z = comp.ZipLoadParams(P, Q, op, (1.0, 0.0, 0.0))
    y = complex(P, -Q) / v**2
    assert np.allclose(comp.zip_load_frf(z, 2.0).entries, al.complex_to_block(y))


def test_zip_weights_must_sum_to_one():
    op = comp.OperatingPoint.from_power(1.0, 0.0, 1.0, 0.0)
    with pytest.raises(comp.ComponentError):
        comp.ZipLoadParams(1.0, 0.0, op, (0.5, 0.2, 0.2))


# --- impedance and droop ---------------------------------------------------


def test_impedance_block():
    y = comp.impedance_frf(comp.ImpedanceParams(0.3, -1.2), 2.0).entries
    assert np.allclose(y, [[0.3, 1.2], [-1.2, 0.3]])


def test_droop_closed_form_hermitian():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        p = comp.DroopInverterParams(
            rng.uniform(0, 0.2), rng.uniform(0, 0.05), rng.uniform(0.05, 2), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0.05, 2)
        )
        w = 2 * math.pi * rng.uniform(0.05, 3.0)
        z = comp.droop_inverter_impedance(p, w).entries
        ref = np.linalg.eigvalsh(al.hermitian_part(al.DEF_M @ z))
        got = al.herm_eigs(comp.droop_hermitian_closed_form(p, w)).as_tuple()
        worst = max(worst, np.abs(np.array(got) - ref).max() / max(1.0, np.abs(ref).max()))
    assert worst < 1e-10


def test_droop_admittance_is_impedance_inverse():
    p = comp.DroopInverterParams(0.01, 0.002, 0.3, 1.0, 2.0, 0.5)
    y = comp.droop_inverter_admittance(p, 4.0)
    assert y.role is al.Role.ADMITTANCE
    assert np.allclose(y.entries @ comp.droop_inverter_impedance(p, 4.0).entries, np.eye(2))


@pytest.mark.parametrize("kw", [dict(tau=0.0), dict(kp=-1.0), dict(Rc=-0.1)])
def test_droop_rejects_invalid_parameters(kw):
    base = dict(Rc=0.0, Lc=0.01, Xc=0.3, kp=1.0, kq=1.0, tau=0.5)
    base.update(kw)
    with pytest.raises(comp.ComponentError):
        comp.DroopInverterParams(**base)


# --- generator with AVR ----------------------------------------------------


@pytest.mark.parametrize("P,Q", [(0.0, 0.0), (-2.0, -0.5), (-5.0, 1.0)])
def test_gen_avr_equilibrium(P, Q):
    p = comp.GenAvrParams.from_terminal(**GEN_KW, V=1.03, theta=0.2, P=P, Q=Q)
    assert p.equilibrium_residual() < 1e-12
    assert p.consumed_power() == pytest.approx((P, Q), abs=1e-12)


def test_gen_avr_jacobian_by_finite_differences():
    p = comp.GenAvrParams.from_terminal(**GEN_KW, V=1.01, theta=0.3, P=-3.0, Q=-0.8)
    ss = comp.gen_avr_state_space(p)
    x0, u0 = p.x0, p.u0
    assert np.allclose(_jacobian(lambda x: p.rhs(x, u0), x0), ss.A, atol=1e-7)
    assert np.allclose(_jacobian(lambda u: p.rhs(x0, u), u0), ss.B, atol=1e-7)
    assert np.allclose(_jacobian(lambda x: p.output(x, u0), x0), ss.C, atol=1e-7)
    assert np.allclose(_jacobian(lambda u: p.output(x0, u), u0), ss.D, atol=1e-7)


def test_gen_avr_without_regulator_is_an_equilibrium():
    p = comp.GenAvrParams.from_terminal(**{**GEN_KW, "Ka": 0.0}, V=1.0, theta=0.0, P=-1.0, Q=-0.2)
    assert p.equilibrium_residual() < 1e-12
    comp.gen_avr_frf(p, 2.0)


def test_gen_avr_off_equilibrium_raises():
    p = comp.GenAvrParams.from_terminal(**GEN_KW, V=1.0, theta=0.0, P=-1.0, Q=-0.2)
    from dataclasses import replace

    with pytest.raises(comp.EquilibriumError):
        comp.gen_avr_frf(replace(p, Pm=p.Pm + 0.1), 2.0)


@pytest.mark.parametrize("hz", [0.1, 0.7, 1.5, 3.0])
def test_unloaded_polar_frf_matches_admittance(hz):
    p = comp.GenAvrParams.from_terminal(**GEN_KW, V=1.0, theta=0.0, P=0.0, Q=0.0)
    w = 2 * math.pi * hz
    h = comp.gen_avr_polar_frf(p, w)
    y = comp.polar_power_to_current_frf(h, comp.OperatingPoint(1.0, 0.0, 0.0, 0.0))
    ref = comp.gen_avr_frf(p, w, require_stable=False)
    assert np.allclose(y.entries, ref.entries, rtol=1e-10, atol=1e-12)


def test_q_channel_indicator_sign_tracks_gain_bound():
    p = comp.GenAvrParams.from_terminal(**GEN_KW, V=1.0, theta=0.0, P=0.0, Q=0.0)
    bound = comp.avr_gain_bound(p)
    for ka, sign in ((0.5 * bound, 1), (2.0 * bound, -1)):
        q = p.with_changes(Ka=ka)
        # at zero frequency the indicator changes sign exactly at the bound
        assert np.sign(comp.q_channel_indicator(q, 0.0)) == sign


def test_polar_frf_requires_polar_role():
    with pytest.raises(ValueError, match="polar-power"):
        comp.polar_power_to_current_frf(al.Frf2(np.eye(2), 1.0), comp.OperatingPoint(1.0, 0.0, 0.0, 0.0))


def test_unstable_model_raises():
    ss = comp.StateSpaceModel(np.array([[0.5]]), np.ones((1, 2)), np.ones((2, 1)), np.zeros((2, 2)))
    with pytest.raises(comp.UnstableModelError):
        comp.frf_from_state_space(ss, 1.0)


# --- branches --------------------------------------------------------------


@pytest.mark.parametrize("tap", [0.9, 1.0, 1.07])
def test_tap_split_reproduces_two_port(tap):
    b = comp.BranchParams(1, 2, 1 / complex(0.01, 0.1), tap)
    ys, y1, y2 = comp.tap_transformer_split(b)
    pi = np.array([[ys + y1, -ys], [-ys, ys + y2]])
    assert np.allclose(pi, comp.two_port_matrix(b))


def test_branch_label_defaults_to_endpoints():
    assert comp.BranchParams(3, 7, 1.0).label == "3-7"
    assert comp.BranchParams(3, 7, 1.0, name="tx").label == "tx"
