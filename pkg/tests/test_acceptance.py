"""Acceptance criteria 1-15; each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from forcedosc import algebra as al
from forcedosc import casefile as cf
from forcedosc import components as comp
from forcedosc import energyflow as ef
from forcedosc import network as nw
from forcedosc import scenarios as sc
from forcedosc import signal as sg
from forcedosc.selfcheck import run_selfcheck

from conftest import ACCEPTANCE_LINES, TWO_HZ, random_complex

BUS = 31


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _dwe_timed(name):
    case = cf.load_fixture(name)
    t0 = time.perf_counter()
    d = nw.dwe(nw.assemble(case, TWO_HZ), BUS)
    return d.eig.as_tuple(), time.perf_counter() - t0


def test_criterion_01_noloss_both_positive():
    (l1, l2), dt = _dwe_timed("ieee39_noloss")
    record(1, l1 > 0 and l2 > 0 and dt < 1.0, f"eigenvalues ({l1:.4f}, {l2:.4f}), {dt * 1e3:.1f} ms")


def test_criterion_02_lossy_mixed_sign():
    (l1, l2), dt = _dwe_timed("ieee39_lossy")
    record(2, l1 < 0 < l2 and dt < 1.0, f"eigenvalues ({l1:.4f}, {l2:.4f}), {dt * 1e3:.1f} ms")


def test_criterion_03_droop_penetration_monotone():
    doc = cf.read_case_doc(cf.fixture_path("ieee39_noloss"))
    alphas = [0, 1, 10, 1e2, 1e3, 1e4]
    eigs = []
    for a in alphas:
        case = cf.case_from_dict(sc.with_droop_inverters(doc, a))
        eigs.append(nw.dwe(nw.assemble(case, TWO_HZ), BUS).eig.as_tuple())
    eigs = np.array(eigs)
    positive = bool(np.all(eigs > 0))
    monotone = bool(np.all(np.diff(eigs, axis=0) >= 0))
    trend = ", ".join(f"{a:g}:({e[0]:.4f},{e[1]:.4f})" for a, e in zip(alphas, eigs))
    record(3, positive and monotone, f"alpha -> eigenvalues {trend}")


def test_criterion_04_avr_strong_negative():
    (l1, l2), _ = _dwe_timed("ieee39_avr_strong")
    record(4, min(l1, l2) < 0, f"eigenvalues ({l1:.4f}, {l2:.4f})")


def test_criterion_05_conservation():
    worst_tel = worst_energy = 0.0
    count = 0
    rng = np.random.default_rng(5)
    for name in cf.FIXTURES:
        case = cf.load_fixture(name)
        for hz in (0.5, 2.0):
            omega = 2 * math.pi * hz
            net = nw.assemble(case, omega)
            t = al.def_transform(omega)
            for bus in case.shunt_buses()[:4]:
                sol = nw.solve_injection(net, nw.source_injection(net, bus, random_complex(rng, 2)))
                worst_tel = max(worst_tel, sol.tellegen_residual(net))
                worst_energy = max(worst_energy, nw.energy_decomposition(net, sol, t, bus).residual)
                count += 1
    ok = worst_tel <= 1e-9 and worst_energy <= 1e-9
    record(5, ok, f"{count} solves, Tellegen {worst_tel:.1e}, energy groups {worst_energy:.1e}")


def test_criterion_06_closed_form_eigenvalues():
    rng = np.random.default_rng(6)
    load = droop = herm = 0.0
    for _ in range(1000):
        op = comp.OperatingPoint.from_power(rng.uniform(0.9, 1.1), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 3), rng.uniform(-1, 1))
        p = comp.FreqDepLoadParams(op.power.real, op.power.imag, op.V, 0.0, 0.0, rng.uniform(0, 2), rng.uniform(0, 2), op)
        w = 2 * math.pi * rng.uniform(0.05, 3.0)
        ref = np.linalg.eigvalsh(al.hermitian_part(al.DEF_M @ comp.freq_dep_load_frf(p, w).entries))
        got = np.sort(comp.freq_load_eigs_closed_form(p.beta_p, p.beta_q, op.V, op.I, op.theta - op.phi))
        load = max(load, np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))

        d = comp.DroopInverterParams(
            rng.uniform(0, 0.2), rng.uniform(0, 0.05), rng.uniform(0.05, 2), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0.05, 2)
        )
        ref = np.linalg.eigvalsh(al.hermitian_part(al.DEF_M @ comp.droop_inverter_impedance(d, w).entries))
        got = np.array(al.herm_eigs(comp.droop_hermitian_closed_form(d, w)).as_tuple())
        droop = max(droop, np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))

        h = al.hermitian_part(random_complex(rng, (2, 2)))
        ref = np.linalg.eigvalsh(h)
        herm = max(herm, np.abs(np.array(al.herm_eigs(h).as_tuple()) - ref).max() / max(1.0, np.abs(ref).max()))
    ok = max(load, droop, herm) <= 1e-10
    record(6, ok, f"max relative errors: load {load:.1e}, droop {droop:.1e}, 2x2 {herm:.1e}")


def test_criterion_07_lossless_ray_falsification():
    rep = al.lossless_ray_search(100_000, seed=7)
    ok = rep.holds and rep.near_lossless == 0
    record(
        7, ok,
        f"{rep.samples} draws ({rep.rejected} near-singular rejected), min residual {rep.min_residual:.3f}, "
        f"ray residual {rep.ray_residual}, eigenvalues {rep.ray_t1_eigs} for beta {rep.ray_beta}",
    )


def test_criterion_08_conjugation_negates_resistive_power(lossy_net):
    t = al.def_transform(TWO_HZ)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        u = random_complex(rng, 2 * lossy_net.n)
        p = nw.network_resistive_power(lossy_net, u, t)
        pc = nw.network_resistive_power(lossy_net, u.conj(), t)
        worst = max(worst, abs(p + pc) / max(1.0, abs(p)))
    record(8, worst <= 1e-10, f"max |P + P_conj| {worst:.1e}")


def test_criterion_09_inverse_preserves_class():
    rng = np.random.default_rng(9)
    t = al.def_transform(TWO_HZ)
    agree = tried = 0
    while tried < 1000:
        y = random_complex(rng, (2, 2))
        if abs(np.linalg.det(y)) < 1e-8:
            continue
        tried += 1
        a = al.transformed_hermitian(t, y).definiteness
        b = al.transformed_hermitian(t, np.linalg.inv(y)).definiteness
        agree += a == b
    record(9, agree == tried, f"{agree}/{tried} trials agree")


def test_criterion_10_k_transform_and_time_domain_energy():
    p = comp.GenAvrParams.from_terminal(
        M=0.1, D=0.2, Xd=1.8, Xdp=0.3, Xq=1.7, Td0p=6.0, Ta=0.1, Ka=30.0, V=1.0, theta=0.0, P=0.0, Q=0.0
    )
    op = comp.OperatingPoint(1.0, 0.0, 0.0, 0.0)
    agree = 0
    freqs = np.linspace(0.05, 3.0, 50)
    for hz in freqs:
        w = 2 * math.pi * hz
        h = comp.gen_avr_polar_frf(p, w)
        k = ef.verdict(ef.k_transform_eigs(h, 1.0)).verdict
        d = ef.verdict(al.transformed_hermitian(al.def_transform(w), comp.polar_power_to_current_frf(h, op))).verdict
        agree += k is d

    w = 2 * math.pi * 0.8
    h = comp.gen_avr_polar_frf(p, w)
    rng = np.random.default_rng(10)
    vp = random_complex(rng, 2) * 0.01
    s = h.entries @ vp
    cycles = 20
    dt = 2 * math.pi / w / 400
    ps = sg.PhasorSet({"Vang": vp[0], "Vmag": vp[1], "P": s[0], "Q": s[1]}, w, {"Vmag": 1.0})
    ch = sg.synthesize(ps, cycles * 2 * math.pi / w + dt, dt)
    td = sg.wde_time_integral(ch["P"], ch["Q"], ch["Vang"], ch["Vmag"], 1.0)
    fd = sg.wde_frequency_domain(vp[0], vp[1], s[0], s[1], 1.0, w, cycles)
    rel = abs(td - fd) / abs(fd)
    record(10, agree == len(freqs) and rel <= 1e-3, f"verdicts agree {agree}/{len(freqs)}, W_DE relative error {rel:.1e}")


def test_criterion_11_generator_inference():
    worst_coef = worst_res = 0.0
    models = 0
    seed = 0
    while models < 100:
        rng = np.random.default_rng(1000 + seed)
        seed += 1
        V, th, P, Q = rng.uniform(0.95, 1.05), rng.uniform(-0.6, 0.6), -rng.uniform(0.2, 4), -rng.uniform(-0.5, 1.5)
        g = comp.ClassicalGenParams.from_terminal(
            M=rng.uniform(0.02, 0.2), D=rng.uniform(0.01, 0.3), Xdp=rng.uniform(0.05, 0.5), V=V, theta=th, P=P, Q=Q
        )
        w = 2 * math.pi * rng.uniform(0.1, 3.0)
        try:
            y_out = -comp.classical_generator_frf(g, w).entries
        except comp.ResonanceError:
            continue
        models += 1
        u = random_complex(rng, 2)
        fit = sg.infer_classical_gen(u, y_out @ u, Omega=w, op=comp.OperatingPoint.from_power(V, th, P, Q))
        ref = al.decompose(y_out)
        truth = np.array([ref.a[2], ref.a[3], ref.b[1], ref.b[2]])
        got = np.array([fit.a3, fit.a4, fit.b2, fit.b3])
        scale = max(1.0, np.abs(y_out).max())
        worst_coef = max(worst_coef, np.abs(got - truth).max() / scale)
        worst_res = max(worst_res, fit.b4_residue / scale)
    record(11, worst_coef <= 1e-8 and worst_res <= 1e-8, f"{models} models, coefficient error {worst_coef:.1e}, b4 residue {worst_res:.1e}")


def test_criterion_12_injection_localization(lossy_net):
    rng = np.random.default_rng(12)
    hits = sum(sc.localization_trial(lossy_net, BUS, rng, extraneous=0.01).hit for _ in range(100))
    record(12, hits >= 95, f"source located in {hits}/100 trials")


def test_criterion_13_signal_round_trip(lossy_net):
    rng = np.random.default_rng(13)
    w = lossy_net.Omega
    worst_ph = 0.0
    for _ in range(100):
        phs = {ch: complex(*rng.normal(size=2)) for ch in ("Vmag", "Vang", "Imag", "Iang")}
        series = sg.synthesize(sg.PhasorSet(phs, w), 20 * 2 * math.pi / w, 2 * math.pi / w / 64)
        got = sg.extract_phasors(series, w)
        worst_ph = max(worst_ph, max(abs(got[c] - x) / abs(x) for c, x in phs.items()))
    sol = nw.solve_injection(lossy_net, nw.source_injection(lossy_net, BUS, [1.0, 1j]))
    fm = ef.line_flow_pstar(sol, lossy_net)
    worst_p = 0.0
    for branch in range(lossy_net.case.n_branches):
        for side, end in enumerate(("from", "to")):
            chans, _ = sc.line_end_series(lossy_net, sol, branch, end)
            ph = sg.extract_phasors(chans, w)
            t = sg.PolarRectTransform.from_series(chans["Vmag"], chans["Vang"], chans["Imag"], chans["Iang"], w)
            v, i = sg.effective_rect_phasors([ph["Vmag"], ph["Vang"]], [ph["Imag"], ph["Iang"]], t)
            ref = fm.ends[2 * branch + side].p_star
            worst_p = max(worst_p, abs(sg.dissipating_power(v, i, Omega_d=w) - ref) / max(abs(ref), 1e-300))
    record(13, worst_ph <= 1e-6 and worst_p <= 1e-6, f"phasor error {worst_ph:.1e}, line-end P* relative error {worst_p:.1e}")


def test_criterion_14_resistance_scaling():
    steps = []
    ok = True
    for f in ("0", "0.5", "1", "2", "4"):
        (l1, l2), _ = _dwe_timed(f"ieee39_rscale_{f}")
        tol = ef.default_tol(l2)
        # -(M Y_N + h.c.) is positive definite exactly when both eigenvalues are negative
        ok &= l2 >= -tol and not (l1 < -tol and l2 < -tol)
        steps.append(f"x{f}:({l1:.3f},{l2:.3f})")
    record(14, ok, "larger eigenvalue non-negative at every step: " + ", ".join(steps))


@pytest.mark.slow
def test_criterion_15_performance(noloss):
    t0 = time.perf_counter()
    res = ef.sweep(noloss, [b.id for b in noloss.buses], list(np.linspace(0.1, 3.0, 30)))
    sweep_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    checks = run_selfcheck()
    self_s = time.perf_counter() - t0
    cells = sum(len(r) for r in res.cells)
    ok = sweep_s < 5.0 and self_s < 10.0 and cells == 39 * 30 and all(c.ok for c in checks)
    record(15, ok, f"sweep of {cells} cells in {sweep_s:.2f} s, selfcheck in {self_s:.2f} s")
