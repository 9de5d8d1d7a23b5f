"""Regenerate the bundled case files under src/forcedosc/data.

Development tool only: it runs a small Newton power flow so that the stored
operating points are equilibria, then writes the 39-bus variants and a
three-bus toy case.  Run from the repository root:

    python3 tools/build_fixtures.py
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import root

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from forcedosc import casefile  # noqa: E402

DATA = ROOT / "src" / "forcedosc" / "data"
BASE_MVA = 100.0
F0 = 60.0
OMEGA_S = 2 * math.pi * F0
SEED = 20200516

# from, to, r, x, b, tap  (standard New England 39-bus data, 100 MVA base)
BRANCHES = [
    (1, 2, 0.0035, 0.0411, 0.6987, 1.0), (1, 39, 0.001, 0.025, 0.75, 1.0),
    (2, 3, 0.0013, 0.0151, 0.2572, 1.0), (2, 25, 0.007, 0.0086, 0.146, 1.0),
    (3, 4, 0.0013, 0.0213, 0.2214, 1.0), (3, 18, 0.0011, 0.0133, 0.2138, 1.0),
    (4, 5, 0.0008, 0.0128, 0.1342, 1.0), (4, 14, 0.0008, 0.0129, 0.1382, 1.0),
    (5, 6, 0.0002, 0.0026, 0.0434, 1.0), (5, 8, 0.0008, 0.0112, 0.1476, 1.0),
    (6, 7, 0.0006, 0.0092, 0.113, 1.0), (6, 11, 0.0007, 0.0082, 0.1389, 1.0),
    (7, 8, 0.0004, 0.0046, 0.078, 1.0), (8, 9, 0.0023, 0.0363, 0.3804, 1.0),
    (9, 39, 0.001, 0.025, 1.2, 1.0), (10, 11, 0.0004, 0.0043, 0.0729, 1.0),
    (10, 13, 0.0004, 0.0043, 0.0729, 1.0), (13, 14, 0.0009, 0.0101, 0.1723, 1.0),
    (14, 15, 0.0018, 0.0217, 0.366, 1.0), (15, 16, 0.0009, 0.0094, 0.171, 1.0),
    (16, 17, 0.0007, 0.0089, 0.1342, 1.0), (16, 19, 0.0016, 0.0195, 0.304, 1.0),
    (16, 21, 0.0008, 0.0135, 0.2548, 1.0), (16, 24, 0.0003, 0.0059, 0.068, 1.0),
    (17, 18, 0.0007, 0.0082, 0.1319, 1.0), (17, 27, 0.0013, 0.0173, 0.3216, 1.0),
    (21, 22, 0.0008, 0.014, 0.2565, 1.0), (22, 23, 0.0006, 0.0096, 0.1846, 1.0),
    (23, 24, 0.0022, 0.035, 0.361, 1.0), (25, 26, 0.0032, 0.0323, 0.513, 1.0),
    (26, 27, 0.0014, 0.0147, 0.2396, 1.0), (26, 28, 0.0043, 0.0474, 0.7802, 1.0),
    (26, 29, 0.0057, 0.0625, 1.029, 1.0), (28, 29, 0.0014, 0.0151, 0.249, 1.0),
    (12, 11, 0.0016, 0.0435, 0.0, 1.006), (12, 13, 0.0016, 0.0435, 0.0, 1.006),
    (6, 31, 0.0, 0.025, 0.0, 1.07), (10, 32, 0.0, 0.02, 0.0, 1.07),
    (19, 33, 0.0007, 0.0142, 0.0, 1.07), (20, 34, 0.0009, 0.018, 0.0, 1.009),
    (22, 35, 0.0, 0.0143, 0.0, 1.025), (23, 36, 0.0005, 0.0272, 0.0, 1.0),
    (25, 37, 0.0006, 0.0232, 0.0, 1.025), (2, 30, 0.0, 0.0181, 0.0, 1.025),
    (29, 38, 0.0008, 0.0156, 0.0, 1.025), (19, 20, 0.0007, 0.0138, 0.0, 1.06),
]
# R≈X outlier excluded from the mean R/X target.
OUTLIER = (2, 25)

LOADS = {
    1: (97.6, 44.2), 3: (322.0, 2.4), 4: (500.0, 184.0), 7: (233.8, 84.0), 8: (522.0, 176.6),
    9: (6.5, -66.6), 12: (8.53, 88.0), 15: (320.0, 153.0), 16: (329.0, 32.3), 18: (158.0, 30.0),
    20: (680.0, 103.0), 21: (274.0, 115.0), 23: (247.5, 84.6), 24: (308.6, -92.2),
    25: (224.0, 47.2), 26: (139.0, 17.0), 27: (281.0, 75.5), 28: (206.0, 27.6),
    29: (283.5, 26.9), 31: (9.2, 4.6), 39: (1104.0, 250.0),
}

# bus: (P MW, V setpoint)
GENS = {
    30: (250.0, 1.0499), 32: (650.0, 0.9841), 33: (632.0, 0.9972), 34: (508.0, 1.0123),
    35: (650.0, 1.0494), 36: (560.0, 1.0636), 37: (540.0, 1.0275), 38: (830.0, 1.0265),
    39: (1000.0, 1.03),
}
SLACK = (31, 0.982)

# bus: H (s), Xd, X'd, Xq, T'd0 (s) on the 100 MVA system base
MACHINES = {
    39: (500.0, 0.02, 0.006, 0.019, 7.0), 31: (30.3, 0.295, 0.0697, 0.282, 6.56),
    32: (35.8, 0.2495, 0.0531, 0.237, 5.7), 33: (28.6, 0.262, 0.0436, 0.258, 5.69),
    34: (26.0, 0.67, 0.132, 0.62, 5.4), 35: (34.8, 0.254, 0.05, 0.241, 7.3),
    36: (26.4, 0.295, 0.049, 0.292, 5.66), 37: (24.3, 0.29, 0.057, 0.28, 6.7),
    38: (34.5, 0.2106, 0.057, 0.205, 4.79), 30: (42.0, 0.1, 0.031, 0.069, 10.2),
}

# Regulator and damping calibration (see the decisions ledger).
DAMPING_PER_M = 2.0  # D = DAMPING_PER_M * M, per-unit power per rad/s
AVR_TA = 0.1
AVR_FRACTION = 0.7  # Ka as a fraction of the unloaded gain bound at AVR_TA
LOSSY_RX = 0.15

BUS_IDS = list(range(1, 40))


def ybus(branches) -> np.ndarray:
    y = np.zeros((39, 39), dtype=complex)
    for f, t, r, x, b, tap in branches:
        i, j = f - 1, t - 1
        ys = 1.0 / complex(r, x)
        y[i, i] += ys / tap**2 + 0.5j * b
        y[j, j] += ys + 0.5j * b
        y[i, j] -= ys / tap
        y[j, i] -= ys / tap
    return y


def power_flow(branches):
    """Return bus voltages (complex) and net injected power."""
    yb = ybus(branches)
    p_inj = np.zeros(39)
    q_inj_pq = np.zeros(39)
    vset = np.ones(39)
    for b, (pl, ql) in LOADS.items():
        p_inj[b - 1] -= pl / BASE_MVA
        q_inj_pq[b - 1] -= ql / BASE_MVA
    for b, (pg, vg) in GENS.items():
        p_inj[b - 1] += pg / BASE_MVA
        vset[b - 1] = vg
    slack = SLACK[0] - 1
    vset[slack] = SLACK[1]
    pv = [b - 1 for b in GENS]
    pq = [i for i in range(39) if i not in pv and i != slack]
    ang_idx = [i for i in range(39) if i != slack]

    def unpack(x):
        th = np.zeros(39)
        v = vset.copy()
        th[ang_idx] = x[: len(ang_idx)]
        v[pq] = x[len(ang_idx):]
        return v * np.exp(1j * th)

    def resid(x):
        v = unpack(x)
        s = v * np.conj(yb @ v)
        return np.concatenate([s.real[ang_idx] - p_inj[ang_idx], s.imag[pq] - q_inj_pq[pq]])

    x0 = np.concatenate([np.zeros(len(ang_idx)), np.ones(len(pq))])
    sol = root(resid, x0, method="hybr", tol=1e-13)
    if not sol.success or np.max(np.abs(resid(sol.x))) > 1e-9:
        raise RuntimeError(f"power flow failed: {sol.message}")
    v = unpack(sol.x)
    s = v * np.conj(yb @ v)
    return v, s, yb


def scale_rx(branches, target: float):
    """Scale line resistances so the mean R/X over non-outlier lines hits ``target``."""
    lines = [br for br in branches if br[5] == 1.0 and (br[0], br[1]) != OUTLIER]
    mean = np.mean([r / x for _, _, r, x, _, _ in lines])
    k = target / mean
    return [
        (f, t, r * k if (tap == 1.0 and (f, t) != OUTLIER) else r, x, b, tap)
        for f, t, r, x, b, tap in branches
    ], k


def no_loss(branches):
    return [(f, t, 0.0, x, b, tap) for f, t, r, x, b, tap in branches]


def machine_params(bus: int, ka_scale=1.0, ta_scale=1.0) -> dict:
    h, xd, xdp, xq, td0 = MACHINES[bus]
    m = 2 * h / OMEGA_S
    ta = AVR_TA * ta_scale
    bound = td0 * (xd - xdp) / (td0 * xdp + xd * AVR_TA)
    ka = AVR_FRACTION * bound * ka_scale
    return {"M": m, "D": DAMPING_PER_M * m, "Xd": xd, "Xdp": xdp, "Xq": xq, "Td0p": td0, "Ta": ta, "Ka": ka}


def build_case(name, branches, load_kind="zip", ka_scale=1.0, ta_scale=1.0, description=""):
    v, s, yb = power_flow(branches)
    i_net = yb @ v
    buses = [
        {
            "id": b, "v": float(abs(v[b - 1])), "theta": float(np.angle(v[b - 1])),
            "i_mag": float(abs(i_net[b - 1])), "i_ang": float(np.angle(i_net[b - 1])),
        }
        for b in BUS_IDS
    ]
    br_out = []
    for f, t, r, x, b, tap in branches:
        rec = {"from": f, "to": t, "r": r, "x": x}
        if b:
            rec["b"] = b
        if tap != 1.0:
            rec["tap"] = tap
        br_out.append(rec)
    rng = np.random.default_rng(SEED)
    shunts = []
    for b in BUS_IDS:
        if b in LOADS:
            pl, ql = (val / BASE_MVA for val in LOADS[b])
            if load_kind == "zip":
                shunts.append({"bus": b, "kind": "zip_load", "params": {"p": pl, "q": ql, "p_weights": [0, 0, 1]}, "name": f"load{b}"})
            else:
                ap, aq, bp, bq = rng.uniform(0.0, 2.0, 4)
                shunts.append({
                    "bus": b, "kind": "freq_dep_load", "name": f"load{b}",
                    "params": {"p": pl, "q": ql, "alpha_p": float(ap), "alpha_q": float(aq), "beta_p": float(bp), "beta_q": float(bq)},
                })
        if b in MACHINES:
            k = b - 1
            s_load = complex(*LOADS.get(b, (0.0, 0.0))) / BASE_MVA
            s_gen = s[k] + s_load  # net injection plus local load
            mp = machine_params(b, ka_scale, ta_scale)
            mp.update(p=float(-s_gen.real), q=float(-s_gen.imag))
            shunts.append({"bus": b, "kind": "gen_avr", "params": mp, "name": f"gen{b}"})
    return {
        "name": name, "base_frequency_hz": F0, "description": description,
        "buses": buses, "branches": br_out, "shunts": shunts,
    }


def three_bus():
    """Generator, line, load and a second generator through a tap transformer."""
    branches = [(1, 2, 0.01, 0.1, 0.02, 1.0), (2, 3, 0.005, 0.08, 0.0, 0.97), (1, 3, 0.02, 0.2, 0.01, 1.0)]
    yb = np.zeros((3, 3), dtype=complex)
    for f, t, r, x, b, tap in branches:
        i, j = f - 1, t - 1
        ys = 1 / complex(r, x)
        yb[i, i] += ys / tap**2 + 0.5j * b
        yb[j, j] += ys + 0.5j * b
        yb[i, j] -= ys / tap
        yb[j, i] -= ys / tap
    load = complex(0.9, 0.3)

    def resid(x):
        v = np.array([1.02, x[2] * np.exp(1j * x[0]), 1.01 * np.exp(1j * x[1])])
        s = v * np.conj(yb @ v)
        return [s[1].real + load.real, s[2].real - 0.4, s[1].imag + load.imag]

    sol = root(resid, [0, 0, 1], tol=1e-14)
    th2, th3, v2 = sol.x
    v = np.array([1.02, v2 * np.exp(1j * th2), 1.01 * np.exp(1j * th3)])
    s = v * np.conj(yb @ v)
    i_net = yb @ v
    buses = [
        {"id": k + 1, "v": float(abs(v[k])), "theta": float(np.angle(v[k])), "i_mag": float(abs(i_net[k])), "i_ang": float(np.angle(i_net[k]))}
        for k in range(3)
    ]
    br = []
    for f, t, r, x, b, tap in branches:
        rec = {"from": f, "to": t, "r": r, "x": x, "b": b}
        if tap != 1.0:
            rec["tap"] = tap
        br.append(rec)
    shunts = [
        {"bus": 1, "kind": "classical_gen", "name": "g1", "params": {"M": 0.1, "D": 0.05, "Xdp": 0.25, "p": float(-s[0].real), "q": float(-s[0].imag)}},
        {"bus": 3, "kind": "classical_gen", "name": "g3", "params": {"M": 0.06, "D": 0.03, "Xdp": 0.3, "p": float(-s[2].real), "q": float(-s[2].imag)}},
        {"bus": 2, "kind": "freq_dep_load", "name": "l2", "params": {"p": load.real * 0.8, "q": load.imag, "alpha_p": 1.0, "alpha_q": 2.0, "beta_p": 0.5, "beta_q": 1.0}},
        {"bus": 2, "kind": "impedance", "name": "z2", "params": {"g": float(load.real * 0.2 / abs(v[1]) ** 2), "b": 0.0}},
    ]
    return {"name": "three_bus", "base_frequency_hz": 60.0, "description": "Toy case for conservation checks.", "buses": buses, "branches": br, "shunts": shunts}


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    lossy_br, k = scale_rx(BRANCHES, LOSSY_RX)
    nl = no_loss(BRANCHES)
    docs = {
        "ieee39_noloss": build_case("ieee39_noloss", nl, "zip", description="Purely reactive branches, constant-power loads, third-order machines with first-order regulators."),
        "ieee39_lossy": build_case("ieee39_lossy", lossy_br, "freq", description=f"Mean line R/X {LOSSY_RX} (outlier excluded, scale {k:.4f}); exponential loads with exponents drawn from U(0,2), seed {SEED}."),
        "ieee39_avr_strong": build_case("ieee39_avr_strong", nl, "zip", ka_scale=3.0, ta_scale=1 / 3, description="No-loss case with regulator gains tripled and time constants divided by three."),
    }
    for f in (0, 0.5, 1, 2, 4):
        br = [(a, b, r * f, x, bb, tap) for a, b, r, x, bb, tap in lossy_br]
        docs[f"ieee39_rscale_{f:g}"] = build_case(
            f"ieee39_rscale_{f:g}", br, "zip", description=f"Lossy branch set with every resistance scaled by {f:g}; constant-power loads."
        )
    docs["three_bus"] = three_bus()
    for name, doc in docs.items():
        casefile.validate_case_dict(doc)
        (DATA / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        case = casefile.case_from_dict(doc)
        print(f"{name}: balance residual {case.power_balance_residual():.2e}")


if __name__ == "__main__":
    main()

