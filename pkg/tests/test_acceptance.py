"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <id> PASS|FAIL <detail>`` line (also
repeated in the pytest terminal summary).  Run on its own with

    pytest tests/test_acceptance.py -v
"""
import math
import time
import timeit
from pathlib import Path

import numpy as np
import pytest

from nvcat import cli, estimators, units
from nvcat.config import load
from nvcat.dynamics import (
    HamiltonianSpec,
    build_hamiltonian,
    cat_state,
    default_fock_dim,
    evolve,
    magnus_oracle,
    spin_superposition_state,
)
from nvcat.hilbert import FockBasis, QuantumState, fidelity, fock_vector
from nvcat.interference import DEFAULT_GRID, analytic_pattern_vacuum, pattern, thermal_pattern
from nvcat.protocols import (
    cat_pipeline,
    fidelity_scan,
    fock_ladder,
    jc_time,
    ladder_durations,
    qnd_phase,
    superposition_transfer,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: list[str] = []


def report(capsys, cid, checks):
    """``checks``: list of (description, ok).  Prints one line and asserts."""
    ok = all(c for _, c in checks)
    line = f"ACCEPTANCE {cid:>2} {'PASS' if ok else 'FAIL'}  " + "; ".join(
        f"{d}{'' if c else ' [FAILED]'}" for d, c in checks
    )
    RESULTS.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_coupling_strength_fock_trap(capsys):
    m = units.mass_from_diameter(30e-9, 3500)
    w = units.mhz(0.5)
    lam_hz = units.to_hz(units.coupling_lambda(1e5, m, w))
    n = 2000
    per_call = min(timeit.repeat(lambda: units.coupling_lambda(1e5, units.mass_from_diameter(30e-9, 3500), w), number=n, repeat=5)) / n
    report(capsys, 1, [
        (f"lambda/2pi = {lam_hz / 1e3:.3f} kHz vs 52 kHz (rel {rel(lam_hz, 52e3):.2%} <= 3%)", rel(lam_hz, 52e3) <= 0.03),
        (f"runtime {per_call * 1e6:.2f} us < 1 ms", per_call < 1e-3),
    ])


def test_02_coupling_and_width_20khz_trap(capsys):
    d = units.derive(units.scenario_fig5())
    lam_hz = units.to_hz(d.lam)
    report(capsys, 2, [
        (f"lambda/2pi = {lam_hz / 1e3:.3f} kHz vs 77 kHz (rel {rel(lam_hz, 77e3):.2%} <= 3%)", rel(lam_hz, 77e3) <= 0.03),
        (f"a2 = {d.a2 * 1e9:.4f} nm vs 0.092 nm (rel {rel(d.a2, 0.092e-9):.2%} <= 2%)", rel(d.a2, 0.092e-9) <= 0.02),
    ])


def test_03_cat_separation_and_fig4_scalings(capsys):
    d = units.derive(units.scenario_fig5())
    ratio = d.D_m / d.a2
    cfg_a = load(CONFIGS / "fig4a.conf")
    cols, rows = cli.sweep_table(cfg_a, "f_m2", cfg_a.sweep["values"], workers=1)
    a = np.array(rows)
    f, D = a[:, 0], a[:, cols.index("D_m_m")]
    dev_w = float(np.max(np.abs(D * f**2 / (D[0] * f[0] ** 2) - 1)))
    cfg_b = load(CONFIGS / "fig4b.conf")
    cols, rows = cli.sweep_table(cfg_b, "G", cfg_b.sweep["values"], workers=1)
    b = np.array(rows)
    G, DG = b[:, 0], b[:, cols.index("D_m_m")]
    dev_g = float(np.max(np.abs(DG / G / (DG[0] / G[0]) - 1)))
    report(capsys, 3, [
        (f"D_m/a2 = {ratio:.3f} vs 31 (rel {rel(ratio, 31):.2%} <= 3%)", rel(ratio, 31) <= 0.03),
        (f"fig4a sweep: D_m*omega^2 constant to {dev_w:.1e} <= 1e-10", dev_w <= 1e-10 and np.all(np.diff(D) < 0)),
        (f"fig4b sweep: D_m/G constant to {dev_g:.1e} <= 1e-10", dev_g <= 1e-10),
    ])


def test_04_fig2_transfer_fidelity(capsys):
    cfg = load(CONFIGS / "fig2.conf")
    s_values = cfg.numerics["s_values"]
    t0 = time.perf_counter()
    scan = fidelity_scan(s_values, dim=64)
    elapsed = time.perf_counter() - t0
    peak = dict(zip(scan[:, 0], scan[:, 1]))
    w = units.mhz(0.5)
    c = 1 / math.sqrt(2)
    trace = superposition_transfer(-c, c, "full", omega_m=w, lam=w / 6.3).fidelity_series[:, 1]
    inner = trace[1:-1]
    local_max = int(np.sum((inner > trace[:-2]) & (inner > trace[2:])))
    report(capsys, 4, [
        (f"peak F(s=6.3) = {peak[6.3]:.5f} > 0.99", peak[6.3] > 0.99),
        (f"peak F(s=10) = {peak[10.0]:.5f} > 0.99", peak[10.0] > 0.99),
        (f"peak F(40) = {peak[40.0]:.5f} >= peak F(10) - 1e-3", peak[40.0] >= peak[10.0] - 1e-3),
        (f"trace at s=6.3 oscillates ({local_max} local maxima)", local_max >= 2),
        (f"scan of {len(s_values)} s values at dim 64 in {elapsed:.2f} s < 10 s", elapsed < 10),
    ])


def test_05_magnus_oracle(capsys):
    rng = np.random.default_rng(20240501)
    omega = 1.0
    worst = 1.0
    for _ in range(100):
        r = rng.uniform(0, 3)
        t = rng.uniform(0, 4 * math.pi / omega)
        n = int(rng.integers(0, 4))
        lam = r * omega
        b = FockBasis(default_fock_dim(8 * r, n, minimum=80), omega, 1.0)
        H = build_hamiltonian(HamiltonianSpec("spin_mech", omega, lam), b)
        num = evolve(H, spin_superposition_state(fock_vector(b.dim, n), b), [t]).states[0]
        mag = magnus_oracle(n, lam, omega, t, b)
        closed = QuantumState.normalized(
            np.concatenate([mag.branches[1].amplitudes, np.zeros(b.dim), mag.branches[-1].amplitudes]), b, 3
        )
        worst = min(worst, fidelity(num, closed))
    p = units.scenario_fig5()
    d = units.derive(p)
    cat_fids = []
    for n in (0, 1):
        b = FockBasis(default_fock_dim(d.D_m / d.a2, n), p.omega_m2, p.mass)
        H = build_hamiltonian(HamiltonianSpec("spin_mech", p.omega_m2, d.lam), b)
        num = evolve(H, spin_superposition_state(fock_vector(b.dim, n), b), [math.pi / p.omega_m2]).states[0]
        cat_fids.append(fidelity(num, cat_state(n, p, b)))
    report(capsys, 5, [
        (f"min fidelity over 100 draws 1 - {1 - worst:.1e} >= 1 - 1e-8", worst >= 1 - 1e-8),
        (f"t = pi/omega vs displaced-Fock cat, n = 0, 1: 1 - {1 - min(cat_fids):.1e} >= 1 - 1e-6", min(cat_fids) >= 1 - 1e-6),
    ])


def test_06_interference_oracle(capsys):
    p = units.scenario_fig5()
    d = units.derive(p)
    t0 = time.perf_counter()
    plus = cat_pipeline(0, p, 1, grid=DEFAULT_GRID)
    rep = pattern(plus.extras["wavefunction"], p.flight_time, d.D_m)
    elapsed = time.perf_counter() - t0
    ref = analytic_pattern_vacuum(d.b, p.flight_time, d.beta, DEFAULT_GRID, p.mass)
    mask = rep.central(3)
    linf = float(np.max(np.abs(rep.density[mask] - ref.density[mask])) / np.max(ref.density[mask]))
    minus = cat_pipeline(0, p, -1, grid=DEFAULT_GRID)
    rep_m = pattern(minus.extras["wavefunction"], p.flight_time, d.D_m)
    node = float(rep_m.density[DEFAULT_GRID.n_points // 2] / rep_m.density.max())
    period_nm = rep.period_measured * 1e9
    report(capsys, 6, [
        (f"FFT vs closed form L_inf {linf:.1e} <= 1e-6 over six central fringes", linf <= 1e-6),
        (f"period {period_nm:.3f} nm vs 47 nm (rel {rel(period_nm, 47):.2%} <= 2%)", rel(period_nm, 47) <= 0.02),
        (f"psi_- density at z=0 is {node:.1e} of peak < 1e-6", node < 1e-6),
        (f"psi_+ pipeline + flight at 2^16 points in {elapsed:.2f} s < 30 s", elapsed < 30),
    ])


def test_07_thermal_robustness(capsys):
    p = units.scenario_fig5()
    cache = {}
    reps = {n: thermal_pattern(n, p, cache=cache) for n in (0.0, 0.01, 0.1)}
    vac = reps[0.0].density
    diff = float(np.max(np.abs(reps[0.01].density - vac)) / vac.max())
    vis = [reps[n].visibility for n in (0.0, 0.01, 0.1)]
    report(capsys, 7, [
        (f"nbar=0.01 vs vacuum L_inf {diff:.2%} of peak < 2%", diff < 0.02),
        ("visibility {:.7f} > {:.7f} > {:.7f}".format(*vis), vis[0] > vis[1] > vis[2]),
    ])


def test_08_decoherence_rates_with_im_eps_calibrated_blackbody(capsys):
    p = units.scenario_fig5()
    g_gas = estimators.gas_collision_rate(p.P, p.d, p.T_b, p.m_a)
    z = units.derive(p).D_m
    ratio = estimators.blackbody_rate(p.d, p.T_i / 2, 0.1, z) / estimators.blackbody_rate(p.d, p.T_i, 0.1, z)
    im = estimators.calibrate_im_eps(p)
    g_bb = estimators.blackbody_rate(p.d, p.T_i, estimators.CALIBRATED_IM_EPS, z)
    report(capsys, 8, [
        (f"gamma_gas = {g_gas:.3f} Hz vs 8 Hz (rel {rel(g_gas, 8):.1%} <= 15%)", rel(g_gas, 8) <= 0.15),
        (f"gamma_bb(T/2)/gamma_bb(T) = 1/{1 / ratio:.12f}", abs(ratio * 64 - 1) < 1e-12),
        (f"calibrated Im_eps = {im:.4f} (a fitted constant, not a material value) gives gamma_bb = {g_bb:.6f} Hz",
         abs(g_bb - 3) < 1e-9 and abs(im - estimators.CALIBRATED_IM_EPS) < 1e-9),
    ])


def test_09_fock_ladder(capsys):
    w = units.mhz(0.5)
    lam = units.derive(units.scenario_fock()).lam
    fids = [fock_ladder(n, "ideal", omega_m=w, lam=lam).summary["fidelity"] for n in range(1, 6)]
    t1 = jc_time(lam)
    durations_exact = all(t == t1 / math.sqrt(i) for i, t in enumerate(ladder_durations(5, lam), start=1))
    worst = max(abs(1 - f) for f in fids)
    report(capsys, 9, [
        (f"ideal fidelities n=1..5 within {worst:.1e} of 1 (<= 1e-10)", worst <= 1e-10),
        ("t_i == t1/sqrt(i) exactly for i = 1..5", durations_exact),
    ])


def test_10_qnd_phase(capsys):
    p = units.scenario_fock()
    d = units.derive(p)
    w = p.omega_m2
    worst = 0.0
    for n in range(6):
        for t in (1e-6, 1e-5, 5e-5):
            phi = qnd_phase(n, t, omega_m=w, lam=d.lam, detuning=p.qnd_detuning)
            worst = max(worst, abs(phi - 2 * d.chi * n * t))
    two_chi = units.to_hz(2 * abs(d.chi))
    report(capsys, 10, [
        (f"max |phi - 2 chi n t| = {worst:.1e} rad (<= 1e-9)", worst <= 1e-9),
        (f"2|chi|/2pi = {two_chi / 1e3:.2f} kHz within a factor 3 of 25 kHz", 25e3 / 3 <= two_chi <= 75e3),
    ])


def test_11_determinism(capsys, tmp_path):
    mismatched = []
    confs = sorted(CONFIGS.glob("fig*.conf"))
    for conf in confs:
        dirs = [tmp_path / conf.stem / r for r in ("a", "b")]
        for out in dirs:
            assert cli.main(["run", "-c", str(conf), "-o", str(out)]) == 0
        for f in sorted(dirs[0].iterdir()):
            if f.read_bytes() != (dirs[1] / f.name).read_bytes():
                mismatched.append(f"{conf.stem}/{f.name}")
    report(capsys, 11, [
        (f"{len(confs)} shipped fig*.conf re-run byte-identical" + (f" (differ: {mismatched})" if mismatched else ""),
         not mismatched),
    ])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
