import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvcat import units
from nvcat.errors import DomainError
from nvcat.hilbert import parity
from nvcat.protocols import (
    PulseStep,
    cat_pipeline,
    fidelity_scan,
    fock_ladder,
    jc_time,
    ladder_durations,
    ladder_steps,
    qnd_phase,
    qnd_protocol,
    superposition_target,
    superposition_transfer,
)

W = units.mhz(0.5)
LAM = units.derive(units.scenario_fock()).lam
R2 = 1 / math.sqrt(2)


def test_ladder_durations_scale_as_inverse_sqrt():
    t1 = jc_time(LAM)
    assert t1 == math.pi / (2 * LAM)
    for i, t in enumerate(ladder_durations(6, LAM), start=1):
        assert t == t1 / math.sqrt(i)
    assert [s.kind for s in ladder_steps(4, LAM)] == ["jc", "anti_jc", "jc", "anti_jc"]


def test_pulse_step_rejects_negative_duration():
    with pytest.raises(ValueError):
        PulseStep("jc", -1.0)


@pytest.mark.parametrize("n", range(0, 6))
def test_ideal_ladder_is_exact(n):
    r = fock_ladder(n, "ideal", omega_m=W, lam=LAM)
    assert r.summary["fidelity"] == pytest.approx(1, abs=1e-10)


def test_full_ladder_degrades_gracefully():
    f = [fock_ladder(n, "full", omega_m=W, lam=LAM).summary["peak_fidelity"] for n in (1, 3, 5)]
    assert all(x > 0.95 for x in f)
    assert f[0] > f[-1]


def test_ladder_validation():
    with pytest.raises(ValueError):
        fock_ladder(1, "bogus", omega_m=W, lam=LAM)


def test_superposition_target_for_default_input():
    t = superposition_target(-R2, R2, 4)
    assert np.allclose(t, [R2, 1j * R2, 0, 0])


def test_ideal_transfer_is_exact():
    r = superposition_transfer(0.6, 0.8j, "ideal", omega_m=W, lam=W / 10, dim=16)
    assert r.summary["fidelity"] == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        superposition_transfer(1.0, 1.0, "ideal", omega_m=W, lam=W / 10)


def test_fidelity_scan_converged_in_dimension():
    a = fidelity_scan([6.3, 10.0], dim=64)
    b = fidelity_scan([6.3, 10.0], dim=96)
    assert np.allclose(a[:, 1], b[:, 1], atol=1e-10)
    assert a.shape == (2, 3)


def test_fidelity_scan_rejects_strong_coupling():
    with pytest.raises(ValueError):
        fidelity_scan([2.0])


def test_fidelity_scan_empty():
    assert fidelity_scan([]).shape == (0, 3)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 8), t=st.floats(1e-7, 1e-4), det=st.floats(3.0, 20.0))
def test_qnd_phase_is_exactly_linear(n, t, det):
    Omega = W / 2 + det * LAM
    chi = units.qnd_chi(Omega, LAM, W)
    assert qnd_phase(n, t, omega_m=W, lam=LAM, detuning=det) == pytest.approx(2 * chi * n * t, rel=1e-10, abs=1e-12)


def test_qnd_full_model_agrees_in_dispersive_regime():
    for n in (1, 2, 3):
        s = qnd_protocol(n, 20e-6, omega_m=W, lam=LAM).summary
        assert abs(s["full_deviation"]) < 0.1 * abs(s["expected"])
    near = qnd_protocol(2, 20e-6, omega_m=W, lam=LAM, detuning=5).summary
    far = qnd_protocol(2, 20e-6, omega_m=W, lam=LAM, detuning=15).summary
    assert abs(far["full_deviation"] / far["expected"]) < abs(near["full_deviation"] / near["expected"])


def test_qnd_warns_for_small_detuning():
    with pytest.warns(RuntimeWarning):
        qnd_phase(1, 1e-6, omega_m=W, lam=LAM, detuning=2)


def test_cat_pipeline_fig5(fig5_cats):
    s = fig5_cats[1].summary
    d = units.derive(units.scenario_fig5())
    assert s["closed_form_fidelity"] > 1 - 1e-6
    assert s["separation"] == pytest.approx(d.D_m, rel=1e-9)
    assert s["convergence_drift"] < 1e-6
    assert s["coherence_ok"]
    assert s["branch_positions"][0] == pytest.approx(-d.D_m / 2, rel=1e-9)


@pytest.mark.parametrize("sign", [1, -1])
def test_cat_parity(fig5_cats, sign):
    osc = fig5_cats[sign].extras["disentangled"].oscillator
    assert parity(osc.basis).expect(osc).real == pytest.approx(sign, abs=1e-10)


def test_cat_pipeline_requires_decreasing_traps():
    with pytest.raises(DomainError):
        cat_pipeline(0, units.scenario_fig5().with_(omega_m2=units.khz(40)))


@pytest.mark.parametrize("n", [0, 1])
def test_fig3_lobes_separate_most_at_half_period(n, fig3_grid):
    p = units.scenario_fig3()
    d = units.derive(p)
    r = cat_pipeline(n, p, snapshots=5, snapshot_grid=fig3_grid, check_convergence=False)
    dens = r.extras["snapshot_density"]
    z = fig3_grid.z
    means = []
    for rho in dens:
        right = z > 0
        means.append(np.sum(z[right] * rho[right]) / np.sum(rho[right]))
    # t = 0, T/4, T/2, 3T/4, T
    assert np.argmax(means) == 2
    assert means[2] == pytest.approx(d.D_m / 2, rel=0.02)
    assert means[0] == pytest.approx(means[4], rel=1e-6)
