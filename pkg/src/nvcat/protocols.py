"""Experiment sequences built from the dynamics primitives.

``mode="ideal"`` uses the resonant JC / anti-JC Hamiltonians directly.
``mode="full"`` evolves under the effective two-level Hamiltonian with the
counter-rotating terms kept (Omega = ±omega_m/2 per step) and reports
fidelities in the frame rotating with omega_m a^dag a + Omega sigma_z.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import units
from .dynamics import (
    HamiltonianSpec,
    build_hamiltonian,
    cat_branches,
    default_fock_dim,
    disentangle,
    evolve,
    evolve_amplitudes,
    free_hamiltonian,
    spin_superposition_state,
)
from .errors import TruncationError
from .grid import GridSpec
from .hilbert import (
    FockBasis,
    QuantumState,
    fidelity,
    fock_vector,
    frame_change,
    position_op,
    spin_vector,
    to_grid,
)

MODES = ("ideal", "full")
# transfer pulses do not care about the mass; it only labels the basis
_UNIT_MASS = 1.0


@dataclass(frozen=True)
class PulseStep:
    """One segment of a piecewise-constant sequence.

    kind: ``jc``, ``anti_jc``, ``qnd_hold``, ``idle``, ``spin_pulse``
    (instantaneous spin unitary in ``payload``), ``frame_change`` (new trap
    frequency in ``payload``) or ``set_spin`` (spin ket in ``payload``).
    """

    kind: str
    duration: float = 0.0
    payload: object = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("durations must be non-negative")


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    final_state: QuantumState
    fidelity_series: np.ndarray  # columns: t [s], F
    summary: dict
    extras: dict = field(default_factory=dict)


def jc_time(lam: float) -> float:
    """t1 = pi / (2 lam): a full |+,0> -> |-,1> transfer."""
    return math.pi / (2 * lam)


def ladder_durations(n_target: int, lam: float) -> list[float]:
    t1 = jc_time(lam)
    return [t1 / math.sqrt(i) for i in range(1, n_target + 1)]


def ladder_steps(n_target: int, lam: float) -> list[PulseStep]:
    """JC on odd steps, anti-JC on even steps, step i lasting t1/sqrt(i)."""
    return [
        PulseStep("jc" if i % 2 == 1 else "anti_jc", t)
        for i, t in enumerate(ladder_durations(n_target, lam), start=1)
    ]


@functools.lru_cache(maxsize=64)
def _hamiltonian(kind, omega_m, lam, Omega, dim, mode):
    basis = FockBasis(dim, omega_m, _UNIT_MASS)
    if mode == "full" and kind in ("jc", "anti_jc"):
        sign = 1 if kind == "jc" else -1
        return build_hamiltonian(HamiltonianSpec("effective", omega_m, lam, sign * omega_m / 2), basis)
    return build_hamiltonian(HamiltonianSpec(kind, omega_m, lam, Omega), basis)


def _frame_diag(kind, omega_m, dim):
    """Diagonal of the rotating-frame generator for a full-mode step."""
    basis = FockBasis(dim, omega_m, _UNIT_MASS)
    sign = 1 if kind == "jc" else -1
    return free_hamiltonian(omega_m, sign * omega_m / 2, basis)


def _sample_count(window: float, lam: float, omega_m: float) -> int:
    # 400 samples per JC period, and at least 40 per counter-rotating period pi/omega_m
    per_jc = 400 * window / (2 * math.pi / lam)
    per_fast = 40 * window / (math.pi / omega_m)
    return int(math.ceil(max(per_jc, per_fast, 50))) + 1


def _refine_peak(times, values, f):
    """Best sample, improved by evaluating ``f`` at the parabolic vertex."""
    i = int(np.argmax(values))
    best_t, best_f = float(times[i]), float(values[i])
    if 0 < i < len(values) - 1:
        y0, y1, y2 = values[i - 1], values[i], values[i + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            h = times[i + 1] - times[i]
            t_star = times[i] + 0.5 * h * (y0 - y2) / den
            f_star = f(t_star)
            if f_star > best_f:
                best_t, best_f = float(t_star), float(f_star)
    return best_t, best_f


def run_sequence(
    steps, state: QuantumState, omega_m: float, lam: float, mode: str = "ideal", Omega: float | None = None
):
    """Apply ``steps`` to ``state``; returns (lab-frame state, accumulated frame phases).

    The frame phase vector ``acc`` satisfies psi_rot = exp(i acc) psi_lab.
    Only the spin_dim 2 kinds and ``spin_pulse`` / ``set_spin`` are
    supported here; the spin-1 cat sequence lives in ``cat_pipeline``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    dim = state.basis.dim
    amp = state.amplitudes.copy()
    acc = np.zeros(amp.size)
    for step in steps:
        if step.kind in ("jc", "anti_jc", "qnd_hold"):
            kind = "qnd" if step.kind == "qnd_hold" else step.kind
            H = _hamiltonian(kind, omega_m, lam, Omega if kind == "qnd" else None, dim, mode)
            amp = evolve_amplitudes(H, amp, [step.duration])[0]
            if mode == "full" and kind != "qnd":
                acc = acc + _frame_diag(kind, omega_m, dim) * step.duration
        elif step.kind == "idle":
            continue
        elif step.kind == "spin_pulse":
            u = np.asarray(step.payload, dtype=complex)
            amp = np.kron(u, np.eye(dim)) @ amp
        elif step.kind == "set_spin":
            osc = amp.reshape(state.spin_dim, dim)
            if np.count_nonzero(np.linalg.norm(osc, axis=1) > 1e-12) > 1:
                raise ValueError("set_spin needs a spin-product state")
            osc = osc[np.argmax(np.linalg.norm(osc, axis=1))]
            amp = np.kron(np.asarray(step.payload, dtype=complex), osc / np.linalg.norm(osc))
        else:
            raise ValueError(f"step kind {step.kind!r} not supported by run_sequence")
    return QuantumState.normalized(amp, state.basis, state.spin_dim), acc


def fock_ladder(n_target: int, mode: str = "ideal", *, omega_m: float, lam: float, dim: int | None = None) -> ProtocolResult:
    """Climb from |+>|0> to |n_target> by alternating JC and anti-JC pulses.

    The last pulse is also scanned over [0.5, 1.5] of its nominal duration
    and the best phonon-number fidelity is reported as ``peak_fidelity``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    dim = dim or max(64, 2 * n_target + 20)
    if n_target >= dim // 2:
        raise TruncationError(f"n_target={n_target} needs dim > {2 * n_target}")
    basis = FockBasis(dim, omega_m, _UNIT_MASS)
    psi0 = QuantumState(np.kron(spin_vector("+"), fock_vector(dim, 0)), basis, 2)
    target = fock_vector(dim, n_target)
    steps = ladder_steps(n_target, lam)
    durations = [s.duration for s in steps]
    if n_target == 0:
        return ProtocolResult(psi0, np.array([[0.0, 1.0]]), {"fidelity": 1.0, "peak_fidelity": 1.0, "durations": []})

    before, acc = run_sequence(steps[:-1], psi0, omega_m, lam, mode)
    last = steps[-1]
    H = _hamiltonian(last.kind, omega_m, lam, None, dim, mode)
    tn = last.duration

    def fid(t):
        a = evolve_amplitudes(H, before.amplitudes, [t])[0]
        return QuantumState.normalized(a, basis, 2).phonon_fidelity(target)

    times = np.linspace(0.5 * tn, 1.5 * tn, _sample_count(tn, lam * math.sqrt(n_target), omega_m))
    amps = evolve_amplitudes(H, before.amplitudes, times)
    comps = amps.reshape(len(times), 2, dim)
    series = np.sum(np.abs(comps[:, :, n_target]) ** 2, axis=1)
    peak_t, peak_f = _refine_peak(times, series, fid)
    final, _ = run_sequence([last], before, omega_m, lam, mode)
    summary = {
        "fidelity": final.phonon_fidelity(target),
        "peak_fidelity": peak_f,
        "peak_time": peak_t,
        "durations": durations,
        "s": omega_m / lam,
    }
    return ProtocolResult(final, np.column_stack([times, series]), summary)


def superposition_target(c0: complex, c1: complex, dim: int) -> np.ndarray:
    """Phonon state c1|0> - i c0|1> reached from (c0|+> + c1|->)|0> after t1.

    The sign of the i follows from exp(-iHt) with lam > 0.
    """
    t = np.zeros(dim, dtype=complex)
    t[0], t[1] = c1, -1j * c0
    return t


def superposition_transfer(
    c0: complex,
    c1: complex,
    mode: str = "ideal",
    *,
    omega_m: float,
    lam: float,
    dim: int = 64,
    window: tuple[float, float] = (0.5, 1.5),
) -> ProtocolResult:
    """One JC pulse mapping the spin superposition onto phonons 0 and 1.

    Reports ``fidelity`` at t1 and ``peak_fidelity`` over ``window`` (in
    units of t1), with the spin traced out and the free rotation removed.
    """
    if not math.isclose(abs(c0) ** 2 + abs(c1) ** 2, 1.0, abs_tol=1e-9):
        raise ValueError("|c0|^2 + |c1|^2 must be 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    basis = FockBasis(dim, omega_m, _UNIT_MASS)
    psi0 = np.kron(c0 * spin_vector("+") + c1 * spin_vector("-"), fock_vector(dim, 0))
    target = superposition_target(c0, c1, dim)
    H = _hamiltonian("jc", omega_m, lam, None, dim, mode)
    frame = _frame_diag("jc", omega_m, dim) if mode == "full" else np.zeros(2 * dim)
    t1 = jc_time(lam)

    def fids(times):
        amps = evolve_amplitudes(H, psi0, times) * np.exp(1j * np.outer(times, frame))
        comps = amps.reshape(len(times), 2, dim)
        return np.sum(np.abs(comps @ target.conj()) ** 2, axis=1)

    lo, hi = window
    times = np.linspace(lo * t1, hi * t1, _sample_count((hi - lo) * t1, lam, omega_m))
    series = fids(times)
    peak_t, peak_f = _refine_peak(times, series, lambda t: fids(np.array([t]))[0])
    final_amp = evolve_amplitudes(H, psi0, [t1])[0] * np.exp(1j * frame * t1)
    final = QuantumState.normalized(final_amp, basis, 2)
    summary = {
        "fidelity": float(fids(np.array([t1]))[0]),
        "peak_fidelity": float(min(peak_f, 1.0)),
        "peak_time": peak_t,
        "t1": t1,
        "s": omega_m / lam,
    }
    return ProtocolResult(final, np.column_stack([times, series]), summary)


def fidelity_scan(s_values, *, omega_m: float = units.mhz(0.5), dim: int = 64, c0=-1 / math.sqrt(2), c1=1 / math.sqrt(2)):
    """Peak transfer fidelity versus s = omega_m / lam under the full model.

    The default input (|+> - |->)/sqrt(2) = |-1> is mapped onto
    (|0> + i|1>)/sqrt(2).  Returns an array with columns s, peak F, peak t/t1.
    """
    rows = []
    for s in s_values:
        if not s > 2:
            raise ValueError("s must exceed 2")
        lam = omega_m / s
        r = superposition_transfer(c0, c1, "full", omega_m=omega_m, lam=lam, dim=dim)
        rows.append((s, r.summary["peak_fidelity"], r.summary["peak_time"] / r.summary["t1"]))
    return np.array(rows, dtype=float).reshape(-1, 3)


# ---------------------------------------------------------------------------
# QND phonon-number readout


def qnd_Omega(omega_m: float, lam: float, detuning: float) -> float:
    """Drive strength with ||Omega| - omega_m/2| = detuning * lam, Omega > 0."""
    return omega_m / 2 + detuning * lam


def _relative_phase_track(amps, dim, n, times):
    comps = amps.reshape(len(times), 2, dim)
    ratio = comps[:, 1, n] / comps[:, 0, n]
    return np.unwrap(np.angle(ratio))


def qnd_phase(n: int, hold_time: float, *, omega_m: float, lam: float, detuning: float = 5.0) -> float:
    """Relative phase between |-> and |+> after holding (|+> + |->)|n>/sqrt(2).

    Evolves under chi sigma_z a^dag a, which gives exactly 2 chi n t.
    """
    if detuning < 3:
        warnings.warn("QND detuning below 3 lambda: dispersive approximation is poor", RuntimeWarning, stacklevel=2)
    Omega = qnd_Omega(omega_m, lam, detuning)
    dim = n + 2
    H = _hamiltonian("qnd", omega_m, lam, Omega, dim, "ideal")
    chi = units.qnd_chi(Omega, lam, omega_m)
    steps = int(math.ceil(abs(2 * chi * n * hold_time) / (math.pi / 2))) + 2
    times = np.linspace(0.0, hold_time, steps)
    psi0 = np.kron(np.array([1, 1]) / math.sqrt(2), fock_vector(dim, n))
    amps = evolve_amplitudes(H, psi0, times)
    return float(_relative_phase_track(amps, dim, n, times)[-1])


def qnd_protocol(n: int, hold_time: float, *, omega_m: float, lam: float, detuning: float = 5.0, dim: int | None = None) -> ProtocolResult:
    """QND phase plus a companion run under the full two-level Hamiltonian.

    The full model adds an n-independent shift chi to the phase rate, so the
    comparison uses phase(n) - phase(0).
    """
    Omega = qnd_Omega(omega_m, lam, detuning)
    chi = units.qnd_chi(Omega, lam, omega_m)
    phase = qnd_phase(n, hold_time, omega_m=omega_m, lam=lam, detuning=detuning)
    dim = dim or n + 40
    basis = FockBasis(dim, omega_m, _UNIT_MASS)
    H = build_hamiltonian(HamiltonianSpec("effective", omega_m, lam, Omega), basis)
    frame = free_hamiltonian(omega_m, Omega, basis)
    fast = 2 * Omega + omega_m
    steps = int(math.ceil(hold_time / (math.pi / fast) * 8)) + 2
    times = np.linspace(0.0, hold_time, steps)

    def track(k):
        psi0 = np.kron(np.array([1, 1]) / math.sqrt(2), fock_vector(dim, k))
        amps = evolve_amplitudes(H, psi0, times) * np.exp(1j * np.outer(times, frame))
        return _relative_phase_track(amps, dim, k, times)

    full_n, full_0 = track(n), track(0)
    differential = full_n - full_0
    final = QuantumState.normalized(np.kron(np.array([1, np.exp(1j * phase)]) / math.sqrt(2), fock_vector(dim, n)), basis, 2)
    summary = {
        "chi": chi,
        "phase": phase,
        "expected": 2 * chi * n * hold_time,
        "full_phase": float(full_n[-1]),
        "full_differential": float(differential[-1]),
        "full_deviation": float(differential[-1] - 2 * chi * n * hold_time),
    }
    series = np.column_stack([times, differential])
    return ProtocolResult(final, series, summary)


# ---------------------------------------------------------------------------
# Spatial cat state


def _cat_core(n, params: units.ExperimentParams, dim, snapshot_times=()):
    """Numeric cat preparation.  Returns (state at pi/omega_m2, analytic state, snapshots)."""
    m = params.mass
    lam = units.coupling_lambda(params.G, m, params.omega_m2)
    b1 = FockBasis(dim, params.omega_m1, m)
    # omega_m0 -> omega_m1: ideal state-preserving sweep, |n>_0 -> |n>_1
    osc1 = QuantumState(fock_vector(dim, n), b1)
    # omega_m1 -> omega_m2: sudden, the wavefunction is kept
    osc2 = frame_change(osc1, params.omega_m2)
    b2 = osc2.basis
    psi = spin_superposition_state(osc2, b2)
    H = build_hamiltonian(HamiltonianSpec("spin_mech", params.omega_m2, lam), b2)
    t_half = math.pi / params.omega_m2
    res = evolve(H, psi, [t_half, *snapshot_times])
    numeric = res.states[0]
    plus, minus = cat_branches(osc2.amplitudes, lam, params.omega_m2, b2)
    analytic = QuantumState.normalized(np.concatenate([plus, np.zeros(dim), minus]), b2, 3)
    return numeric, analytic, res, lam


def cat_pipeline(
    n: int,
    params: units.ExperimentParams,
    sign: int = 1,
    *,
    dim: int | None = None,
    grid: GridSpec | None = None,
    snapshots: int = 0,
    snapshot_grid: GridSpec | None = None,
    check_convergence: bool = True,
) -> ProtocolResult:
    """Prepare |psi_±>_n: sweep, spin flip + trap drop, half-period wait, disentangle.

    ``snapshots`` > 0 records the spin-traced position density at that many
    times spanning one full period of the final trap (needs ``snapshot_grid``).
    """
    params.check_cat_ordering()
    d = units.derive(params)
    squeeze = params.omega_m1 / params.omega_m2
    if dim is None:
        dim = default_fock_dim(d.D_m / d.a2, n)
        if squeeze > 1:
            dim += int(math.ceil(20 * squeeze))
    period = 2 * math.pi / params.omega_m2
    snap_t = np.linspace(0, period, snapshots) if snapshots else np.array([])
    numeric, analytic, res, lam = _cat_core(n, params, dim, snap_t)
    closed_fid = fidelity(numeric, analytic)
    if closed_fid < 1 - 1e-6:
        raise TruncationError(f"numeric cat state deviates from the closed form (fidelity {closed_fid:.9f})")
    drift = math.nan
    if check_convergence:
        big = int(math.ceil(1.5 * dim))
        numeric_big, _, _, _ = _cat_core(n, params, big)
        drift = float(np.linalg.norm(numeric.pad(big).amplitudes - numeric_big.amplitudes))
        if drift >= 1e-6:
            raise TruncationError(f"cat state not converged in Fock dimension {dim} (drift {drift:.2e})")
    dis = disentangle(numeric, sign, G=params.G if params.G > 0 else None)
    c = numeric.components
    xs = []
    x = position_op(numeric.basis).entries
    for branch in (c[0], c[2]):
        nb = np.vdot(branch, branch).real
        xs.append(np.vdot(branch, x @ branch).real / nb)
    t_half = math.pi / params.omega_m2
    summary = {
        "n": n,
        "sign": sign,
        "lam": lam,
        "D_m": d.D_m,
        "a2": d.a2,
        "D_m_over_a2": d.D_m / d.a2,
        "separation": abs(xs[0] - xs[1]),
        "branch_positions": tuple(xs),
        "prep_time": t_half,
        "T2_budget": t_half / params.T2,
        "coherence_ok": t_half < 0.1 * params.T2,
        "closed_form_fidelity": closed_fid,
        "splitting": dis.splitting,
        "branch_overlap": abs(dis.branch_overlap),
        "dim": dim,
        "convergence_drift": drift,
        "norm_drift": res.norm_drift,
    }
    extras = {"entangled_state": numeric, "disentangled": dis}
    if grid is not None:
        extras["wavefunction"] = to_grid(dis.oscillator, grid)
    if snapshots:
        if snapshot_grid is None:
            raise ValueError("snapshots need snapshot_grid")
        dens = []
        for st in res.states[1:]:
            dens.append(to_grid(st, snapshot_grid).density())
        extras["snapshot_times"] = snap_t
        extras["snapshot_density"] = np.array(dens)
        extras["snapshot_grid"] = snapshot_grid
    series = np.array([[t_half, closed_fid]])
    return ProtocolResult(dis.state, series, summary, extras)
