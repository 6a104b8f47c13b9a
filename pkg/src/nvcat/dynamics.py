"""Model Hamiltonians and time evolution.

Two propagation routes are provided and checked against each other:

* ``evolve``: exact exponentiation of a time-independent Hamiltonian in the
  truncated Fock space (eigendecomposition, cached per operator);
* ``magnus_oracle``: the closed-form displaced-oscillator propagator for the
  spin-conditioned linear coupling, where the Magnus series terminates at
  second order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import units
from .errors import BasisMismatchError, BranchResolutionError
from .hilbert import (
    S_Z,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    FockBasis,
    OperatorMatrix,
    QuantumState,
    _ladder,
    displacement,
    fock_vector,
    on_oscillator,
    on_spin,
    parity,
    position_op,
)

KINDS = ("effective", "spin_mech", "jc", "anti_jc", "qnd")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which model Hamiltonian to build.

    kind:
        ``effective``  omega_m a^dag a + Omega sigma_z + lam (sigma_+ + sigma_-)(a + a^dag)
        ``spin_mech``  omega_m a^dag a + lam S_z (a + a^dag)  on |+1>, |0>, |-1>
        ``jc``         lam (sigma_+ a + sigma_- a^dag)       (frame rotating at omega_m)
        ``anti_jc``    lam (sigma_+ a^dag + sigma_- a)
        ``qnd``        chi sigma_z a^dag a, chi from ``units.qnd_chi(Omega, lam, omega_m)``

    ``jc`` / ``anti_jc`` are the resonant limits Omega = +omega_m/2 and
    Omega = -omega_m/2.  Passing any other Omega for them is an error.
    """

    kind: str
    omega_m: float
    lam: float
    Omega: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.kind in ("jc", "anti_jc"):
            want = self.omega_m / 2 if self.kind == "jc" else -self.omega_m / 2
            if self.Omega is None:
                object.__setattr__(self, "Omega", want)
            elif not math.isclose(self.Omega, want, rel_tol=1e-12):
                raise ValueError(f"{self.kind} requires Omega = {want!r}")
        if self.kind in ("effective", "qnd") and self.Omega is None:
            raise ValueError(f"{self.kind} needs Omega")

    @property
    def spin_dim(self) -> int:
        return 3 if self.kind == "spin_mech" else 2

    @property
    def chi(self) -> float:
        return units.qnd_chi(self.Omega, self.lam, self.omega_m)


def build_hamiltonian(spec: HamiltonianSpec, basis: FockBasis) -> OperatorMatrix:
    """H/hbar as a Hermitian matrix (rad/s)."""
    a, ad = _ladder(basis.dim)
    d = basis.dim
    num = ad @ a
    w, lam = spec.omega_m, spec.lam
    if spec.kind == "effective":
        h = (
            w * on_oscillator(num, 2)
            + spec.Omega * on_spin(SIGMA_Z, d)
            + lam * np.kron(SIGMA_PLUS + SIGMA_MINUS, a + ad)
        )
    elif spec.kind == "spin_mech":
        h = w * on_oscillator(num, 3) + lam * np.kron(S_Z, a + ad)
    elif spec.kind == "jc":
        h = lam * (np.kron(SIGMA_PLUS, a) + np.kron(SIGMA_MINUS, ad))
    elif spec.kind == "anti_jc":
        h = lam * (np.kron(SIGMA_PLUS, ad) + np.kron(SIGMA_MINUS, a))
    else:
        h = spec.chi * np.kron(SIGMA_Z, num)
    return OperatorMatrix(h, basis, spec.spin_dim, hermitian=True)


def free_hamiltonian(omega_m: float, Omega: float, basis: FockBasis) -> np.ndarray:
    """Diagonal of omega_m a^dag a + Omega sigma_z (spin_dim 2)."""
    n = np.arange(basis.dim, dtype=float)
    return np.concatenate([omega_m * n + Omega, omega_m * n - Omega])


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    times: np.ndarray
    states: list
    norm_drift: float
    energy_drift: float


def evolve_amplitudes(H: OperatorMatrix, psi0: np.ndarray, times) -> np.ndarray:
    """Raw amplitude array, shape ``(len(times), n)``, of exp(-iHt) psi0."""
    w, v = H.eig
    c = v.conj().T @ psi0
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), w))
    return (phases * c) @ v.T


def evolve(H: OperatorMatrix, psi0: QuantumState, times: Sequence[float]) -> EvolutionResult:
    """psi(t) = exp(-iHt) psi0 for each requested time.

    ``energy_drift`` is measured relative to max(|<H>_0|, max|eigenvalue|)
    so that states with <H> = 0 do not divide by zero.
    """
    if not H.hermitian:
        raise ValueError("evolve needs a Hermitian generator")
    if psi0.basis != H.basis or psi0.spin_dim != H.spin_dim:
        raise BasisMismatchError("initial state and Hamiltonian live in different spaces")
    times = np.asarray(times, dtype=float)
    amps = evolve_amplitudes(H, psi0.amplitudes, times)
    amps[times == 0] = psi0.amplitudes
    norms = np.linalg.norm(amps, axis=1)
    energies = np.real(np.einsum("ti,ij,tj->t", amps.conj(), H.entries, amps))
    e0 = float(np.real(H.expect(psi0)))
    scale = max(abs(e0), float(np.max(np.abs(H.eig[0]))), 1e-300)
    states = [QuantumState(row, psi0.basis, psi0.spin_dim) for row in amps]
    return EvolutionResult(
        times=times,
        states=states,
        norm_drift=float(np.max(np.abs(1 - norms))) if len(times) else 0.0,
        energy_drift=float(np.max(np.abs(energies - e0)) / scale) if len(times) else 0.0,
    )


# ---------------------------------------------------------------------------
# Closed-form propagator for omega a^dag a + lam S_z (a + a^dag)


@dataclass(frozen=True, eq=False)
class MagnusResult:
    """Branch states for S_z = +1 and S_z = -1 and the common phase exponent.

    ``global_phase`` is the second-order Magnus term (purely imaginary);
    the exact propagator on each branch is ``exp(global_phase) * U``.
    """

    branches: dict
    global_phase: complex
    alpha: complex


def magnus_alpha(lam: float, omega_m: float, t: float, sz: int = 1) -> complex:
    return sz * lam * (np.exp(-1j * omega_m * t) - 1) / omega_m


def magnus_phase(lam: float, omega_m: float, t: float) -> complex:
    return 1j * lam**2 * (t / omega_m - math.sin(omega_m * t) / omega_m**2)


def magnus_operator(lam: float, omega_m: float, t: float, basis: FockBasis, sz: int) -> np.ndarray:
    """exp(-i omega a^dag a t) exp(alpha a - alpha* a^dag), without the global phase."""
    alpha = magnus_alpha(lam, omega_m, t, sz)
    # exp(alpha a - alpha* a^dag) = D(-alpha*)
    d = displacement(basis, -np.conj(alpha)).entries
    rot = np.exp(-1j * omega_m * t * np.arange(basis.dim))
    return rot[:, None] * d


def magnus_oracle(n, lam: float, omega_m: float, t: float, basis: FockBasis) -> MagnusResult:
    """Apply the closed-form propagator to ``|n>`` (or any oscillator vector).

    At t = pi/omega_m this is (-1)^(a^dag a) exp(±(2 lam/omega_m)(a^dag - a)).
    """
    vec = fock_vector(basis.dim, n) if np.isscalar(n) else np.asarray(n, dtype=complex)
    branches = {}
    for sz in (1, -1):
        out = magnus_operator(lam, omega_m, t, basis, sz) @ vec
        branches[sz] = QuantumState.normalized(out, basis)
    return MagnusResult(branches, magnus_phase(lam, omega_m, t), magnus_alpha(lam, omega_m, t))


def default_fock_dim(separation_over_a: float, n: int = 0, minimum: int = 64) -> int:
    """max(64, ceil(4 (D/4a)^2) + 20), widened by 4n for excited initial states."""
    alpha = separation_over_a / 4.0
    return max(minimum, int(math.ceil(4 * alpha**2)) + 20 + 4 * n)


def cat_branches(osc: np.ndarray, lam: float, omega: float, basis: FockBasis):
    """(-1)^N D(±2 lam/omega) applied to an oscillator vector, for S_z = +1, -1."""
    par = parity(basis).entries.diagonal()
    beta = 2 * lam / omega
    plus = par * (displacement(basis, beta).entries @ osc)
    minus = par * (displacement(basis, -beta).entries @ osc)
    return plus, minus


def cat_state(n, params: units.ExperimentParams, basis: FockBasis) -> QuantumState:
    """(|+1>|D/2>_n + |-1>|-D/2>_n)/sqrt(2) built from parity and displacements.

    With the branch labels used here, positive coupling puts the |+1>
    component at position -D_m/2 and the |-1> component at +D_m/2.
    """
    if not math.isclose(basis.omega, params.omega_m2, rel_tol=1e-12):
        raise BasisMismatchError("cat_state needs the basis of the final trap omega_m2")
    lam = units.coupling_lambda(params.G, params.mass, params.omega_m2)
    osc = fock_vector(basis.dim, n) if np.isscalar(n) else np.asarray(n, dtype=complex)
    plus, minus = cat_branches(osc, lam, params.omega_m2, basis)
    amp = np.concatenate([plus, np.zeros(basis.dim), minus]) / math.sqrt(2)
    return QuantumState.normalized(amp, basis, 3)


def spin_superposition_state(osc, basis: FockBasis) -> QuantumState:
    """(|+1> + |-1>)/sqrt(2) ⊗ osc."""
    osc = osc.amplitudes if isinstance(osc, QuantumState) else np.asarray(osc, dtype=complex)
    amp = np.concatenate([osc, np.zeros(basis.dim), osc]) / math.sqrt(2)
    return QuantumState.normalized(amp, basis, 3)


# ---------------------------------------------------------------------------
# Conditional spin flip


@dataclass(frozen=True, eq=False)
class Disentangled:
    """|0> ⊗ (branch(+1) + sign * branch(-1)) / norm and diagnostics."""

    state: QuantumState
    oscillator: QuantumState
    splitting: float
    branch_overlap: complex
    sign: int


def disentangle(
    state: QuantumState,
    sign: int = 1,
    *,
    G: float | None = None,
    linewidth: float = units.khz(1.0),
    min_ratio: float = 100.0,
) -> Disentangled:
    """Map |+1>|B+> -> |0>|B+> and |-1>|B-> -> sign |0>|B->, ideally.

    The two pulses are only selective if the Zeeman splitting between the
    spatially separated branches exceeds ``min_ratio`` linewidths.  The
    splitting is g_s mu_B G times the branch separation; when ``G`` is not
    given no check is made.  Identical branches need no selectivity.
    """
    if state.spin_dim != 3:
        raise BasisMismatchError("disentangle needs a spin-1 state")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    c = state.components
    if np.linalg.norm(c[1]) > 1e-9:
        raise BranchResolutionError("state already has population in |0>")
    bp, bm = c[0], c[2]
    np_, nm = np.linalg.norm(bp), np.linalg.norm(bm)
    if np_ < 1e-12 or nm < 1e-12:
        raise BranchResolutionError("both spin branches must be populated")
    xop = position_op(state.basis).entries
    zp = np.real(np.vdot(bp, xop @ bp)) / np_**2
    zm = np.real(np.vdot(bm, xop @ bm)) / nm**2
    separation = abs(zp - zm)
    splitting = units.spin_splitting(G, separation) if G is not None else math.nan
    identical = np.allclose(bp / np_, bm / nm, atol=1e-12)
    if G is not None and not identical and splitting < min_ratio * linewidth:
        raise BranchResolutionError(
            f"spin splitting {units.to_hz(splitting):.3g} Hz is below {min_ratio:g} x linewidth "
            f"({units.to_hz(linewidth):.3g} Hz); the pulses cannot address one branch"
        )
    overlap = complex(np.vdot(bp / np_, bm / nm))
    osc = bp + sign * bm
    osc_state = QuantumState.normalized(osc, state.basis)
    full = np.concatenate([np.zeros_like(osc), osc_state.amplitudes, np.zeros_like(osc)])
    return Disentangled(QuantumState(full, state.basis, 3), osc_state, splitting, overlap, sign)
